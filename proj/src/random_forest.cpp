// random_forest.cpp — Regression forest: bootstrap samples, variance-reduction splits

#include "sdfkit/random_forest.hpp"

#include "sdfkit/errors.hpp"
#include "sdfkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdfkit {

double RegressionTree::predict(std::span<const double> x) const {
    if (nodes.empty()) throw InputError("RegressionTree: empty tree");
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestOptions& opts, std::size_t n_try, Rng& rng)
        : X_(X), y_(y), opts_(opts), n_try_(n_try), rng_(rng), features_(static_cast<std::size_t>(X.cols())) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    RegressionTree build(std::vector<std::size_t> rows) {
        RegressionTree t;
        grow(t, std::move(rows), 0);
        return t;
    }

private:
    int grow(RegressionTree& t, std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        double sum = 0.0;
        double sq = 0.0;
        for (auto r : rows) {
            sum += y_(static_cast<Eigen::Index>(r));
            sq += y_(static_cast<Eigen::Index>(r)) * y_(static_cast<Eigen::Index>(r));
        }
        const double n = static_cast<double>(rows.size());
        t.nodes[static_cast<std::size_t>(id)].value = sum / n;
        const double sse = sq - sum * sum / n;
        if (depth >= opts_.max_depth || rows.size() < 2 * opts_.min_leaf || sse <= 1e-14 * std::max(sq, 1e-300)) {
            return id;
        }

        // Partial Fisher-Yates picks n_try distinct candidate features.
        for (std::size_t k = 0; k < n_try_; ++k) std::swap(features_[k], features_[k + rng_.below(features_.size() - k)]);

        double best_score = sum * sum / n;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, double>> xy(rows.size());
        const std::size_t min_leaf = std::max<std::size_t>(opts_.min_leaf, 1);
        for (std::size_t k = 0; k < n_try_; ++k) {
            const auto f = static_cast<Eigen::Index>(features_[k]);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                xy[i] = {X_(static_cast<Eigen::Index>(rows[i]), f), y_(static_cast<Eigen::Index>(rows[i]))};
            }
            std::sort(xy.begin(), xy.end());
            double left = 0.0;
            for (std::size_t i = 0; i + 1 < xy.size(); ++i) {
                left += xy[i].second;
                const std::size_t nl = i + 1;
                const std::size_t nr = xy.size() - nl;
                if (nl < min_leaf || nr < min_leaf || !(xy[i].first < xy[i + 1].first)) continue;
                const double right = sum - left;
                const double score = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr);
                if (score > best_score * (1.0 + 1e-12)) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    // The midpoint of adjacent doubles can round up to the larger one.
                    const double mid = xy[i].first + 0.5 * (xy[i + 1].first - xy[i].first);
                    best_threshold = mid < xy[i + 1].first ? mid : xy[i].first;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> lrows;
        std::vector<std::size_t> rrows;
        for (auto r : rows) {
            (X_(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? lrows : rrows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(t, std::move(lrows), depth + 1);
        const int r = grow(t, std::move(rrows), depth + 1);
        auto& node = t.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    const ForestOptions& opts_;
    std::size_t n_try_;
    Rng& rng_;
    std::vector<std::size_t> features_;
};

// Rows in lexicographic order of (features, targets), so the fit does not depend on input order.
std::vector<std::size_t> canonical_order(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(X.rows()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            if (X(ia, j) != X(ib, j)) return X(ia, j) < X(ib, j);
        }
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            if (Y(ia, j) != Y(ib, j)) return Y(ia, j) < Y(ib, j);
        }
        return false;
    };
    std::stable_sort(idx.begin(), idx.end(), less);
    return idx;
}

} // namespace

void RandomForest::fit(const Eigen::MatrixXd& X_in, const Eigen::MatrixXd& Y_in) {
    if (X_in.rows() == 0 || X_in.rows() != Y_in.rows()) throw InputError("RandomForest::fit: need matching, nonempty X and Y");
    if (opts_.n_trees == 0) throw InputError("RandomForest::fit: n_trees must be positive");
    const auto order = canonical_order(X_in, Y_in);
    Eigen::MatrixXd X(X_in.rows(), X_in.cols());
    Eigen::MatrixXd Y(Y_in.rows(), Y_in.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = X_in.row(static_cast<Eigen::Index>(order[i]));
        Y.row(static_cast<Eigen::Index>(i)) = Y_in.row(static_cast<Eigen::Index>(order[i]));
    }

    n_features_ = static_cast<std::size_t>(X.cols());
    const std::size_t n_try =
        opts_.max_features > 0
            ? std::min(opts_.max_features, n_features_)
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n_features_)))));
    const std::size_t n = static_cast<std::size_t>(X.rows());
    trees_.assign(static_cast<std::size_t>(Y.cols()), {});
    for (Eigen::Index out = 0; out < Y.cols(); ++out) {
        const Eigen::VectorXd y = Y.col(out);
        auto& forest = trees_[static_cast<std::size_t>(out)];
        forest.reserve(opts_.n_trees);
        for (std::size_t t = 0; t < opts_.n_trees; ++t) {
            Rng rng(derive_seed(opts_.seed, static_cast<std::uint64_t>(out) * 1000003ULL + t));
            std::vector<std::size_t> rows(n);
            for (auto& r : rows) r = rng.below(n);
            TreeBuilder builder(X, y, opts_, n_try, rng);
            forest.push_back(builder.build(std::move(rows)));
        }
    }
}

std::vector<double> RandomForest::predict(std::span<const double> x) const {
    if (trees_.empty()) throw InputError("RandomForest::predict: model is not fitted");
    if (x.size() != n_features_) throw InputError("RandomForest::predict: feature count mismatch");
    std::vector<double> out(trees_.size(), 0.0);
    for (std::size_t k = 0; k < trees_.size(); ++k) {
        for (const auto& t : trees_[k]) out[k] += t.predict(x);
        out[k] /= static_cast<double>(trees_[k].size());
    }
    return out;
}

Eigen::MatrixXd RandomForest::predict(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(trees_.size()));
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        const auto p = predict(row);
        for (std::size_t k = 0; k < p.size(); ++k) out(i, static_cast<Eigen::Index>(k)) = p[k];
    }
    return out;
}

void RandomForest::set_trees(std::vector<std::vector<RegressionTree>> trees, std::size_t n_features) {
    for (const auto& f : trees) {
        if (f.empty()) throw InputError("RandomForest::set_trees: every output needs at least one tree");
    }
    trees_ = std::move(trees);
    n_features_ = n_features;
}

nlohmann::json to_json(const RandomForest& f) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& forest : f.trees()) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : forest) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
            trees.push_back(nodes);
        }
        outputs.push_back(trees);
    }
    const auto& o = f.options();
    return nlohmann::json{{"n_trees", o.n_trees},     {"max_depth", o.max_depth}, {"min_leaf", o.min_leaf},
                          {"max_features", o.max_features}, {"seed", o.seed},     {"n_features", f.n_features()},
                          {"outputs", outputs}};
}

RandomForest forest_from_json(const nlohmann::json& j) {
    ForestOptions o;
    o.n_trees = j.at("n_trees").get<std::size_t>();
    o.max_depth = j.at("max_depth").get<std::size_t>();
    o.min_leaf = j.at("min_leaf").get<std::size_t>();
    o.max_features = j.at("max_features").get<std::size_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    std::vector<std::vector<RegressionTree>> trees;
    for (const auto& forest : j.at("outputs")) {
        std::vector<RegressionTree> ts;
        for (const auto& nodes : forest) {
            RegressionTree t;
            for (const auto& n : nodes) {
                t.nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                           n.at(3).get<int>(), n.at(4).get<double>()});
            }
            ts.push_back(std::move(t));
        }
        trees.push_back(std::move(ts));
    }
    RandomForest f(o);
    f.set_trees(std::move(trees), j.at("n_features").get<std::size_t>());
    return f;
}

} // namespace sdfkit
