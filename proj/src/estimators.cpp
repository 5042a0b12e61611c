// estimators.cpp — Parametric SDF inference: multistart least squares and ML regressors

#include "sdfkit/estimators.hpp"

#include "sdfkit/errors.hpp"
#include "sdfkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace sdfkit {

// ----------------------------------------------------------- least squares

namespace {

ChannelContext context_of(const Signal& s) {
    ChannelContext ctx;
    if (s.model == Channel::PD) {
        ctx.bath = s.pd().bath;
        ctx.rho01_abs = s.pd().rho01_abs;
    } else {
        ctx.omega_0 = s.ad().omega_0;
    }
    return ctx;
}

} // namespace

double fit_loss(const Signal& s, Family family, std::span<const double> xi) {
    if (channel_of(family) != s.model) throw InputError("fit_loss: family does not match the signal's channel");
    const ChannelContext ctx = context_of(s);
    try {
        const Signal model = simulate_family(family, xi, s.grid, ctx, ForwardRoute::analytic);
        double acc = 0.0;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double r = model.values[i] - s.values[i];
            acc += r * r;
        }
        return acc / static_cast<double>(s.values.size());
    } catch (const InputError&) {
        return std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
}

FitResult least_squares_fit(const Signal& s, Family family, const ParameterBox& bounds, const FitConfig& cfg) {
    bounds.validate();
    if (bounds.dim() != parameter_names(family).size()) throw InputError("least_squares_fit: box dimension mismatch");
    if (channel_of(family) != s.model) throw InputError("least_squares_fit: family does not match the signal's channel");
    if (cfg.multistart == 0) throw InputError("least_squares_fit: multistart must be positive");

    const Objective f = [&](std::span<const double> xi) { return fit_loss(s, family, xi); };
    FitResult best;
    best.final_loss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < cfg.multistart; ++r) {
        Rng rng(derive_seed(cfg.seed, r));
        std::vector<double> x0(bounds.dim());
        for (std::size_t k = 0; k < x0.size(); ++k) x0[k] = rng.uniform(bounds.low[k], bounds.high[k]);
        const auto res = nelder_mead(f, x0, bounds.low, bounds.high, cfg.simplex);
        best.evaluations += res.evaluations;
        if (res.value < best.final_loss) {
            best.final_loss = res.value;
            best.xi_hat = res.x;
            best.converged = res.converged;
        }
    }
    best.n_restarts_used = cfg.multistart;
    if (std::isfinite(best.final_loss)) {
        NelderMeadOptions polish = cfg.simplex;
        polish.initial_step = 1e-3;
        const auto res = nelder_mead(f, best.xi_hat, bounds.low, bounds.high, polish);
        best.evaluations += res.evaluations;
        if (res.value <= best.final_loss) {
            best.final_loss = res.value;
            best.xi_hat = res.x;
            best.converged = res.converged;
        }
    } else {
        best.xi_hat = bounds.low;
        best.converged = false;
    }
    return best;
}

// -------------------------------------------------------------- regressors

namespace {

void standardise(const Eigen::MatrixXd& A, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
    mean = A.colwise().mean().transpose();
    scale.resize(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const double var = (A.col(j).array() - mean(j)).square().mean();
        scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
}

} // namespace

Eigen::MatrixXd MlpRegressor::predict(const Eigen::MatrixXd& X) const {
    if (static_cast<std::size_t>(X.cols()) != net.input_dim()) throw InputError("MlpRegressor: input length mismatch");
    Eigen::MatrixXd Z = ((X.rowwise() - x_mean.transpose()).array().rowwise() / x_scale.transpose().array()).transpose();
    Eigen::MatrixXd out = net.forward(Z).transpose();
    out = (out.array().rowwise() * y_scale.transpose().array()).matrix();
    out.rowwise() += y_mean.transpose();
    return out;
}

MlpRegressor fit_mlp_regressor(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const MlpRegressorOptions& o) {
    if (X.rows() == 0 || X.rows() != Y.rows()) throw InputError("fit_mlp_regressor: need matching, nonempty X and Y");
    if (o.batch_size == 0 || o.epochs == 0) throw InputError("fit_mlp_regressor: batch size and epochs must be positive");
    MlpRegressor m;
    standardise(X, m.x_mean, m.x_scale);
    standardise(Y, m.y_mean, m.y_scale);
    const Eigen::MatrixXd Z = ((X.rowwise() - m.x_mean.transpose()).array().rowwise() / m.x_scale.transpose().array())
                                  .matrix()
                                  .transpose();
    const Eigen::MatrixXd T = ((Y.rowwise() - m.y_mean.transpose()).array().rowwise() / m.y_scale.transpose().array())
                                  .matrix()
                                  .transpose();

    std::vector<std::size_t> sizes{static_cast<std::size_t>(X.cols())};
    sizes.insert(sizes.end(), o.hidden.begin(), o.hidden.end());
    sizes.push_back(static_cast<std::size_t>(Y.cols()));
    m.net = Mlp::random(sizes, o.activation, derive_seed(o.seed, 1));

    std::vector<double> theta = m.net.flatten();
    Adam adam(theta.size(), o.learning_rate);
    Rng rng(derive_seed(o.seed, 2));
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double decay = std::log(o.final_learning_rate / o.learning_rate) / static_cast<double>(o.epochs);
    Mlp::Tape tape;
    for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
        adam.set_learning_rate(o.learning_rate * std::exp(decay * static_cast<double>(epoch)));
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += o.batch_size) {
            const std::size_t b = std::min(o.batch_size, n - start);
            Eigen::MatrixXd Xb(Z.rows(), static_cast<Eigen::Index>(b));
            Eigen::MatrixXd Tb(T.rows(), static_cast<Eigen::Index>(b));
            for (std::size_t i = 0; i < b; ++i) {
                Xb.col(static_cast<Eigen::Index>(i)) = Z.col(static_cast<Eigen::Index>(order[start + i]));
                Tb.col(static_cast<Eigen::Index>(i)) = T.col(static_cast<Eigen::Index>(order[start + i]));
            }
            m.net.assign(theta);
            const Eigen::MatrixXd out = m.net.forward(Xb, &tape);
            const Eigen::MatrixXd dY = (2.0 / static_cast<double>(b * static_cast<std::size_t>(T.rows()))) * (out - Tb);
            adam.step(theta, m.net.backward(tape, dY));
        }
    }
    m.net.assign(theta);
    return m;
}

std::string to_string(RegressorKind k) { return k == RegressorKind::mlp ? "mlp" : "random_forest"; }

RegressorKind regressor_kind_from_string(const std::string& s) {
    if (s == "mlp") return RegressorKind::mlp;
    if (s == "random_forest" || s == "rf") return RegressorKind::random_forest;
    throw ConfigError("unknown regressor '" + s + "' (expected mlp or random_forest)");
}

RegressorModel fit_regressor(const HyperPoint& hyper, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (const auto* o = std::get_if<MlpRegressorOptions>(&hyper)) return fit_mlp_regressor(X, Y, *o);
    RandomForest f(std::get<ForestOptions>(hyper));
    f.fit(X, Y);
    return f;
}

Eigen::MatrixXd predict(const RegressorModel& m, const Eigen::MatrixXd& X) {
    if (const auto* r = std::get_if<MlpRegressor>(&m)) return r->predict(X);
    const auto& f = std::get<RandomForest>(m);
    if (static_cast<std::size_t>(X.cols()) != f.n_features()) throw InputError("predict: input length mismatch");
    return f.predict(X);
}

std::vector<double> predict_params(const RegressorModel& m, std::span<const double> values) {
    Eigen::MatrixXd X(1, static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) X(0, static_cast<Eigen::Index>(i)) = values[i];
    const Eigen::MatrixXd P = predict(m, X);
    return std::vector<double>(P.data(), P.data() + P.size());
}

TrainedRegressor train_regressor(const std::vector<HyperPoint>& grid, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 std::size_t k, std::uint64_t seed) {
    if (grid.empty()) throw InputError("train_regressor: empty hyperparameter grid");
    if (X.rows() == 0 || X.rows() != Y.rows()) throw InputError("train_regressor: need matching, nonempty X and Y");
    TrainReport report;
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        if ((Y.col(j).array() - Y.col(j).mean()).abs().maxCoeff() == 0.0) {
            report.warnings.push_back("target column " + std::to_string(j) + " has zero variance");
        }
    }
    const auto folds = kfold_split(static_cast<std::size_t>(X.rows()), k, seed);
    auto take = [](const Eigen::MatrixXd& A, const std::vector<std::size_t>& rows) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), A.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = A.row(static_cast<Eigen::Index>(rows[i]));
        return out;
    };
    for (const auto& hyper : grid) {
        double sse = 0.0;
        double count = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<std::size_t> train;
            for (std::size_t g = 0; g < folds.size(); ++g) {
                if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
            }
            const auto model = fit_regressor(hyper, take(X, train), take(Y, train));
            const Eigen::MatrixXd P = predict(model, take(X, folds[f]));
            sse += (P - take(Y, folds[f])).squaredNorm();
            count += static_cast<double>(P.size());
            ++report.fold_models;
        }
        report.cv_mse.push_back(sse / count);
    }
    report.best_index = static_cast<std::size_t>(
        std::min_element(report.cv_mse.begin(), report.cv_mse.end()) - report.cv_mse.begin());
    return TrainedRegressor{fit_regressor(grid[report.best_index], X, Y), std::move(report)};
}

void design_matrix(const Dataset& ds, const std::vector<std::size_t>& rows, Eigen::MatrixXd& X, Eigen::MatrixXd& Y) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    X.resize(n, static_cast<Eigen::Index>(ds.n_times()));
    Y.resize(n, static_cast<Eigen::Index>(ds.spec.box.dim()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& inst = ds.instances.at(rows[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = inst.signal.values[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < Y.cols(); ++j) Y(i, j) = inst.xi[static_cast<std::size_t>(j)];
    }
}

// ----------------------------------------------------------------- metrics

double Metrics::log10_mse() const { return std::log10(mse); }
double Metrics::log10_mae() const { return std::log10(mae); }

Metrics evaluate_metrics(const Eigen::MatrixXd& P, const Eigen::MatrixXd& T) {
    if (P.size() == 0) throw InputError("evaluate_metrics: empty input");
    if (P.rows() != T.rows() || P.cols() != T.cols()) throw InputError("evaluate_metrics: shape mismatch");
    Metrics m;
    const Eigen::ArrayXXd E = (P - T).array();
    m.mse = E.square().mean();
    m.mae = E.abs().mean();
    for (Eigen::Index j = 0; j < E.cols(); ++j) {
        m.mse_per_parameter.push_back(E.col(j).square().mean());
        m.mae_per_parameter.push_back(E.col(j).abs().mean());
    }
    return m;
}

nlohmann::json to_json(const Metrics& m) {
    return nlohmann::json{{"mse", m.mse},
                          {"mae", m.mae},
                          {"log10_mse", m.log10_mse()},
                          {"log10_mae", m.log10_mae()},
                          {"mse_per_parameter", m.mse_per_parameter},
                          {"mae_per_parameter", m.mae_per_parameter}};
}

// --------------------------------------------------------------- benchmark

const BenchmarkCell& BenchmarkResult::cell(const std::string& condition, RegressorKind r) const {
    for (const auto& c : cells) {
        if (c.condition == condition && c.regressor == r) return c;
    }
    throw InputError("benchmark: no cell for " + condition + "/" + to_string(r));
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.conditions.empty() || cfg.regressors.empty()) throw InputError("benchmark: need conditions and regressors");
    BenchmarkResult out;
    out.parameter_names = parameter_names(cfg.dataset.family);
    for (const auto& cond : cfg.conditions) {
        DatasetSpec spec = cfg.dataset;
        spec.noise = cond.noise;
        const Dataset ds = generate_dataset(spec);
        const auto split = holdout_split(ds.size(), cfg.train_fraction, cfg.seed);
        Eigen::MatrixXd Xtr, Ytr, Xte, Yte;
        design_matrix(ds, split.train, Xtr, Ytr);
        design_matrix(ds, split.test, Xte, Yte);
        for (const auto kind : cfg.regressors) {
            std::vector<HyperPoint> grid;
            if (kind == RegressorKind::mlp) {
                grid.assign(cfg.mlp_grid.begin(), cfg.mlp_grid.end());
            } else {
                grid.assign(cfg.forest_grid.begin(), cfg.forest_grid.end());
            }
            auto trained = train_regressor(grid, Xtr, Ytr, cfg.kfold, cfg.seed);
            const Metrics m = evaluate_metrics(predict(trained.model, Xte), Yte);
            out.cells.push_back(BenchmarkCell{cond.name, kind, m, std::move(trained.report)});
        }
    }
    return out;
}

std::vector<std::filesystem::path> write_benchmark(const BenchmarkResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> conditions;
    std::vector<RegressorKind> kinds;
    for (const auto& c : r.cells) {
        if (std::find(conditions.begin(), conditions.end(), c.condition) == conditions.end()) conditions.push_back(c.condition);
        if (std::find(kinds.begin(), kinds.end(), c.regressor) == kinds.end()) kinds.push_back(c.regressor);
    }
    std::vector<std::filesystem::path> files;
    for (const auto& cond : conditions) {
        const auto path = dir / ("metrics_" + cond + ".csv");
        std::ofstream os(path);
        if (!os) throw ConfigError("cannot write " + path.string());
        os.precision(17);
        os << "parameter";
        for (auto k : kinds) os << ',' << to_string(k) << "_log10_mse," << to_string(k) << "_log10_mae";
        os << '\n';
        for (std::size_t p = 0; p <= r.parameter_names.size(); ++p) {
            os << (p < r.parameter_names.size() ? r.parameter_names[p] : "all");
            for (auto k : kinds) {
                const auto& m = r.cell(cond, k).test;
                const double mse = p < r.parameter_names.size() ? m.mse_per_parameter[p] : m.mse;
                const double mae = p < r.parameter_names.size() ? m.mae_per_parameter[p] : m.mae;
                os << ',' << std::log10(mse) << ',' << std::log10(mae);
            }
            os << '\n';
        }
        files.push_back(path);
    }
    return files;
}

} // namespace sdfkit
