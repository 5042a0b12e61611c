// random_forest.hpp — Regression forest: bootstrap samples, variance-reduction splits

#pragma once

#include <Eigen/Dense>

#include "json.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sdfkit {

struct ForestOptions {
    std::size_t n_trees{100};
    std::size_t max_depth{12};
    std::size_t min_leaf{1};
    std::size_t max_features{0}; // 0 selects round(sqrt(n_features))
    std::uint64_t seed{0};
};

struct TreeNode {
    int feature{-1}; // -1 marks a leaf
    double threshold{0.0};
    int left{-1};
    int right{-1};
    double value{0.0};
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

// One forest per output column.
class RandomForest {
public:
    RandomForest() = default;
    explicit RandomForest(ForestOptions opts) : opts_(opts) {}

    // X: samples x features, Y: samples x outputs.
    void fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
    std::vector<double> predict(std::span<const double> x) const;
    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;

    const ForestOptions& options() const { return opts_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t n_outputs() const { return trees_.size(); }
    const std::vector<std::vector<RegressionTree>>& trees() const { return trees_; }
    void set_trees(std::vector<std::vector<RegressionTree>> trees, std::size_t n_features);

private:
    ForestOptions opts_;
    std::size_t n_features_{0};
    std::vector<std::vector<RegressionTree>> trees_;
};

nlohmann::json to_json(const RandomForest& f);
RandomForest forest_from_json(const nlohmann::json& j);

} // namespace sdfkit
