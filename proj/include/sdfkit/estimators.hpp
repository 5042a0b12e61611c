// estimators.hpp — Parametric SDF inference: multistart least squares and ML regressors

#pragma once

#include "sdfkit/datagen.hpp"
#include "sdfkit/mlp.hpp"
#include "sdfkit/nelder_mead.hpp"
#include "sdfkit/random_forest.hpp"
#include "sdfkit/signal.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sdfkit {

// ----------------------------------------------------------- least squares

struct FitConfig {
    std::size_t multistart{20};
    std::uint64_t seed{0};
    NelderMeadOptions simplex{};
};

struct FitResult {
    std::vector<double> xi_hat;
    double final_loss{0.0};
    std::size_t n_restarts_used{0};
    bool converged{false};
    std::size_t evaluations{0};
};

// Mean squared residual of the family's closed-form signal against s.
double fit_loss(const Signal& s, Family family, std::span<const double> xi);

// Simplex descent from `multistart` uniform draws in the box, then one polishing
// restart from the best point.
FitResult least_squares_fit(const Signal& s, Family family, const ParameterBox& bounds, const FitConfig& cfg = {});

// -------------------------------------------------------------- regressors

struct MlpRegressorOptions {
    std::vector<std::size_t> hidden{64, 64};
    Activation activation{Activation::tanh};
    std::size_t epochs{1000};
    std::size_t batch_size{32};
    double learning_rate{1e-3};
    double final_learning_rate{1e-6};
    std::uint64_t seed{0};
};

// Network on standardised inputs and targets.
struct MlpRegressor {
    Mlp net;
    Eigen::VectorXd x_mean, x_scale, y_mean, y_scale;

    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const; // samples x outputs
};

MlpRegressor fit_mlp_regressor(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const MlpRegressorOptions& o);

enum class RegressorKind { mlp, random_forest };
std::string to_string(RegressorKind k);
RegressorKind regressor_kind_from_string(const std::string& s);

using RegressorModel = std::variant<MlpRegressor, RandomForest>;
using HyperPoint = std::variant<MlpRegressorOptions, ForestOptions>;

RegressorModel fit_regressor(const HyperPoint& hyper, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
Eigen::MatrixXd predict(const RegressorModel& m, const Eigen::MatrixXd& X);

// Single-signal prediction; the input length must match the training grid.
std::vector<double> predict_params(const RegressorModel& m, std::span<const double> values);

struct TrainReport {
    std::vector<double> cv_mse; // per hyperparameter point
    std::size_t best_index{0};
    std::size_t fold_models{0};
    std::vector<std::string> warnings;
};

struct TrainedRegressor {
    RegressorModel model;
    TrainReport report;
};

// k-fold CV over the grid, then a refit of the best point on all rows.
TrainedRegressor train_regressor(const std::vector<HyperPoint>& grid, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 std::size_t k, std::uint64_t seed);

// Rows of the dataset at `rows`: X = signal samples, Y = parameters.
void design_matrix(const Dataset& ds, const std::vector<std::size_t>& rows, Eigen::MatrixXd& X, Eigen::MatrixXd& Y);

// ----------------------------------------------------------------- metrics

struct Metrics {
    double mse{0.0};
    double mae{0.0};
    std::vector<double> mse_per_parameter;
    std::vector<double> mae_per_parameter;

    double log10_mse() const;
    double log10_mae() const;
};

Metrics evaluate_metrics(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths);
nlohmann::json to_json(const Metrics& m);

// --------------------------------------------------------------- benchmark

struct NoiseCondition {
    std::string name;
    NoiseSpec noise;
};

struct BenchmarkConfig {
    DatasetSpec dataset{};                       // noise is replaced per condition
    std::vector<NoiseCondition> conditions{{"noiseless", NoiseSpec::none()},
                                           {"noisy", NoiseSpec::positive_uniform()}};
    double train_fraction{0.75};
    std::size_t kfold{5};
    std::vector<RegressorKind> regressors{RegressorKind::mlp, RegressorKind::random_forest};
    std::vector<MlpRegressorOptions> mlp_grid{MlpRegressorOptions{}};
    std::vector<ForestOptions> forest_grid{ForestOptions{}};
    std::uint64_t seed{0};
};

struct BenchmarkCell {
    std::string condition;
    RegressorKind regressor;
    Metrics test;
    TrainReport report;
};

struct BenchmarkResult {
    std::vector<std::string> parameter_names;
    std::vector<BenchmarkCell> cells;

    const BenchmarkCell& cell(const std::string& condition, RegressorKind r) const;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

// One CSV per condition: rows = parameters (plus "all"), columns = <regressor>_log10_mse, <regressor>_log10_mae.
std::vector<std::filesystem::path> write_benchmark(const BenchmarkResult& r, const std::filesystem::path& dir);

} // namespace sdfkit
