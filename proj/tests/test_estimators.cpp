// Least-squares fits, regressors, cross-validation and metrics.

#include "doctest.h"

#include "sdfkit/datagen.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/estimators.hpp"
#include "sdfkit/random.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sdfkit;

namespace {

double rel_inf(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / den;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& A, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = A.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

const numerics::UniformTimeGrid kGrid(0.1, 400);

} // namespace

TEST_CASE("least squares recovers amplitude-damping parameters") {
    const std::vector<double> xi{0.3, 0.8, 1.0};
    const auto s = simulate_family(Family::lorentzian, xi, kGrid, ChannelContext{});
    const auto box = ParameterBox::cube(3, 0.1, 1.0);
    const auto r = least_squares_fit(s, Family::lorentzian, box, FitConfig{20, 1, {}});
    CHECK(rel_inf(r.xi_hat, xi) <= 1e-3);
    CHECK(r.final_loss >= 0.0);
    CHECK(r.n_restarts_used == 20);
    CHECK(box.contains(r.xi_hat));

    const auto again = least_squares_fit(s, Family::lorentzian, box, FitConfig{20, 1, {}});
    CHECK(again.xi_hat == r.xi_hat);
    CHECK(again.final_loss == r.final_loss);
}

TEST_CASE("least squares at a corner of the box stays inside") {
    const std::vector<double> xi{0.1, 1.0, 0.1};
    const auto s = simulate_family(Family::lorentzian, xi, kGrid, ChannelContext{});
    const auto box = ParameterBox::cube(3, 0.1, 1.0);
    const auto r = least_squares_fit(s, Family::lorentzian, box, FitConfig{5, 2, {}});
    CHECK(box.contains(r.xi_hat));
    CHECK(rel_inf(r.xi_hat, xi) <= 1e-2);
}

TEST_CASE("least squares on Ohmic dephasing") {
    const std::vector<double> xi{0.4, 1.7, 0.6};
    const ParameterBox box{{0.1, 0.5, 0.2}, {1.0, 3.0, 2.0}};
    const auto s = simulate_family(Family::ohmic, xi, kGrid, ChannelContext{});
    const auto r = least_squares_fit(s, Family::ohmic, box, FitConfig{20, 0, {}});
    CHECK(rel_inf(r.xi_hat, xi) <= 1e-3);
}

TEST_CASE("noisy fits sit on the noise floor and move away from the noiseless answer") {
    const std::vector<double> xi{0.5, 0.6, 0.7};
    const auto clean = simulate_family(Family::lorentzian, xi, kGrid, ChannelContext{});
    const auto box = ParameterBox::cube(3, 0.1, 1.0);
    double bias = 0.0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto noisy = apply_noise(clean, NoiseSpec::positive_uniform(), seed);
        // The true parameters score the noise energy; three parameters absorb little of it.
        double floor = 0.0;
        for (std::size_t i = 0; i < clean.values.size(); ++i) {
            floor += std::pow(noisy.values[i] - clean.values[i], 2) / static_cast<double>(clean.values.size());
        }
        const auto r = least_squares_fit(noisy, Family::lorentzian, box, FitConfig{6, seed, {}});
        CHECK(r.final_loss <= floor);
        CHECK(r.final_loss >= 0.1 * floor);
        bias += rel_inf(r.xi_hat, xi) / 6.0;
    }
    CHECK(bias > 1e-3);
}

TEST_CASE("fit argument checks") {
    const auto s = simulate_family(Family::lorentzian, std::vector<double>{0.3, 0.8, 1.0}, kGrid, ChannelContext{});
    CHECK_THROWS_AS(least_squares_fit(s, Family::ohmic, ParameterBox::cube(3, 0.1, 1.0)), InputError);
    CHECK_THROWS_AS(least_squares_fit(s, Family::lorentzian, ParameterBox::cube(2, 0.1, 1.0)), InputError);
    CHECK_THROWS_AS(least_squares_fit(s, Family::lorentzian, ParameterBox::cube(3, 0.1, 1.0), FitConfig{0, 0, {}}),
                    InputError);
    CHECK(fit_loss(s, Family::lorentzian, std::vector<double>{0.3, 0.8, 1.0}) < 1e-28);
}

TEST_CASE("metrics") {
    Eigen::MatrixXd T(4, 2);
    T << 1, 2, 3, 4, 5, 6, 7, 8;
    const auto same = evaluate_metrics(T, T);
    CHECK(same.mse == 0.0);
    CHECK(same.mae == 0.0);
    const auto off = evaluate_metrics((T.array() + 0.1).matrix(), T);
    CHECK(off.mae == doctest::Approx(0.1));
    CHECK(off.mse == doctest::Approx(0.01));
    REQUIRE(off.mse_per_parameter.size() == 2);
    CHECK(off.log10_mse() == doctest::Approx(-2.0));
    CHECK_THROWS_AS(evaluate_metrics(Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2)), InputError);
    CHECK_THROWS_AS(evaluate_metrics(T, T.leftCols(1)), InputError);

    Rng r(8);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd P(7, 3);
        for (Eigen::Index i = 0; i < P.size(); ++i) P.data()[i] = r.normal() * (1 + trial);
        const auto m = evaluate_metrics(P, Eigen::MatrixXd::Zero(7, 3));
        CHECK(m.mae <= std::sqrt(m.mse) * (1 + 1e-12));
        for (std::size_t j = 0; j < 3; ++j) CHECK(m.mae_per_parameter[j] <= std::sqrt(m.mse_per_parameter[j]) * (1 + 1e-12));
    }
}

TEST_CASE("prediction identities") {
    RegressionTree leaf;
    leaf.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.37});
    RandomForest f;
    f.set_trees({std::vector<RegressionTree>(5, leaf)}, 4);
    const RegressorModel m = f;
    const auto p = predict_params(m, std::vector<double>{1, 2, 3, 4});
    REQUIRE(p.size() == 1);
    CHECK(p[0] == doctest::Approx(0.37));
    CHECK_THROWS_AS(predict_params(m, std::vector<double>{1, 2, 3}), InputError);

    MlpRegressor reg;
    reg.net = Mlp::random({4, 3, 2}, Activation::tanh, 0);
    auto theta = reg.net.flatten();
    std::fill(theta.begin(), theta.end(), 0.0);
    theta[theta.size() - 2] = 0.25;
    theta[theta.size() - 1] = -0.5;
    reg.net.assign(theta);
    reg.x_mean = Eigen::VectorXd::Zero(4);
    reg.x_scale = Eigen::VectorXd::Ones(4);
    reg.y_mean = Eigen::VectorXd::Zero(2);
    reg.y_scale = Eigen::VectorXd::Ones(2);
    const auto q = predict_params(RegressorModel{reg}, std::vector<double>{9, 8, 7, 6});
    CHECK(q == std::vector<double>{0.25, -0.5});
    CHECK_THROWS_AS(predict_params(RegressorModel{reg}, std::vector<double>{1, 2}), InputError);
    CHECK(regressor_kind_from_string("rf") == RegressorKind::random_forest);
    CHECK_THROWS_AS(regressor_kind_from_string("svr"), ConfigError);
}

TEST_CASE("mlp regressor learns an exactly linear readout") {
    Rng r(12);
    const Eigen::Index n = 1600, p = 10; // enough rows that 385 weights cannot memorise the irrelevant inputs
    Eigen::MatrixXd X(n, p), Y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = r.uniform();
        Y(i, 0) = 0.3 * X(i, 2) + 0.2 * X(i, 7);
    }
    const auto split = holdout_split(static_cast<std::size_t>(n), 0.75, 0);
    MlpRegressorOptions o;
    o.hidden = {32};
    o.epochs = 300;
    o.learning_rate = 2e-3;
    o.final_learning_rate = 2e-5;
    const auto model = fit_mlp_regressor(rows_of(X, split.train), rows_of(Y, split.train), o);
    const auto m = evaluate_metrics(model.predict(rows_of(X, split.test)), rows_of(Y, split.test));
    CHECK(m.mse < 1e-4);
}

TEST_CASE("cross-validation protocol") {
    Rng r(1);
    Eigen::MatrixXd X(100, 5), Y(100, 2);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = r.uniform();
    Y.col(0) = X.col(0) + X.col(1);
    Y.col(1).setConstant(0.5);
    ForestOptions a, b;
    a.n_trees = 10;
    b.n_trees = 10;
    b.max_depth = 2;
    const auto tr = train_regressor({a, b}, X, Y, 5, 3);
    CHECK(tr.report.fold_models == 10);
    CHECK(tr.report.cv_mse.size() == 2);
    CHECK(tr.report.best_index == 0);
    REQUIRE(tr.report.warnings.size() == 1);
    CHECK(tr.report.warnings[0].find("column 1") != std::string::npos);
    const auto again = train_regressor({a, b}, X, Y, 5, 3);
    CHECK(again.report.cv_mse == tr.report.cv_mse);
    CHECK_THROWS_AS(train_regressor({}, X, Y, 5, 3), InputError);
}

TEST_CASE("random forest: training fit beats validation and row order does not matter") {
    DatasetSpec spec;
    spec.n_instances = 200;
    spec.seed = 4;
    const auto ds = generate_dataset(spec);
    const auto split = holdout_split(ds.size(), 0.75, 1);
    Eigen::MatrixXd Xtr, Ytr, Xte, Yte;
    design_matrix(ds, split.train, Xtr, Ytr);
    design_matrix(ds, split.test, Xte, Yte);
    ForestOptions o;
    o.n_trees = 40;
    RandomForest f(o);
    f.fit(Xtr, Ytr);
    const auto train = evaluate_metrics(f.predict(Xtr), Ytr);
    const auto test = evaluate_metrics(f.predict(Xte), Yte);
    for (std::size_t j = 0; j < 3; ++j) CHECK(train.mse_per_parameter[j] < test.mse_per_parameter[j]);

    std::vector<std::size_t> rev(static_cast<std::size_t>(Xtr.rows()));
    for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
    RandomForest g(o);
    g.fit(rows_of(Xtr, rev), rows_of(Ytr, rev));
    CHECK(g.predict(Xte) == f.predict(Xte));

    const auto back = forest_from_json(nlohmann::json::parse(to_json(f).dump()));
    CHECK(back.predict(Xte) == f.predict(Xte));
}

TEST_CASE("holdout accuracy of the mlp regressor on noiseless data") {
    DatasetSpec spec;
    spec.n_instances = 1000;
    spec.seed = 9;
    const auto ds = generate_dataset(spec);
    const auto split = holdout_split(ds.size(), 0.75, 0);
    Eigen::MatrixXd Xtr, Ytr, Xte, Yte;
    design_matrix(ds, split.train, Xtr, Ytr);
    design_matrix(ds, split.test, Xte, Yte);
    const auto model = fit_regressor(MlpRegressorOptions{}, Xtr, Ytr);
    const auto m = evaluate_metrics(predict(model, Xte), Yte);
    for (double mae : m.mae_per_parameter) CHECK(mae < 0.05 * 0.9);
}

TEST_CASE("benchmark writes one metrics matrix per condition") {
    BenchmarkConfig cfg;
    cfg.dataset.n_instances = 120;
    cfg.kfold = 3;
    cfg.mlp_grid[0].epochs = 20;
    cfg.forest_grid[0].n_trees = 10;
    const auto res = run_benchmark(cfg);
    CHECK(res.cells.size() == 4);
    CHECK(res.parameter_names == parameter_names(Family::lorentzian));
    const auto dir = std::filesystem::temp_directory_path() / "sdfkit_bench_test";
    std::filesystem::remove_all(dir);
    const auto files = write_benchmark(res, dir);
    REQUIRE(files.size() == 2);
    std::ifstream is(files[0]);
    std::string header;
    std::getline(is, header);
    CHECK(header == "parameter,mlp_log10_mse,mlp_log10_mae,random_forest_log10_mse,random_forest_log10_mae");
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 4);
    CHECK(res.cell("noisy", RegressorKind::mlp).test.mse > 0.0);
    CHECK_THROWS_AS(res.cell("foggy", RegressorKind::mlp), InputError);
}
