// Constrained network SDF, the two training objectives and checkpoints.

#include "doctest.h"

#include "sdfkit/dct_prior.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/nn_refine.hpp"
#include "sdfkit/random.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace sdfkit;
using std::numbers::pi;

namespace {

Mlp bias_only(double value) {
    DenseLayer L{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, value), Activation::identity};
    return Mlp({L});
}

// Prior on nu_k = k dnu whose prior_J is a smooth bump.
SpectralPrior bump_prior(std::size_t K, double dnu, double centre, double width, double height) {
    SpectralPrior p;
    p.t_f = pi / dnu;
    p.dt = 0.01;
    for (std::size_t k = 0; k < K; ++k) {
        const double w = dnu * static_cast<double>(k);
        p.frequencies.push_back(w);
        const double x = (w - centre) / width;
        p.raw_S.push_back(height * std::exp(-0.5 * x * x));
    }
    return build_prior(p, 0.0);
}

// Largest relative mismatch between an objective's gradient and central differences.
template <class Problem>
double fd_mismatch(const Problem& prob, SdfNetwork m, double step) {
    const auto g = prob.evaluate(m, true).gradient;
    auto theta = m.net.flatten();
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    double worst = 0.0;
    for (std::size_t p = 0; p < theta.size(); ++p) {
        const double keep = theta[p];
        theta[p] = keep + step;
        m.net.assign(theta);
        const double up = prob.evaluate(m, false).loss;
        theta[p] = keep - step;
        m.net.assign(theta);
        const double dn = prob.evaluate(m, false).loss;
        theta[p] = keep;
        m.net.assign(theta);
        const double fd = (up - dn) / (2 * step);
        worst = std::max(worst, std::abs(g[p] - fd) / std::max(std::abs(fd), 1e-3 * gmax));
    }
    return worst;
}

} // namespace

TEST_CASE("filter and constrained density") {
    const FilterSpec F{3.0, 1.0};
    CHECK(F(0.0) == 0.0);
    CHECK_THROWS_AS((FilterSpec{0.0, 1.0}.validate()), InputError);
    CHECK_THROWS_AS((FilterSpec{1.0, -1.0}.validate()), InputError);

    const auto one = bias_only(1.0);
    CHECK(constrained_sdf(one, F, 0.0) == 0.0);
    // w^3 e^-w peaks where 3 w^2 = w^3
    double best = 0.0, arg = 0.0;
    for (int i = 1; i < 60000; ++i) {
        const double w = i * 1e-4;
        const double v = constrained_sdf(one, F, w);
        CHECK(v == doctest::Approx(w * w * w * std::exp(-w)));
        if (v > best) best = v, arg = w;
    }
    CHECK(arg == doctest::Approx(3.0).epsilon(1e-4));
    CHECK_THROWS_AS(constrained_sdf(one, F, -1.0), InputError);
}

TEST_CASE("constrained density is nonnegative and decays for random networks") {
    Rng r(4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SdfNetwork m{Mlp::random({1, 16, 16, 1}, Activation::tanh, seed), FilterSpec{2.0 + seed, 1.5}, 3.0};
        std::vector<double> ws(1000);
        for (auto& w : ws) w = 50.0 * r.uniform();
        const auto J = constrained_sdf(m, ws);
        // tanh hidden units lie in [-1, 1], so |N| <= sum |W_out| + |b_out| everywhere
        const auto& out = m.net.layers().back();
        const double nbound = out.W.cwiseAbs().sum() + out.b.cwiseAbs().sum();
        for (std::size_t i = 0; i < ws.size(); ++i) {
            CHECK(J[i] >= 0.0);
            CHECK(J[i] == doctest::Approx(constrained_sdf(m, ws[i])).epsilon(1e-12));
            CHECK(J[i] <= nbound * nbound * m.filter(ws[i]) * (1 + 1e-12));
        }
        CHECK(constrained_sdf(m, 0.0) == 0.0);
        const double tail = 10.0 * m.filter.Omega;
        CHECK(constrained_sdf(m, tail) <= nbound * nbound * m.filter(tail) * (1 + 1e-12));
        CHECK(m.filter(2 * tail) < m.filter(tail));
        CHECK(constrained_sdf(m, 200.0) < 1e-30);
    }
}

TEST_CASE("default filter uses the power centroid") {
    const auto p = bump_prior(200, 0.1, 8.0, 0.5, 1.0);
    const auto F = default_filter(p);
    CHECK(F.d == 3.0);
    CHECK(F.Omega == doctest::Approx(24.0).epsilon(1e-3));
}

TEST_CASE("phase-A and phase-B gradients agree with central differences") {
    const auto prior = bump_prior(120, 0.1, 6.0, 1.0, 0.05);
    SdfNetwork m{Mlp::random({1, 8, 8, 1}, Activation::tanh, 21), default_filter(prior), 6.0};
    m.filter.Omega = 6.0;
    auto pa = PhaseAProblem::from_prior(prior, 0.0);
    calibrate_output(m, pa);
    CHECK(fd_mismatch(pa, m, 1e-6) < 1e-4);
    pa.smoothness_weight = 5.0;
    CHECK(fd_mismatch(pa, m, 1e-6) < 1e-4);

    const numerics::UniformTimeGrid g(0.05, 200);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::exp(-0.02 * g.time(i)) * (1 + 0.01 * std::sin(g.time(i)));
    const Signal s(Channel::PD, g, f, PDConfig{});
    const auto pb = PhaseBProblem::build(prior.frequencies, s, ThermalBath::zero_temperature(), 0.0);
    CHECK(pb.omegas.size() == prior.frequencies.size() - 1);
    CHECK(fd_mismatch(pb, m, 1e-6) < 1e-3);
}

TEST_CASE("phase-B quadrature against the exact exponent") {
    // J = w^3 exp(-w): G(t) = int w exp(-w) (1 - cos wt) dw = 1 - (1 - t^2) / (1 + t^2)^2
    SdfNetwork m{bias_only(1.0), FilterSpec{3.0, 1.0}, 1.0};
    std::vector<double> nu(2001);
    for (std::size_t k = 0; k < nu.size(); ++k) nu[k] = 0.02 * static_cast<double>(k);
    const numerics::UniformTimeGrid g(0.1, 50);
    const Signal s(Channel::PD, g, std::vector<double>(g.size(), 1.0), PDConfig{});
    const auto pb = PhaseBProblem::build(nu, s, ThermalBath::zero_temperature(), 0.0);
    const std::vector<double> w(nu.begin() + 1, nu.end());
    const auto fhat = pb.predict(constrained_sdf(m, w));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = g.time(i);
        const double G = 1.0 - (1 - t * t) / std::pow(1 + t * t, 2);
        CHECK(fhat(static_cast<Eigen::Index>(i)) == doctest::Approx(std::exp(-G)).epsilon(1e-4));
    }
}

TEST_CASE("phase A: zero target, determinism and best-so-far tracking") {
    auto prior = bump_prior(100, 0.1, 5.0, 1.0, 0.0);
    for (double& v : prior.prior_J) v = 0.0;
    SdfNetwork m{Mlp::random({1, 8, 8, 1}, Activation::tanh, 3), FilterSpec{3.0, 5.0}, 5.0};
    TrainConfig c = default_config(Phase::A);
    c.max_epochs = 3000;
    const auto ck = train_phase_a(m, prior, c);
    double scale = 0.0;
    for (double v : constrained_sdf(m, prior.frequencies)) scale = std::max(scale, v * v);
    CHECK(ck.best_loss <= 1e-6 * scale);

    const auto p2 = bump_prior(100, 0.1, 5.0, 1.0, 0.02);
    TrainConfig c2 = default_config(Phase::A);
    c2.max_epochs = 500;
    const auto a = train_phase_a(m, p2, c2), b = train_phase_a(m, p2, c2);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.model.net.flatten() == b.model.net.flatten());
    double running = a.loss_history.front();
    for (double v : a.loss_history) running = std::min(running, v);
    CHECK(a.best_loss == doctest::Approx(running).epsilon(1e-9));
    CHECK(PhaseAProblem::from_prior(p2, 0.0).evaluate(a.model, false).loss == a.best_loss);
}

TEST_CASE("phase A reproduces the location of a single feature") {
    const auto prior = bump_prior(160, 0.1, 9.0, 0.8, 0.03);
    const auto m = initial_network(prior, 7, {16, 16});
    // The default schedule: a narrow feature needs the long low-rate tail to settle.
    const auto ck = train_phase_a(m, prior, default_config(Phase::A));
    const auto J = constrained_sdf(ck.model, prior.frequencies);
    const auto peaks = local_maxima(J);
    REQUIRE(!peaks.empty());
    CHECK(std::abs(prior.frequencies[peaks[0]] - 9.0) <= prior.d_nu());
    CHECK(ck.best_loss < 0.05 * ck.initial_loss);
}

TEST_CASE("phase B keeps a self-generated signal at its fixed point") {
    const auto prior = bump_prior(120, 0.1, 6.0, 1.0, 0.02);
    const auto m = initial_network(prior, 2, {8, 8});
    TrainConfig ca = default_config(Phase::A);
    ca.max_epochs = 300;
    const auto A = train_phase_a(m, prior, ca);

    const numerics::UniformTimeGrid g(0.05, 200);
    const Signal blank(Channel::PD, g, std::vector<double>(g.size(), 1.0), PDConfig{});
    const auto pb = PhaseBProblem::build(prior.frequencies, blank, ThermalBath::zero_temperature(), 0.0);
    const auto fhat = pb.predict(constrained_sdf(A.model, pb.omegas));
    const Signal s(Channel::PD, g, std::vector<double>(fhat.data(), fhat.data() + fhat.size()), PDConfig{});

    TrainConfig cb = default_config(Phase::B);
    cb.max_epochs = 200;
    const auto B = train_phase_b(A, prior.frequencies, s, ThermalBath::zero_temperature(), cb);
    CHECK(B.initial_loss < 1e-20);
    CHECK(B.best_loss <= B.initial_loss);
    CHECK(B.phase == Phase::B);
    CHECK_THROWS_AS(train_phase_b(B, prior.frequencies, s, ThermalBath::zero_temperature(), cb), InputError);
    const Signal ad(Channel::AD, g, std::vector<double>(g.size(), 1.0), ADConfig{});
    CHECK_THROWS_AS(train_phase_b(A, prior.frequencies, ad, ThermalBath::zero_temperature(), cb), InputError);
}

TEST_CASE("divergence and configuration checks") {
    const auto prior = bump_prior(80, 0.1, 4.0, 1.0, 0.02);
    const auto m = initial_network(prior, 1, {8, 8});
    TrainConfig c = default_config(Phase::A);
    c.learning_rate = 50.0;
    c.final_learning_rate = 50.0;
    c.max_epochs = 500;
    CHECK_THROWS_AS(train_phase_a(m, prior, c), NumericalError);
    c = default_config(Phase::A);
    c.patience = 0;
    CHECK_THROWS_AS(train_phase_a(m, prior, c), InputError);
    c = default_config(Phase::B);
    c.learning_rate = -1;
    CHECK_THROWS_AS(c.validate(), InputError);
    const auto rt = train_config_from_json(to_json(default_config(Phase::B)), Phase::B);
    CHECK(to_json(rt) == to_json(default_config(Phase::B)));
}

TEST_CASE("checkpoint round trip reproduces losses") {
    const auto prior = bump_prior(100, 0.1, 5.0, 1.0, 0.02);
    TrainConfig c = default_config(Phase::A);
    c.max_epochs = 200;
    const auto ck = train_phase_a(initial_network(prior, 5, {8, 8}), prior, c);
    const auto path = std::filesystem::temp_directory_path() / "sdfkit_ckpt.json";
    save_checkpoint(ck, path);
    const auto back = load_checkpoint(path);
    CHECK(back.loss_history == ck.loss_history);
    CHECK(back.config_hash == ck.config_hash);
    CHECK(back.epoch == ck.epoch);
    const auto pa = PhaseAProblem::from_prior(prior, 0.0);
    CHECK(std::abs(pa.evaluate(back.model, false).loss - pa.evaluate(ck.model, false).loss) <= 1e-12 * ck.best_loss);
    CHECK_THROWS_AS(load_checkpoint(path.parent_path() / "sdfkit_missing_ckpt.json"), ConfigError);
}
