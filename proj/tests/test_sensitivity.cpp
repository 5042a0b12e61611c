// Worst-case bounds for the amplitude-damping signal and their empirical check.

#include "doctest.h"

#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/sensitivity.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace sdfkit;

namespace {

const Lorentzian kJ{1.0, 0.5, 1.0};
const numerics::UniformFrequencyGrid kFreq(0.02, 2001);

Tabulated scaled(const Tabulated& t, double c) {
    Tabulated out = t;
    for (double& v : out.values) v *= c;
    return out;
}

// Composite Simpson on [a, b] with n (even) panels.
std::complex<double> simpson(const std::function<std::complex<double>(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    std::complex<double> s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("bounds vanish for a zero perturbation and at t = 0") {
    const Tabulated zero{kFreq, std::vector<double>(kFreq.size(), 0.0)};
    for (double t : {0.0, 0.5, 3.0}) CHECK(pointwise_bound(kJ, zero, t) == 0.0);
    CHECK(integrated_bound(kJ, zero, 4.0) == 0.0);
    const auto dJ = scaled(tabulate(kJ, kFreq), 1e-3);
    CHECK(pointwise_bound(kJ, dJ, 0.0) == 0.0);
    CHECK_THROWS_AS(pointwise_bound_from_norms(1.0, 1.0, -0.1), InputError);
    CHECK_THROWS_AS(integrated_bound_from_norms(1.0, 1.0, 0.0), InputError);
}

TEST_CASE("pointwise bound plug-in for the Lorentzian benchmark") {
    const double l1 = lorentzian_l1_norm(kJ);
    CHECK(l1 == doctest::Approx(l1_norm(kJ)).epsilon(1e-8));
    const auto dJ = scaled(tabulate(kJ, kFreq), 1e-3);
    // the table stops at w = 40, which drops about lambda^2 gamma0 / (2 pi 39) of the mass
    CHECK(pointwise_bound(kJ, dJ, 1.0) == doctest::Approx(4e-3 * l1 * std::exp(l1 / 2)).epsilon(3e-3));
    CHECK(abs_l1_norm(dJ) == doctest::Approx(1e-3 * l1).epsilon(3e-3));
}

TEST_CASE("integrated bound: closed form, Taylor limit and zero-norm limit") {
    const double dl1 = 2e-4, jl1 = 0.7;
    for (double tf : {0.3, 1.0, 4.0}) {
        CHECK(integrated_bound_from_norms(dl1, jl1, tf) ==
              doctest::Approx(4 * dl1 / jl1 * (std::exp(jl1 * tf * tf / 2) - 1)).epsilon(1e-12));
    }
    for (double tf : {1e-2, 1e-3}) {
        const double lead = 2 * dl1 * tf * tf;
        CHECK(std::abs(integrated_bound_from_norms(dl1, jl1, tf) / lead - 1) < jl1 * tf * tf);
    }
    CHECK(integrated_bound_from_norms(dl1, 0.0, 2.0) == doctest::Approx(2 * dl1 * 4.0));
    CHECK(integrated_bound_from_norms(dl1, 1e-300, 2.0) == doctest::Approx(2 * dl1 * 4.0));
}

TEST_CASE("bounds are monotone in t and homogeneous in the perturbation") {
    const auto dJ = random_perturbation(kJ, kFreq, 1e-3, 5);
    double prev_p = 0.0, prev_i = 0.0;
    for (int i = 1; i <= 200; ++i) {
        const double t = 0.05 * i;
        const double p = pointwise_bound(kJ, dJ, t), q = integrated_bound(kJ, dJ, t);
        CHECK(p >= prev_p);
        CHECK(q >= prev_i);
        prev_p = p;
        prev_i = q;
    }
    for (double c : {0.5, 3.0, 17.0}) {
        const auto cd = scaled(dJ, c);
        CHECK(pointwise_bound(kJ, cd, 2.0) == doctest::Approx(c * pointwise_bound(kJ, dJ, 2.0)).epsilon(1e-13));
        CHECK(integrated_bound(kJ, cd, 2.0) == doctest::Approx(c * integrated_bound(kJ, dJ, 2.0)).epsilon(1e-13));
    }
}

TEST_CASE("absolute L1 norm of a signed table") {
    // linear from -1 to 1 over [0, 2]: |x - 1| integrates to 1, the plain trapezoid of |v| to 2
    const Tabulated t{numerics::UniformFrequencyGrid(2.0, 2), {-1.0, 1.0}};
    CHECK(abs_l1_norm(t) == doctest::Approx(1.0));
    const Tabulated pos{numerics::UniformFrequencyGrid(0.5, 3), {1.0, 2.0, 0.0}};
    CHECK(abs_l1_norm(pos) == doctest::Approx(0.5 * 1.5 + 0.5 * 1.0));
}

TEST_CASE("exact kernel of a piecewise-linear table") {
    const numerics::UniformFrequencyGrid g(0.25, 9);
    const Tabulated t{g, {0.0, 0.3, -0.2, 0.5, 0.9, 0.1, 0.0, -0.4, 0.2}};
    for (double w0 : {0.0, 1.3}) {
        for (double time : {0.0, 1e-4, 0.7, 3.0, 25.0}) {
            const auto f = [&](double w) {
                return interpolate_table(g, t.values, w) * std::exp(std::complex<double>(0.0, (w0 - w) * time));
            };
            std::complex<double> oracle = 0.0;
            for (std::size_t j = 0; j + 1 < g.size(); ++j) oracle += simpson(f, g.frequency(j), g.frequency(j + 1), 400);
            const auto k = tabulated_kernel(t, w0, time);
            CHECK(std::abs(k - oracle) < 1e-10);
        }
    }
}

TEST_CASE("perturbation generators hit the requested L1 ratio") {
    const double l1 = l1_norm(kJ); // the full norm, not the table truncated at w = 40
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto dJ = random_perturbation(kJ, kFreq, 1e-3, seed);
        CHECK(abs_l1_norm(dJ) == doctest::Approx(1e-3 * l1).epsilon(1e-10));
    }
    CHECK(random_perturbation(kJ, kFreq, 1e-3, 1).values != random_perturbation(kJ, kFreq, 1e-3, 2).values);
    for (double v : random_perturbation(kJ, kFreq, 0.0, 1).values) CHECK(v == 0.0);
    const auto bump = resonant_bump(kJ, kFreq, 1.0, 0.05, 1e-3);
    CHECK(abs_l1_norm(bump) == doctest::Approx(1e-3 * l1).epsilon(1e-10));
    CHECK(interpolate_table(bump.grid, bump.values, 1.2) == 0.0);
    CHECK_THROWS_AS(resonant_bump(kJ, kFreq, 1.0, 0.01, 1e-3), InputError);
}

TEST_CASE("empirical verification against the Volterra solver") {
    const ADConfig cfg{kJ, 1.0, 1.0};
    const numerics::UniformTimeGrid grid(0.05, 101); // t_f = 5 / lambda = 10 is covered by the acceptance run

    const Tabulated zero{kFreq, std::vector<double>(kFreq.size(), 0.0)};
    const auto z = empirical_verify(kJ, zero, cfg, grid);
    CHECK(z.satisfied);
    for (double v : z.empirical_delta_f) CHECK(v == 0.0);

    for (std::uint64_t seed : {11, 12, 13}) {
        const auto r = empirical_verify(kJ, random_perturbation(kJ, kFreq, 1e-3, seed), cfg, grid);
        CHECK(r.satisfied);
        CHECK(r.integral_satisfied);
        CHECK(r.max_ratio > 0.0);
        CHECK(r.max_ratio <= 1.0);
        REQUIRE(r.times.size() == grid.size());
        for (std::size_t i = 0; i < r.times.size(); ++i) CHECK(r.pointwise_bound[i] >= 0.0);
    }
    const auto bump = empirical_verify(kJ, resonant_bump(kJ, kFreq, 1.0, 0.05, 1e-3), cfg, grid);
    CHECK(bump.satisfied);

    CHECK_THROWS_AS(empirical_verify(kJ, random_perturbation(kJ, kFreq, 0.05, 1), cfg, grid), InputError);
    const auto js = to_json(bump);
    CHECK(js.at("satisfied").get<bool>());
}
