// Spectral density families, norms, thermal factors and persistence.

#include "doctest.h"

#include "sdfkit/errors.hpp"
#include "sdfkit/random.hpp"
#include "sdfkit/sdf_models.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace sdfkit;

TEST_CASE("family values at reference points") {
    CHECK(eval_sdf(Ohmic{0.0275, 3.0, 1.0}, 0.0) == 0.0);
    CHECK(eval_sdf(Lorentzian{1.0, 0.5, 1.0}, 1.0) == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-15));
    // Ohmic closed form at a generic point.
    const double a = 0.1, s = 1.5, wc = 2.0, w = 0.7;
    CHECK(eval_sdf(Ohmic{a, s, wc}, w) == doctest::Approx(2 * a * std::pow(wc, 1 - s) * std::pow(w, s) * std::exp(-w / wc)));
    CHECK_THROWS_AS(eval_sdf(Ohmic{}, -1.0), InputError);
}

TEST_CASE("structured SDF: components add up and the local maxima sit at the modes") {
    const StructuredSiV p = StructuredSiV::silicon_vacancy();
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double w = rng.uniform(0.0, 40.0);
        const double parts = p.bulk(w) + p.local_mode(w) + p.gaussian_band(w);
        CHECK(std::abs(eval_sdf(p, w) - parts) <= 1e-14 * std::max(1.0, parts));
    }
    // Scan for local maxima on a fine grid.
    std::vector<double> maxima;
    const double h = 1e-3;
    for (double w = h; w < 30.0; w += h) {
        const double l = eval_sdf(p, w - h), c = eval_sdf(p, w), r = eval_sdf(p, w + h);
        if (c > l && c >= r) maxima.push_back(w);
    }
    REQUIRE(maxima.size() == 2);
    // The Gaussian band at 9.35 is dressed by the w^3 factor and the bulk, which moves
    // its visible maximum up to ~11.39; the sharp local mode stays at ~15.20.
    CHECK(maxima[0] == doctest::Approx(11.389).epsilon(1e-3));
    CHECK(maxima[1] == doctest::Approx(15.201).epsilon(1e-3));
    // Near 9.35 the Gaussian band dominates the bulk.
    CHECK(p.gaussian_band(9.35) > p.bulk(9.35));
}

TEST_CASE("SDFs are nonnegative for random parameters and frequencies") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const double w = rng.uniform(0.0, 50.0);
        CHECK(eval_sdf(Ohmic{rng.uniform(0.01, 1), rng.uniform(0.1, 4), rng.uniform(0.1, 5)}, w) >= 0.0);
        CHECK(eval_sdf(Lorentzian{rng.uniform(0.01, 2), rng.uniform(0.05, 2), rng.uniform(0, 5)}, w) >= 0.0);
    }
}

TEST_CASE("L1 norms") {
    CHECK(l1_norm(Lorentzian{1.0, 1.0, 0.0}) == doctest::Approx(0.25).epsilon(1e-15));
    const double a = 0.07, wc = 1.3;
    CHECK(l1_norm(Ohmic{a, 1.0, wc}) == doctest::Approx(2 * a * wc * wc).epsilon(1e-9));
    const numerics::UniformFrequencyGrid g(0.1, 50);
    CHECK(l1_norm(Tabulated{g, std::vector<double>(50, 0.0)}) == 0.0);
    CHECK_THROWS_AS(l1_norm(StructuredSiV{}), DomainError);

    // Closed form vs quadrature over random Lorentzians.
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
        const Lorentzian L{rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
        numerics::SemiInfiniteOptions o;
        o.abs_tol = 1e-14;
        o.rel_tol = 1e-11;
        o.decay_scale = L.lambda + L.omega_b;
        const double q = numerics::integrate_semi_infinite([&](double w) { return eval_sdf(L, w); }, o).value;
        CHECK(lorentzian_l1_norm(L) == doctest::Approx(q).epsilon(1e-8));
    }
}

TEST_CASE("tabulated SDFs interpolate linearly and vanish outside the grid") {
    const Tabulated t{numerics::UniformFrequencyGrid(0.5, 3), {0.0, 2.0, 1.0}};
    CHECK(eval_sdf(t, 0.25) == doctest::Approx(1.0));
    CHECK(eval_sdf(t, 0.75) == doctest::Approx(1.5));
    CHECK(eval_sdf(t, 1.0) == doctest::Approx(1.0));
    CHECK(eval_sdf(t, 1.2) == 0.0);
    CHECK_THROWS_AS(validate(Tabulated{numerics::UniformFrequencyGrid(0.5, 2), {0.0, -1.0}}), InputError);
}

TEST_CASE("thermal factors") {
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto bath = ThermalBath::inverse_temperature(rng.uniform(0.01, 20));
        const double w = rng.uniform(0.01, 30);
        CHECK(std::abs(thermal_factor(bath, w, ThermalKind::coth_half) * thermal_factor(bath, w, ThermalKind::tanh_half) -
                       1.0) < 1e-14);
    }
    const auto T0 = ThermalBath::zero_temperature();
    CHECK(thermal_factor(T0, 1.0, ThermalKind::coth_half) == 1.0);
    CHECK(thermal_factor(T0, 1.0, ThermalKind::tanh_half) == 1.0);
    CHECK(thermal_factor(T0, 1.0, ThermalKind::occupation) == 0.0);

    const auto b1 = ThermalBath::inverse_temperature(1.0);
    // coth(1) from its exponential definition; n = 1/(e^2 - 1) from the geometric series sum_k e^{-2k}.
    const double e2 = std::exp(2.0);
    CHECK(thermal_factor(b1, 2.0, ThermalKind::coth_half) == doctest::Approx((e2 + 1) / (e2 - 1)).epsilon(1e-14));
    double series = 0.0;
    for (int k = 1; k < 60; ++k) series += std::exp(-2.0 * k);
    CHECK(thermal_factor(b1, 2.0, ThermalKind::occupation) == doctest::Approx(series).epsilon(1e-14));
    CHECK(thermal_factor(b1, 2.0, ThermalKind::coth_half) == doctest::Approx(1.3130352854993312));

    // coth_half >= 1 and decreasing in w.
    double prev = INFINITY;
    for (double w = 0.05; w < 20; w += 0.05) {
        const double c = thermal_factor(b1, w, ThermalKind::coth_half);
        CHECK(c >= 1.0);
        CHECK(c <= prev);
        prev = c;
    }
    CHECK_THROWS_AS(thermal_factor(b1, 0.0, ThermalKind::coth_half), InputError);
    CHECK_THROWS_AS(ThermalBath::inverse_temperature(-1.0), InputError);
}

TEST_CASE("JSON and CSV round trips") {
    const std::vector<SpectralDensity> all{Ohmic{0.1, 2.0, 1.5}, Lorentzian{0.3, 0.4, 0.5}, StructuredSiV{},
                                           Tabulated{numerics::UniformFrequencyGrid(0.25, 4), {0, 1, 0.5, 0}}};
    for (const auto& J : all) {
        const auto back = sdf_from_json(to_json(J));
        for (double w : {0.0, 0.3, 0.6, 2.0}) CHECK(eval_sdf(back, w) == eval_sdf(J, w));
    }
    CHECK_THROWS_AS(sdf_from_json({{"family", "nope"}}), ConfigError);

    const auto path = std::filesystem::temp_directory_path() / "sdfkit_tab_test.csv";
    const Tabulated t{numerics::UniformFrequencyGrid(0.1, 5), {0.0, 0.1, 0.30000000000000004, 0.2, 0.0}};
    write_tabulated_csv(t, path);
    const auto r = read_tabulated_csv(path);
    CHECK(r.grid == t.grid);
    CHECK(r.values == t.values);
    std::filesystem::remove(path);
}
