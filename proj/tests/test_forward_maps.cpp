// PD and AD forward maps against closed forms, quadrature and Volterra references.

#include "doctest.h"

#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/random.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace sdfkit;
using cd = std::complex<double>;

namespace {

PDConfig pd(SpectralDensity J, double rho = 0.5) { return PDConfig{std::move(J), ThermalBath::zero_temperature(), rho}; }

} // namespace

TEST_CASE("decoherence exponent: t = 0, Ohmic s = 1 closed form") {
    CHECK(decoherence_exponent(pd(StructuredSiV{}), 0.0) == 0.0);
    const double a = 0.08, wc = 1.7;
    for (double tau : {0.5, 1.0, 2.0}) {
        const double t = tau / wc;
        CHECK(decoherence_exponent(pd(Ohmic{a, 1.0, wc}), t) ==
              doctest::Approx(a * std::log(1.0 + wc * wc * t * t)).epsilon(1e-9));
    }
}

TEST_CASE("structured decoherence exponent at t = 1 against a Riemann oracle") {
    const StructuredSiV p;
    const double t = 1.0;
    auto f = [&](double w) {
        const double s = std::sin(0.5 * w * t);
        return w == 0.0 ? 0.0 : eval_sdf(p, w) * 2.0 * s * s / (w * w);
    };
    auto midpoint = [&](double h, double top) {
        double acc = 0.0;
        const auto n = static_cast<std::size_t>(std::llround(top / h));
        for (std::size_t i = 0; i < n; ++i) acc += f((static_cast<double>(i) + 0.5) * h);
        return acc * h;
    };
    const double top = 4000.0;
    const double m1 = midpoint(2e-3, top), m2 = midpoint(1e-3, top);
    // Beyond `top`, J/w^2 ~ c / w^3 and the oscillating part averages out: tail ~ c / (2 top^2).
    const double c = p.J0 * p.omega_loc * p.omega_loc * 0.5 * p.Gamma;
    const double oracle = m2 + (m2 - m1) / 3.0 + c / (2.0 * top * top);
    CHECK(decoherence_exponent(pd(p), t) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("decoherence exponent domain checks") {
    // J(0) > 0 at finite temperature makes J coth / w^2 (1 - cos wt) ~ 1/w near zero.
    const Tabulated flat{numerics::UniformFrequencyGrid(0.1, 20), std::vector<double>(20, 1.0)};
    PDConfig hot{flat, ThermalBath::inverse_temperature(1.0), 0.5};
    CHECK_THROWS_AS(decoherence_exponent(hot, 1.0), DomainError);
    CHECK_NOTHROW(decoherence_exponent(pd(flat), 1.0));
    PDConfig warm_ohmic{Ohmic{0.05, 1.0, 1.0}, ThermalBath::inverse_temperature(2.0), 0.5};
    CHECK(decoherence_exponent(warm_ohmic, 1.0) > decoherence_exponent(pd(Ohmic{0.05, 1.0, 1.0}), 1.0));
}

TEST_CASE("decoherence exponent is nonnegative for random tabulated SDFs") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> v(30);
        for (auto& x : v) x = rng.uniform(0.0, 1.0);
        v.front() = 0.0;
        const Tabulated J{numerics::UniformFrequencyGrid(0.2, v.size()), v};
        CHECK(decoherence_exponent(pd(J), 0.0) == 0.0);
        for (double t : {0.1, 1.0, 7.3}) CHECK(decoherence_exponent(pd(J), t) >= 0.0);
    }
}

TEST_CASE("PD signals") {
    const numerics::UniformTimeGrid g(0.25, 40);
    const auto zero = pd_signal(pd(Tabulated{numerics::UniformFrequencyGrid(0.1, 5), std::vector<double>(5, 0.0)}, 0.3), g);
    for (double v : zero.values) CHECK(v == doctest::Approx(0.6));

    const double a = 0.2, wc = 1.3;
    const auto ohm = pd_signal(pd(Ohmic{a, 1.0, wc}), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = g.time(i);
        CHECK(ohm.values[i] == doctest::Approx(std::pow(1.0 + wc * wc * t * t, -a)).epsilon(1e-8));
    }

    const numerics::UniformTimeGrid gs(0.5, 129);
    const auto s = pd_signal(pd(StructuredSiV{}, 0.4), gs);
    CHECK(s.values.front() == 0.8);
    for (double v : s.values) {
        CHECK(v > 0.0);
        CHECK(v <= 0.8);
    }
    // Zero temperature: G(inf) = int J/w^2 is finite, so the coherence levels off well below f(0).
    CHECK(s.values.back() < 0.6 * 0.8 * 1.2);
    CHECK(s.values.back() > 0.0);
}

TEST_CASE("convention resolution pins the sign and the coupling factor") {
    const auto r = resolve_conventions();
    REQUIRE(r.conventions.pd_exponent_sign.has_value());
    REQUIRE(r.conventions.ad_coupling_factor.has_value());
    CHECK(*r.conventions.pd_exponent_sign == -1.0);
    CHECK(*r.conventions.ad_coupling_factor == 2.0);
    CHECK(r.pd_error_minus < 1e-4);
    CHECK(r.ad_error_kappa2 < 1e-4);
    CHECK(r.pd_error_plus > 1e-2);
    CHECK(r.ad_error_kappa4 > 1e-2);
}

TEST_CASE("Ohmic closed-form coherence") {
    const auto& conv = resolved_conventions();
    CHECK(pd_ohmic_analytic(Ohmic{0.1, 2.0, 1.0}, 0.0, 0.35, conv) == 0.7);
    const double a = 0.15, wc = 0.8;
    for (double t : {0.3, 1.0, 4.0}) {
        CHECK(pd_ohmic_analytic(Ohmic{a, 1.0, wc}, t, 0.5, conv) ==
              doctest::Approx(std::pow(1.0 + wc * wc * t * t, -a)).epsilon(1e-10));
    }
    const Ohmic J{0.0275, 3.0, 1.0};
    CHECK(pd_ohmic_analytic(J, 2.0, 0.5, conv) ==
          doctest::Approx(std::exp(-decoherence_exponent(pd(J), 2.0))).epsilon(1e-6));

    const std::vector<double> ts{0.0, 0.5, 1.0, 3.0, 9.0};
    const auto series = pd_ohmic_analytic_series(J, ts, 0.5, conv);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        CHECK(series[i] == doctest::Approx(pd_ohmic_analytic(J, ts[i], 0.5, conv)).epsilon(1e-11));
    }
    CHECK_THROWS_AS(pd_ohmic_analytic(J, 1.0, 0.5, AnalyticConventions{}), ConfigError);
}

TEST_CASE("memory kernel") {
    const Lorentzian L{1.0, 0.1, 1.0};
    const ADConfig cfg{L, 1.0};
    const cd k0 = ad_memory_kernel(cfg, 0.0, KernelMethod::quadrature);
    CHECK(k0.real() == doctest::Approx(l1_norm(L)).epsilon(1e-9));
    CHECK(std::abs(k0.imag()) < 1e-12);

    const cd fast = ad_memory_kernel(cfg, 1.0, KernelMethod::lorentzian_closed_form);
    CHECK(fast.real() == doctest::Approx(0.05 * std::exp(-0.1)).epsilon(1e-14));
    const cd quad = ad_memory_kernel(cfg, 1.0, KernelMethod::quadrature);
    // The closed form integrates over the whole line; the gap is bounded by the mass on w < 0.
    const double missing = L.gamma0 * L.lambda / (2 * std::numbers::pi) *
                           (std::numbers::pi / 2 - std::atan(L.omega_b / L.lambda));
    CHECK(std::abs(quad - fast) <= missing);
    CHECK(std::abs(quad - fast) > 0.1 * missing);
    CHECK(lorentzian_kernel_fast_path_valid(L));
    CHECK_FALSE(lorentzian_kernel_fast_path_valid(Lorentzian{1.0, 0.2, 1.0}));

    const ADConfig zero{Tabulated{numerics::UniformFrequencyGrid(0.1, 4), std::vector<double>(4, 0.0)}, 1.0};
    CHECK(std::abs(ad_memory_kernel(zero, 2.0)) == 0.0);

    // Ohmic s = 1: int 2 alpha w e^{-w/wc} e^{-i w t} dw = 2 alpha wc^2 / (1 + i wc t)^2
    const double a = 0.3, wc = 1.5, w0 = 2.0;
    for (double t : {0.0, 0.7, 3.0}) {
        const cd expect = std::exp(cd(0.0, w0 * t)) * 2.0 * a * wc * wc / std::pow(cd(1.0, wc * t), 2);
        const cd got = ad_memory_kernel(ADConfig{Ohmic{a, 1.0, wc}, w0}, t);
        CHECK(std::abs(got - expect) < 1e-9);
    }
}

TEST_CASE("AD signals") {
    const numerics::UniformTimeGrid g(0.01, 500);
    const ADConfig zero{Tabulated{numerics::UniformFrequencyGrid(0.1, 4), std::vector<double>(4, 0.0)}, 1.0};
    for (double v : ad_signal(zero, g).values) CHECK(v == 1.0);

    // Weak coupling on resonance: the population decays at the golden-rule rate 2 pi J(w0) = gamma0.
    const double g0 = 0.05;
    const ADConfig weak{Lorentzian{g0, 1.0, 1.0}, 1.0};
    const numerics::UniformTimeGrid gw(0.02, 2001);
    const auto f = ad_signal(weak, gw, KernelMethod::lorentzian_closed_form);
    CHECK(f.values.front() == 1.0);
    auto pop = [&](std::size_t i) { return 0.5 * (f.values[i] + 1.0); };
    const double rate = -std::log(pop(1500) / pop(500)) / (gw.time(1500) - gw.time(500));
    CHECK(rate == doctest::Approx(g0).epsilon(0.05));

    // Non-Markovian regime against the resolved closed form.
    const Lorentzian L{0.8, 0.3, 1.0};
    const numerics::UniformTimeGrid gf(1e-3, 6000);
    const auto num = ad_signal(ADConfig{L, 1.0}, gf, KernelMethod::lorentzian_closed_form);
    const auto ana = ad_lorentzian_analytic_series(L, 1.0, gf.times(), resolved_conventions());
    double worst = 0.0;
    for (std::size_t i = 0; i < gf.size(); ++i) {
        worst = std::max(worst, std::abs(num.values[i] - ana[i]));
        CHECK(num.values[i] <= 1.0 + 1e-9);
        CHECK(num.values[i] >= -1.0);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("Lorentzian closed form: initial value and the degenerate root") {
    const auto& conv = resolved_conventions();
    CHECK(ad_lorentzian_analytic(Lorentzian{0.4, 0.5, 0.7}, 1.0, 0.0, conv) == 1.0);
    // On resonance d^2 = lambda^2 - 2 gamma0 lambda vanishes at gamma0 = lambda / 2.
    const double lam = 0.6, t = 2.3;
    const double at = ad_lorentzian_analytic(Lorentzian{lam / 2, lam, 1.0}, 1.0, t, conv);
    const double limit = 2.0 * std::exp(-lam * t) * std::pow(1.0 + lam * t / 2, 2) - 1.0;
    CHECK(at == doctest::Approx(limit).epsilon(1e-12));
    const double near = ad_lorentzian_analytic(Lorentzian{lam / 2 * (1 + 1e-7), lam, 1.0}, 1.0, t, conv);
    CHECK(near == doctest::Approx(limit).epsilon(1e-6));
    CHECK_THROWS_AS(ad_lorentzian_analytic(Lorentzian{0.4, 0.5, 0.7}, 1.0, 1.0, AnalyticConventions{}), ConfigError);
}

TEST_CASE("time-local rates") {
    const Ohmic J{0.1, 3.0, 1.0};
    const PDConfig cfg = pd(J);
    CHECK(time_local_rate(cfg, 0.0) == 0.0);
    // int 2 alpha wc^{1-s} w^s e^{-w/wc} sin(w t) dw = 2 alpha wc^{1-s} Gamma(s+1) Im[(1/wc - i t)^{-(s+1)}]
    for (double t : {0.4, 1.0, 3.0}) {
        const double expect = 2 * J.alpha * std::pow(J.omega_c, 1 - J.s) * std::tgamma(J.s + 1) *
                              std::pow(cd(1.0 / J.omega_c, -t), -(J.s + 1)).imag();
        CHECK(time_local_rate(cfg, t) == doctest::Approx(expect).epsilon(1e-8));
    }
    // Central difference of G against dG/dt = int J/w sin(w t) dw, the same Gamma-function form with s -> s - 1.
    const double t = 1.3, h = 1e-4;
    const double dG = (decoherence_exponent(cfg, t + h) - decoherence_exponent(cfg, t - h)) / (2 * h);
    const double expect_dG = 2 * J.alpha * std::pow(J.omega_c, 1 - J.s) * std::tgamma(J.s) *
                             std::pow(cd(1.0 / J.omega_c, -t), -J.s).imag();
    CHECK(dG == doctest::Approx(expect_dG).epsilon(1e-6));

    GenericRateSpec spec{Lorentzian{1.0, 0.5, 1.0}, ThermalBath::zero_temperature(), TransitionKind::emission, 1.2};
    CHECK(time_local_rate(spec, 0.0) == 0.0);
    // Long times: 2 sin(x t)/x -> 2 pi delta(x), so the emission rate tends to 2 pi J(Omega).
    const double late = time_local_rate(spec, 200.0 / 1.2);
    CHECK(late == doctest::Approx(2 * std::numbers::pi * eval_sdf(spec.J, 1.2)).epsilon(1e-2));
    spec.kind = TransitionKind::absorption;
    CHECK(time_local_rate(spec, 5.0) == 0.0);
}
