// forward_maps.cpp — Maps J(w) -> f(t) for the pure-dephasing and amplitude-damping channels

#include "sdfkit/forward_maps.hpp"

#include "sdfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sdfkit {

namespace {

using cd = std::complex<double>;

numerics::QuadratureOptions signal_tolerance(double oscillation) {
    numerics::QuadratureOptions o;
    o.abs_tol = 1e-13;
    o.rel_tol = 1e-10;
    o.oscillation = oscillation;
    return o;
}

double require_sign(const AnalyticConventions& conv) {
    if (!conv.pd_exponent_sign) {
        throw ConfigError("pd_ohmic_analytic: exponent sign convention has not been resolved");
    }
    return *conv.pd_exponent_sign;
}

double require_kappa(const AnalyticConventions& conv) {
    if (!conv.ad_coupling_factor) {
        throw ConfigError("ad_lorentzian_analytic: coupling factor convention has not been resolved");
    }
    return *conv.ad_coupling_factor;
}

double ohmic_inner_integrand(double s, double x) {
    return std::sin(s * std::atan(x)) / std::pow(1.0 + x * x, 0.5 * s);
}

double ohmic_inner_integral(double s, double x0, double x1) {
    numerics::QuadratureOptions o;
    o.abs_tol = 1e-15;
    o.rel_tol = 1e-13;
    return numerics::integrate_interval([s](double x) { return ohmic_inner_integrand(s, x); }, x0, x1, o).value;
}

// sinh(z) / z, continuous through z = 0.
cd sinhc(cd z) {
    if (std::abs(z) < 1e-4) return 1.0 + z * z / 6.0;
    return std::sinh(z) / z;
}

void check_pd_domain(const PDConfig& cfg) {
    const double p = low_frequency_exponent(cfg.J);
    if (!cfg.bath.is_zero_temperature() && !(p > 0.0)) {
        throw DomainError("decoherence_exponent: at finite temperature J(w)/w^2 coth(beta w/2) (1-cos wt) "
                          "needs a low-frequency exponent > 0, got " +
                          std::to_string(p));
    }
    if (!(p > -1.0)) {
        throw DomainError("decoherence_exponent: low-frequency exponent " + std::to_string(p) +
                          " makes G(t) diverge");
    }
}

double decoherence_exponent_unchecked(const PDConfig& cfg, double t) {
    if (t == 0.0) return 0.0;
    const ThermalBath bath = cfg.bath;
    const auto g = [bath](double w) { return thermal_factor(bath, w, ThermalKind::coth_half) / (w * w); };
    OscillatoryWeight w;
    w.weight = [g, t](double x) {
        const double h = std::sin(0.5 * x * t);
        return 2.0 * h * h * g(x);
    };
    w.smooth = g;
    w.cos_amplitude = [g](double x) { return -g(x); };
    w.frequency = t;
    return integrate_oscillatory_with_sdf(cfg.J, w, signal_tolerance(t)).value;
}

} // namespace

// ------------------------------------------------------------ conventions

ConventionReport resolve_conventions() {
    ConventionReport rep;

    {
        const Ohmic cases[] = {{0.05, 3.0, 1.0}, {0.1, 1.5, 2.0}, {0.02, 0.7, 1.5}};
        const double times[] = {0.3, 1.0, 2.5, 6.0};
        AnalyticConventions plus{1.0, std::nullopt};
        AnalyticConventions minus{-1.0, std::nullopt};
        for (const auto& J : cases) {
            const PDConfig cfg{J, ThermalBath::zero_temperature(), 0.5};
            for (double t : times) {
                const double ref = std::exp(-decoherence_exponent(cfg, t));
                rep.pd_error_plus =
                    std::max(rep.pd_error_plus, std::abs(pd_ohmic_analytic(J, t, 0.5, plus) - ref) / ref);
                rep.pd_error_minus =
                    std::max(rep.pd_error_minus, std::abs(pd_ohmic_analytic(J, t, 0.5, minus) - ref) / ref);
            }
        }
        rep.conventions.pd_exponent_sign = rep.pd_error_minus <= rep.pd_error_plus ? -1.0 : 1.0;
    }

    {
        const Lorentzian cases[] = {{0.8, 0.3, 1.0}, {0.05, 1.0, 1.0}, {0.9, 0.5, 0.2}};
        const numerics::UniformTimeGrid grid(1e-3, 6000);
        const auto times = grid.times();
        AnalyticConventions k2{std::nullopt, 2.0};
        AnalyticConventions k4{std::nullopt, 4.0};
        for (const auto& J : cases) {
            const ADConfig cfg{J, 1.0, 1.0};
            const Signal ref = ad_signal(cfg, grid, KernelMethod::lorentzian_closed_form);
            const auto a2 = ad_lorentzian_analytic_series(J, 1.0, times, k2);
            const auto a4 = ad_lorentzian_analytic_series(J, 1.0, times, k4);
            for (std::size_t i = 0; i < times.size(); ++i) {
                rep.ad_error_kappa2 = std::max(rep.ad_error_kappa2, std::abs(a2[i] - ref.values[i]));
                rep.ad_error_kappa4 = std::max(rep.ad_error_kappa4, std::abs(a4[i] - ref.values[i]));
            }
        }
        rep.conventions.ad_coupling_factor = rep.ad_error_kappa2 <= rep.ad_error_kappa4 ? 2.0 : 4.0;
    }

    const double pd_best = std::min(rep.pd_error_plus, rep.pd_error_minus);
    const double ad_best = std::min(rep.ad_error_kappa2, rep.ad_error_kappa4);
    if (pd_best > 1e-4 || ad_best > 1e-4) {
        throw NumericalError("resolve_conventions: no candidate convention matches the numerical reference "
                             "(PD " + std::to_string(pd_best) + ", AD " + std::to_string(ad_best) + ")");
    }
    return rep;
}

const AnalyticConventions& resolved_conventions() {
    static const AnalyticConventions conv = resolve_conventions().conventions;
    return conv;
}

// ------------------------------------------------------------ pure dephasing

double decoherence_exponent(const PDConfig& cfg, double t) {
    if (!(t >= 0.0)) throw InputError("decoherence_exponent: t must be >= 0");
    cfg.validate();
    check_pd_domain(cfg);
    return decoherence_exponent_unchecked(cfg, t);
}

Signal pd_signal(const PDConfig& cfg, const numerics::UniformTimeGrid& grid) {
    cfg.validate();
    check_pd_domain(cfg);
    std::vector<double> f(grid.size());
    const double c0 = 2.0 * cfg.rho01_abs;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f[i] = c0 * std::exp(-decoherence_exponent_unchecked(cfg, grid.time(i)));
    }
    return Signal(Channel::PD, grid, std::move(f), cfg);
}

double pd_ohmic_analytic(const Ohmic& J, double t, double rho01_abs, const AnalyticConventions& conv) {
    const double sign = require_sign(conv);
    if (!(t >= 0.0)) throw InputError("pd_ohmic_analytic: t must be >= 0");
    validate(J);
    const double inner = ohmic_inner_integral(J.s, 0.0, J.omega_c * t);
    return 2.0 * rho01_abs * std::exp(sign * 2.0 * J.alpha * std::tgamma(J.s) * inner);
}

std::vector<double> pd_ohmic_analytic_series(const Ohmic& J, std::span<const double> times, double rho01_abs,
                                             const AnalyticConventions& conv) {
    const double sign = require_sign(conv);
    validate(J);
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    const double prefactor = sign * 2.0 * J.alpha * std::tgamma(J.s);
    std::vector<double> out(times.size());
    double x_prev = 0.0;
    double acc = 0.0;
    for (std::size_t idx : order) {
        const double t = times[idx];
        if (!(t >= 0.0)) throw InputError("pd_ohmic_analytic_series: times must be >= 0");
        const double x = J.omega_c * t;
        acc += ohmic_inner_integral(J.s, x_prev, x);
        x_prev = x;
        out[idx] = 2.0 * rho01_abs * std::exp(prefactor * acc);
    }
    return out;
}

// ---------------------------------------------------------- amplitude damping

bool lorentzian_kernel_fast_path_valid(const Lorentzian& J) { return J.omega_b / J.lambda >= 10.0; }

std::complex<double> lorentzian_kernel(const Lorentzian& J, double omega_0, double t) {
    const double delta = omega_0 - J.omega_b;
    return 0.5 * J.gamma0 * J.lambda * std::exp(cd(-J.lambda * t, delta * t));
}

std::complex<double> ad_memory_kernel(const ADConfig& cfg, double t, KernelMethod method) {
    if (!(t >= 0.0)) throw InputError("ad_memory_kernel: t must be >= 0");
    const auto* lor = std::get_if<Lorentzian>(&cfg.J);
    if (method == KernelMethod::lorentzian_closed_form ||
        (method == KernelMethod::automatic && lor && lorentzian_kernel_fast_path_valid(*lor))) {
        if (!lor) throw InputError("ad_memory_kernel: closed-form kernel requires a Lorentzian SDF");
        return lorentzian_kernel(*lor, cfg.omega_0, t);
    }
    const double w0 = cfg.omega_0;
    const auto opts = signal_tolerance(t);
    const double c = std::cos(w0 * t);
    const double s = std::sin(w0 * t);
    OscillatoryWeight re_w;
    re_w.weight = [w0, t](double w) { return std::cos((w0 - w) * t); };
    re_w.cos_amplitude = [c](double) { return c; };
    re_w.sin_amplitude = [s](double) { return s; };
    re_w.frequency = t;
    const double re = integrate_oscillatory_with_sdf(cfg.J, re_w, opts).value;
    if (t == 0.0) return {re, 0.0};
    OscillatoryWeight im_w;
    im_w.weight = [w0, t](double w) { return std::sin((w0 - w) * t); };
    im_w.cos_amplitude = [s](double) { return s; };
    im_w.sin_amplitude = [c](double) { return -c; };
    im_w.frequency = t;
    const double im = integrate_oscillatory_with_sdf(cfg.J, im_w, opts).value;
    return {re, im};
}

Signal ad_signal(const ADConfig& cfg, const numerics::UniformTimeGrid& grid, KernelMethod method) {
    cfg.validate();
    std::vector<cd> kernel(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) kernel[j] = ad_memory_kernel(cfg, grid.time(j), method);
    const auto c1 = numerics::volterra_solve(kernel, grid, cd(std::sqrt(cfg.rho11_init), 0.0));
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = 2.0 * std::norm(c1.values[i]) - 1.0;
    f[0] = 2.0 * cfg.rho11_init - 1.0;
    return Signal(Channel::AD, grid, std::move(f), cfg);
}

double ad_lorentzian_analytic(const Lorentzian& J, double omega_0, double t, const AnalyticConventions& conv,
                              double rho11) {
    const double kappa = require_kappa(conv);
    if (!(t >= 0.0)) throw InputError("ad_lorentzian_analytic: t must be >= 0");
    const double delta = omega_0 - J.omega_b;
    const cd Lambda(J.lambda, -delta);
    const cd d = std::sqrt(Lambda * Lambda - kappa * J.gamma0 * J.lambda);
    const cd z = 0.5 * d * t;
    const cd amp = std::cosh(z) + Lambda * (0.5 * t) * sinhc(z);
    const double F = std::exp(-J.lambda * t) * std::norm(amp);
    return 2.0 * F * rho11 - 1.0;
}

std::vector<double> ad_lorentzian_analytic_series(const Lorentzian& J, double omega_0, std::span<const double> times,
                                                  const AnalyticConventions& conv, double rho11) {
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = ad_lorentzian_analytic(J, omega_0, times[i], conv, rho11);
    return out;
}

// ----------------------------------------------------------- time-local rates

double time_local_rate(const RateSpec& spec, double t) {
    if (!(t >= 0.0)) throw InputError("time_local_rate: t must be >= 0");
    if (t == 0.0) return 0.0;
    if (const auto* pd = std::get_if<PDConfig>(&spec)) {
        pd->validate();
        const ThermalBath bath = pd->bath;
        const auto n2 = [bath](double w) { return thermal_factor(bath, w, ThermalKind::coth_half); };
        OscillatoryWeight w;
        w.weight = [n2, t](double x) { return n2(x) * std::sin(x * t); };
        w.sin_amplitude = n2;
        w.frequency = t;
        return integrate_oscillatory_with_sdf(pd->J, w, signal_tolerance(t)).value;
    }
    const auto& g = std::get<GenericRateSpec>(spec);
    validate(g.J);
    if (g.kind == TransitionKind::absorption && g.bath.is_zero_temperature()) return 0.0;
    const double shift = g.kind == TransitionKind::absorption ? g.transition_frequency : -g.transition_frequency;
    const ThermalBath bath = g.bath;
    const bool emission = g.kind == TransitionKind::emission;
    const auto occupation = [bath, emission](double w) {
        const double n = thermal_factor(bath, w, ThermalKind::occupation);
        return emission ? n + 1.0 : n;
    };
    OscillatoryWeight w;
    w.weight = [=](double x) {
        const double y = x + shift;
        const double sinc_t = std::abs(y * t) < 1e-8 ? t : std::sin(y * t) / y;
        return 2.0 * occupation(x) * sinc_t;
    };
    const double cs = std::cos(shift * t);
    const double sn = std::sin(shift * t);
    w.sin_amplitude = [=](double x) { return 2.0 * occupation(x) * cs / (x + shift); };
    w.cos_amplitude = [=](double x) { return 2.0 * occupation(x) * sn / (x + shift); };
    w.frequency = t;
    w.split = 2.0 * std::abs(shift) + 1.0;
    return integrate_oscillatory_with_sdf(g.J, w, signal_tolerance(t)).value;
}

} // namespace sdfkit
