// dct_prior.cpp — Cosine-transform spectral estimate from a PD coherence signal

#include "sdfkit/dct_prior.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace sdfkit {

std::vector<double> log_second_derivative(const Signal& s, std::optional<double> clamp_eps) {
    if (s.model != Channel::PD) throw InputError("log_second_derivative: expected a PD signal");
    const double eps = clamp_eps.value_or(kDefaultClampFraction * 2.0 * s.pd().rho01_abs);
    if (!(eps > 0.0)) throw InputError("log_second_derivative: clamp threshold must be positive");
    std::vector<double> logf(s.values.size());
    bool any_above = false;
    for (std::size_t i = 0; i < logf.size(); ++i) {
        any_above = any_above || s.values[i] >= eps;
        logf[i] = std::log(std::max(s.values[i], eps));
    }
    if (!any_above) throw InputError("log_second_derivative: every sample lies below the clamp threshold");
    auto H = numerics::second_derivative(logf, s.grid.dt());
    // G is even in t, so ln f(-dt) = ln f(dt) closes the central stencil at t = 0. The one-sided
    // stencil there has about 2.4x the noise gain, and H(0) enters every cosine coefficient.
    const double dt = s.grid.dt();
    H[0] = 2.0 * (logf[1] - logf[0]) / (dt * dt);
    for (auto& h : H) h = -h;
    return H;
}

SpectralPrior spectral_estimate(const std::vector<double>& H, const numerics::UniformTimeGrid& grid,
                                const ThermalBath& bath, std::optional<std::size_t> n_frequencies) {
    if (H.size() != grid.size()) throw InputError("spectral_estimate: H length must equal the grid size");
    const std::size_t K = n_frequencies.value_or(grid.size());
    if (K < 2) throw InputError("spectral_estimate: need at least two frequencies");

    SpectralPrior p;
    p.t_f = grid.final_time();
    p.dt = grid.dt();
    p.bath = bath;
    p.frequencies.resize(K);
    for (std::size_t k = 0; k < K; ++k) p.frequencies[k] = std::numbers::pi * static_cast<double>(k) / p.t_f;
    if (p.frequencies.back() >= std::numbers::pi / p.dt) {
        p.diagnostics.push_back("frequency grid reaches the aliasing limit pi/dt");
    }
    p.transform = numerics::cosine_transform(H, p.dt, p.frequencies);
    p.raw_S.assign(K, 0.0);
    for (std::size_t k = 1; k < K; ++k) {
        p.raw_S[k] = (2.0 / std::numbers::pi) * thermal_factor(bath, p.frequencies[k], ThermalKind::tanh_half) *
                     p.transform[k];
    }
    p.prior_J.assign(K, 0.0);
    p.dominant.assign(K, false);
    return p;
}

namespace {

// sin(x t) / (2 x), continuous at x = 0.
double half_sinc(double x, double t) {
    if (std::abs(x * t) < 1e-8) return 0.5 * t;
    return std::sin(x * t) / (2.0 * x);
}

} // namespace

double window_kernel(double nu, double omega, double t_f) {
    if (!(t_f > 0.0)) throw InputError("window_kernel: t_f must be positive");
    return half_sinc(nu - omega, t_f) + half_sinc(nu + omega, t_f);
}

double windowed_transform(const SpectralDensity& J, const ThermalBath& bath, double nu, double t_f) {
    if (!(t_f > 0.0)) throw InputError("windowed_transform: t_f must be positive");
    const auto coth = [bath](double w) { return thermal_factor(bath, w, ThermalKind::coth_half); };
    OscillatoryWeight w;
    w.weight = [=](double x) { return coth(x) * window_kernel(nu, x, t_f); };
    const double sn = std::sin(nu * t_f);
    const double cs = std::cos(nu * t_f);
    // Beyond the split: sin((nu -+ w) t) expanded in cos(w t), sin(w t).
    w.cos_amplitude = [=](double x) { return coth(x) * sn * (0.5 / (nu - x) + 0.5 / (nu + x)); };
    w.sin_amplitude = [=](double x) { return coth(x) * cs * (-0.5 / (nu - x) + 0.5 / (nu + x)); };
    w.frequency = t_f;
    w.split = 2.0 * nu + 1.0;
    numerics::QuadratureOptions o;
    o.abs_tol = 1e-12;
    o.rel_tol = 1e-10;
    return integrate_oscillatory_with_sdf(J, w, o).value;
}

SpectralPrior build_prior(SpectralPrior p, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw InputError("build_prior: threshold must lie in [0, 1)");
    if (p.raw_S.empty()) throw InputError("build_prior: raw estimate is empty");
    const std::size_t K = p.raw_S.size();
    double max_power = 0.0;
    for (double v : p.raw_S) max_power = std::max(max_power, v * v);
    p.threshold = threshold;
    p.prior_J.assign(K, 0.0);
    p.dominant.assign(K, false);
    bool any_positive = false;
    for (std::size_t k = 0; k < K; ++k) {
        const double power = p.raw_S[k] * p.raw_S[k];
        p.dominant[k] = max_power > 0.0 && power >= threshold * max_power;
        if (p.dominant[k]) p.prior_J[k] = std::max(p.raw_S[k], 0.0);
        any_positive = any_positive || p.raw_S[k] > 0.0;
    }
    if (!any_positive) p.diagnostics.push_back("raw estimate has no positive component; prior is identically zero");
    return p;
}

SpectralPrior invert_pd_signal(const Signal& s, const InversionOptions& opts) {
    const auto H = log_second_derivative(s, opts.clamp_eps);
    auto p = spectral_estimate(H, s.grid, opts.bath.value_or(s.pd().bath), opts.n_frequencies);
    p.clamp_eps = opts.clamp_eps.value_or(kDefaultClampFraction * 2.0 * s.pd().rho01_abs);
    return build_prior(std::move(p), opts.power_threshold_fraction);
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] > v[i - 1] && v[i] >= v[i + 1]) out.push_back(i);
    }
    std::stable_sort(out.begin(), out.end(), [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return out;
}

nlohmann::json prior_metadata(const SpectralPrior& p) {
    return nlohmann::json{{"t_f", p.t_f},
                          {"dt", p.dt},
                          {"d_nu", p.d_nu()},
                          {"n_frequencies", p.frequencies.size()},
                          {"bath", to_json(p.bath)},
                          {"clamp_eps", p.clamp_eps},
                          {"power_threshold_fraction", p.threshold},
                          {"diagnostics", p.diagnostics}};
}

void write_prior(const SpectralPrior& p, const std::filesystem::path& csv_path) {
    std::vector<double> dom(p.dominant.size());
    for (std::size_t k = 0; k < dom.size(); ++k) dom[k] = p.dominant[k] ? 1.0 : 0.0;
    csv::write(csv_path, {"nu", "raw_S", "prior_J", "dominant", "H_tf"},
               {p.frequencies, p.raw_S, p.prior_J, dom, p.transform});
    auto meta = csv_path;
    meta.replace_extension(".json");
    std::ofstream os(meta);
    if (!os) throw ConfigError("cannot write " + meta.string());
    os << prior_metadata(p).dump(2) << '\n';
}

SpectralPrior read_prior(const std::filesystem::path& csv_path) {
    const auto t = csv::read(csv_path);
    SpectralPrior p;
    p.frequencies = t.column_values("nu");
    p.raw_S = t.column_values("raw_S");
    p.prior_J = t.column_values("prior_J");
    for (double d : t.column_values("dominant")) p.dominant.push_back(d != 0.0);
    p.transform = t.column_values("H_tf");
    auto meta_path = csv_path;
    meta_path.replace_extension(".json");
    std::ifstream is(meta_path);
    if (!is) throw ConfigError("missing prior metadata " + meta_path.string());
    try {
        const auto m = nlohmann::json::parse(is);
        p.t_f = m.at("t_f").get<double>();
        p.dt = m.at("dt").get<double>();
        p.bath = bath_from_json(m.at("bath"));
        p.clamp_eps = m.at("clamp_eps").get<double>();
        p.threshold = m.at("power_threshold_fraction").get<double>();
        p.diagnostics = m.value("diagnostics", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("prior metadata: " + std::string(e.what()));
    }
    return p;
}

} // namespace sdfkit
