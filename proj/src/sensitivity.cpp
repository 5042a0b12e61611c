// sensitivity.cpp — Gronwall-type worst-case bounds for the amplitude-damping signal

#include "sdfkit/sensitivity.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sdfkit {

double abs_l1_norm(const Tabulated& dJ) {
    const auto& v = dJ.values;
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
        const double a = v[j], b = v[j + 1];
        if (a * b >= 0.0) {
            acc += 0.5 * (std::abs(a) + std::abs(b));
        } else {
            // The segment crosses zero: integrate |linear| exactly.
            acc += 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b));
        }
    }
    return acc * dJ.grid.d_omega();
}

double pointwise_bound_from_norms(double delta_l1, double j_l1, double t) {
    if (!(t >= 0.0)) throw InputError("pointwise_bound: t must be >= 0");
    return 4.0 * t * delta_l1 * std::exp(0.5 * t * t * j_l1);
}

double pointwise_bound(const SpectralDensity& J, const Tabulated& dJ, double t) {
    return pointwise_bound_from_norms(abs_l1_norm(dJ), l1_norm(J), t);
}

double integrated_bound_from_norms(double delta_l1, double j_l1, double t_f) {
    if (!(t_f > 0.0)) throw InputError("integrated_bound: t_f must be positive");
    if (j_l1 == 0.0) return 2.0 * delta_l1 * t_f * t_f;
    return 4.0 * delta_l1 / j_l1 * std::expm1(0.5 * j_l1 * t_f * t_f);
}

double integrated_bound(const SpectralDensity& J, const Tabulated& dJ, double t_f) {
    return integrated_bound_from_norms(abs_l1_norm(dJ), l1_norm(J), t_f);
}

namespace {

// phi0(u) = int_0^1 exp(-i u x) dx, phi1(u) = int_0^1 x exp(-i u x) dx
void segment_moments(double u, std::complex<double>& phi0, std::complex<double>& phi1) {
    const std::complex<double> I(0.0, 1.0);
    if (std::abs(u) < 0.5) {
        std::complex<double> term = 1.0; // (-i u)^n / n!
        phi0 = 0.0;
        phi1 = 0.0;
        for (int n = 0; n < 16; ++n) {
            phi0 += term / static_cast<double>(n + 1);
            phi1 += term / static_cast<double>(n + 2);
            term *= -I * u / static_cast<double>(n + 1);
        }
        return;
    }
    const std::complex<double> e = std::exp(-I * u);
    phi0 = (1.0 - e) / (I * u);
    phi1 = I * e / u - (1.0 - e) / (u * u);
}

} // namespace

std::complex<double> tabulated_kernel(const Tabulated& dJ, double omega_0, double t) {
    const auto& v = dJ.values;
    const double h = dJ.grid.d_omega();
    if (v.size() < 2) return 0.0;
    std::complex<double> phi0, phi1;
    segment_moments(t * h, phi0, phi1);
    const std::complex<double> step = std::polar(1.0, -t * h);
    std::complex<double> phase = 1.0; // exp(-i w_j t)
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
        acc += phase * (v[j] * phi0 + (v[j + 1] - v[j]) * phi1);
        phase *= step;
        if ((j & 255U) == 255U) phase = std::polar(1.0, -t * h * static_cast<double>(j + 1));
    }
    return std::polar(1.0, omega_0 * t) * acc * h;
}

PerturbationReport empirical_verify(const std::vector<std::complex<double>>& kernel_J, double j_l1,
                                    const Tabulated& dJ, const ADConfig& cfg,
                                    const numerics::UniformTimeGrid& grid) {
    if (kernel_J.size() != grid.size()) throw InputError("empirical_verify: kernel samples do not match the grid");
    PerturbationReport r;
    r.J_l1 = j_l1;
    r.delta_J_l1 = abs_l1_norm(dJ);
    if (r.delta_J_l1 > kLinearResponseLimit * j_l1) {
        throw InputError("empirical_verify: ||dJ||_1 / ||J||_1 exceeds 1e-2; the bounds only hold in linear response");
    }
    r.times = grid.times();
    const std::size_t n = grid.size();
    std::vector<std::complex<double>> perturbed(kernel_J);
    if (r.delta_J_l1 > 0.0) {
        for (std::size_t i = 0; i < n; ++i) perturbed[i] += tabulated_kernel(dJ, cfg.omega_0, r.times[i]);
    }
    const auto c0 = numerics::volterra_solve(kernel_J, grid, 1.0);
    const auto c1 = numerics::volterra_solve(perturbed, grid, 1.0);
    r.empirical_delta_f.resize(n);
    r.pointwise_bound.resize(n);
    r.satisfied = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = 2.0 * std::abs(std::norm(c1.values[i]) - std::norm(c0.values[i]));
        r.empirical_delta_f[i] = d;
        r.pointwise_bound[i] = pointwise_bound_from_norms(r.delta_J_l1, j_l1, r.times[i]);
        if (d > r.pointwise_bound[i] + 1e-9) r.satisfied = false;
        if (r.pointwise_bound[i] > 0.0) r.max_ratio = std::max(r.max_ratio, d / r.pointwise_bound[i]);
        if (i > 0) r.empirical_integral += 0.5 * grid.dt() * (d + r.empirical_delta_f[i - 1]);
    }
    r.integrated_bound = n > 1 ? integrated_bound_from_norms(r.delta_J_l1, j_l1, r.times.back()) : 0.0;
    r.integral_satisfied = r.empirical_integral <= r.integrated_bound + 1e-9;
    return r;
}

PerturbationReport empirical_verify(const SpectralDensity& J, const Tabulated& dJ, const ADConfig& cfg,
                                    const numerics::UniformTimeGrid& grid) {
    cfg.validate();
    std::vector<std::complex<double>> kernel(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) kernel[i] = ad_memory_kernel(ADConfig{J, cfg.omega_0}, grid.time(i));
    return empirical_verify(kernel, l1_norm(J), dJ, cfg, grid);
}

namespace {

Tabulated rescale(Tabulated dJ, double target) {
    const double norm = abs_l1_norm(dJ);
    if (!(norm > 0.0)) throw InputError("perturbation has zero norm on this grid");
    for (auto& v : dJ.values) v *= target / norm;
    return dJ;
}

} // namespace

Tabulated random_perturbation(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid, double ratio,
                              std::uint64_t seed) {
    if (!(ratio >= 0.0)) throw InputError("random_perturbation: ratio must be >= 0");
    Rng rng(seed);
    constexpr int kModes = 4;
    double amp[kModes], freq[kModes], phase[kModes];
    const double span = std::max(grid.max_frequency(), 1e-12);
    for (int m = 0; m < kModes; ++m) {
        amp[m] = rng.normal();
        freq[m] = 2.0 * std::numbers::pi * rng.uniform(0.0, 4.0) / span;
        phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const double offset = rng.uniform(-1.0, 1.0);
    Tabulated dJ{grid, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double w = grid.frequency(j);
        double g = offset;
        for (int m = 0; m < kModes; ++m) g += amp[m] * std::cos(freq[m] * w + phase[m]);
        dJ.values[j] = eval_sdf(J, w) * g;
    }
    if (ratio == 0.0) {
        std::fill(dJ.values.begin(), dJ.values.end(), 0.0);
        return dJ;
    }
    return rescale(std::move(dJ), ratio * l1_norm(J));
}

Tabulated resonant_bump(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid, double center,
                        double half_width, double ratio) {
    if (!(half_width >= grid.d_omega())) throw InputError("resonant_bump: half-width below the grid spacing");
    Tabulated dJ{grid, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        dJ.values[j] = std::max(0.0, 1.0 - std::abs(grid.frequency(j) - center) / half_width);
    }
    return rescale(std::move(dJ), ratio * l1_norm(J));
}

nlohmann::json to_json(const PerturbationReport& r) {
    return nlohmann::json{{"delta_J_l1", r.delta_J_l1},
                          {"J_l1", r.J_l1},
                          {"integrated_bound", r.integrated_bound},
                          {"empirical_integral", r.empirical_integral},
                          {"max_ratio", r.max_ratio},
                          {"satisfied", r.satisfied},
                          {"integral_satisfied", r.integral_satisfied},
                          {"n_points", r.times.size()}};
}

void write_perturbation_csv(const PerturbationReport& r, const std::filesystem::path& path) {
    csv::write(path, {"t", "empirical", "bound"}, {r.times, r.empirical_delta_f, r.pointwise_bound});
}

} // namespace sdfkit
