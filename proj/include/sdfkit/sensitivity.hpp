// sensitivity.hpp — Gronwall-type worst-case bounds for the amplitude-damping signal

#pragma once

#include "sdfkit/numerics.hpp"
#include "sdfkit/sdf_models.hpp"
#include "sdfkit/signal.hpp"

#include "json.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sdfkit {

// Largest ||dJ||_1 / ||J||_1 for which the bounds are evaluated against data.
inline constexpr double kLinearResponseLimit = 1e-2;

// Trapezoid integral of |dJ| over the table; dJ may be signed.
double abs_l1_norm(const Tabulated& dJ);

// 4 t ||dJ||_1 exp(t^2 ||J||_1 / 2)
double pointwise_bound(const SpectralDensity& J, const Tabulated& dJ, double t);
double pointwise_bound_from_norms(double delta_l1, double j_l1, double t);

// (4 ||dJ||_1 / ||J||_1) (exp(||J||_1 t_f^2 / 2) - 1), or 2 ||dJ||_1 t_f^2 when ||J||_1 = 0.
double integrated_bound(const SpectralDensity& J, const Tabulated& dJ, double t_f);
double integrated_bound_from_norms(double delta_l1, double j_l1, double t_f);

// Exact int_0^inf exp(i (w_0 - w) t) dJ(w) dw for the piecewise-linear table.
std::complex<double> tabulated_kernel(const Tabulated& dJ, double omega_0, double t);

struct PerturbationReport {
    double delta_J_l1{0.0};
    double J_l1{0.0};
    std::vector<double> times;
    std::vector<double> pointwise_bound;
    std::vector<double> empirical_delta_f;
    double integrated_bound{0.0};
    double empirical_integral{0.0}; // trapezoid of |df| over the grid
    double max_ratio{0.0};          // max over t > 0 of |df| / bound
    bool satisfied{false};          // |df| <= bound + 1e-9 at every grid point
    bool integral_satisfied{false};
};

// Solves the Volterra equation with K_J and with K_J + K_dJ on the same grid and
// compares |df| with the bounds. Throws InputError outside the linear-response regime.
PerturbationReport empirical_verify(const SpectralDensity& J, const Tabulated& dJ, const ADConfig& cfg,
                                    const numerics::UniformTimeGrid& grid);

// Same, reusing precomputed samples of K_J on the grid.
PerturbationReport empirical_verify(const std::vector<std::complex<double>>& kernel_J, double j_l1,
                                    const Tabulated& dJ, const ADConfig& cfg,
                                    const numerics::UniformTimeGrid& grid);

// dJ = J(w) g(w) on the grid, g a random trigonometric polynomial with a few modes,
// rescaled so that ||dJ||_1 = ratio ||J||_1.
Tabulated random_perturbation(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid, double ratio,
                              std::uint64_t seed);

// Narrow triangular bump of the given half-width at `center` with ||dJ||_1 = ratio ||J||_1.
Tabulated resonant_bump(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid, double center,
                        double half_width, double ratio);

nlohmann::json to_json(const PerturbationReport& r);

// CSV with columns t, empirical, bound.
void write_perturbation_csv(const PerturbationReport& r, const std::filesystem::path& path);

} // namespace sdfkit
