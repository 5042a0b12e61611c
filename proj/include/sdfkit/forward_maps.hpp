// forward_maps.hpp — Maps J(w) -> f(t) for the pure-dephasing and amplitude-damping channels
//
// Quadrature and Volterra routes are the reference; the closed forms for the
// Ohmic (PD) and Lorentzian (AD) families are fast paths whose sign and
// coupling conventions are pinned against those references at runtime.

#pragma once

#include "sdfkit/numerics.hpp"
#include "sdfkit/sdf_models.hpp"
#include "sdfkit/signal.hpp"

#include <complex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace sdfkit {

// Conventions of the closed-form signals. Unset fields make the fast paths throw ConfigError.
struct AnalyticConventions {
    // Sign in front of 2 alpha Gamma(s) int_0^{w_c t} ... in the PD exponent.
    std::optional<double> pd_exponent_sign;
    // kappa in d = sqrt(Lambda^2 - kappa gamma0 lambda).
    std::optional<double> ad_coupling_factor;
};

struct ConventionReport {
    AnalyticConventions conventions;
    double pd_error_plus{0.0};   // max relative deviation of each candidate from quadrature
    double pd_error_minus{0.0};
    double ad_error_kappa2{0.0}; // max deviation from the Volterra solution
    double ad_error_kappa4{0.0};
};

// Runs both candidate conventions against the numerical references and keeps the
// better one. Throws NumericalError when even the better candidate misses 1e-4.
ConventionReport resolve_conventions();

// resolve_conventions() evaluated once per process.
const AnalyticConventions& resolved_conventions();

// ------------------------------------------------------------ pure dephasing

// G(t) = int J(w)/w^2 coth(beta w/2) (1 - cos w t) dw
double decoherence_exponent(const PDConfig& cfg, double t);

Signal pd_signal(const PDConfig& cfg, const numerics::UniformTimeGrid& grid);

// Zero-temperature Ohmic coherence via the inner arctangent integral.
double pd_ohmic_analytic(const Ohmic& J, double t, double rho01_abs, const AnalyticConventions& conv);

// Same closed form over many times, accumulating the inner integral between sorted times.
std::vector<double> pd_ohmic_analytic_series(const Ohmic& J, std::span<const double> times,
                                             double rho01_abs, const AnalyticConventions& conv);

// ---------------------------------------------------------- amplitude damping

enum class KernelMethod {
    automatic,              // closed form for Lorentzians with omega_b/lambda >= 10, else quadrature
    quadrature,             // int_0^inf always
    lorentzian_closed_form, // (gamma0 lambda / 2) exp((i delta - lambda) t), whole-line Lorentzian
};

bool lorentzian_kernel_fast_path_valid(const Lorentzian& J);

std::complex<double> lorentzian_kernel(const Lorentzian& J, double omega_0, double t);

// K(t) = int_0^inf exp(i (w_0 - w) t) J(w) dw
std::complex<double> ad_memory_kernel(const ADConfig& cfg, double t,
                                      KernelMethod method = KernelMethod::automatic);

// 2 |c1(t)|^2 - 1 from the Volterra equation with c1(0) = 1.
Signal ad_signal(const ADConfig& cfg, const numerics::UniformTimeGrid& grid,
                 KernelMethod method = KernelMethod::automatic);

double ad_lorentzian_analytic(const Lorentzian& J, double omega_0, double t, const AnalyticConventions& conv,
                              double rho11 = 1.0);

std::vector<double> ad_lorentzian_analytic_series(const Lorentzian& J, double omega_0,
                                                  std::span<const double> times,
                                                  const AnalyticConventions& conv, double rho11 = 1.0);

// ----------------------------------------------------------- time-local rates

enum class TransitionKind {
    absorption, // N_1 = n(w), shift +Omega
    emission,   // N_2 = n(w) + 1, shift -Omega
};

struct GenericRateSpec {
    SpectralDensity J;
    ThermalBath bath;
    TransitionKind kind{TransitionKind::emission};
    double transition_frequency{1.0};
};

using RateSpec = std::variant<PDConfig, GenericRateSpec>;

// PD: int J (2n + 1) sin(w t) dw.
// Generic: 2 int J N_n sin((w + w_n) t) / (w + w_n) dw.
double time_local_rate(const RateSpec& spec, double t);

} // namespace sdfkit
