// dct_prior.hpp — Cosine-transform spectral estimate from a PD coherence signal
//
// H(t) = -d^2 ln f / dt^2 = int J(w) coth(beta w/2) cos(w t) dw, so a half-range
// cosine transform of H over the record, times (2/pi) tanh(beta nu/2), estimates J(nu).

#pragma once

#include "sdfkit/numerics.hpp"
#include "sdfkit/sdf_models.hpp"
#include "sdfkit/signal.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdfkit {

struct SpectralPrior {
    std::vector<double> frequencies; // nu_k = pi k / t_f, k = 0, 1, ...
    std::vector<double> transform;   // dt sum_n H(t_n) cos(nu_k t_n)
    std::vector<double> raw_S;       // may be negative; raw_S[0] = 0
    std::vector<double> prior_J;     // clipped and thresholded, >= 0
    std::vector<bool> dominant;

    double t_f{0.0};
    double dt{0.0};
    ThermalBath bath{ThermalBath::zero_temperature()};
    double clamp_eps{0.0};
    double threshold{0.0};
    std::vector<std::string> diagnostics;

    double d_nu() const { return frequencies.size() > 1 ? frequencies[1] : 0.0; }
};

constexpr double kDefaultClampFraction = 1e-6;
constexpr double kDefaultPowerThreshold = 1e-3;

// -d^2 ln(max(f, eps)) / dt^2: central differences, the even extension at t = 0 and the
// one-sided stencil of numerics::second_derivative at t_f.
// eps defaults to 1e-6 times the initial coherence 2|rho01(0)|.
std::vector<double> log_second_derivative(const Signal& s, std::optional<double> clamp_eps = std::nullopt);

// Fills frequencies, transform and raw_S. n_frequencies defaults to the grid size,
// the largest count below the aliasing limit pi/dt.
SpectralPrior spectral_estimate(const std::vector<double>& H, const numerics::UniformTimeGrid& grid,
                                const ThermalBath& bath, std::optional<std::size_t> n_frequencies = std::nullopt);

// sin((nu-w) t_f) / (2(nu-w)) + sin((nu+w) t_f) / (2(nu+w)), with both removable singularities filled in.
double window_kernel(double nu, double omega, double t_f);

// int J(w) coth(beta w/2) K_tf(nu, w) dw, the continuous-time counterpart of the transform.
double windowed_transform(const SpectralDensity& J, const ThermalBath& bath, double nu, double t_f);

// prior_J = max(raw_S, 0) on components with |raw_S|^2 >= threshold * max |raw_S|^2, 0 elsewhere.
SpectralPrior build_prior(SpectralPrior prior, double power_threshold_fraction = kDefaultPowerThreshold);

struct InversionOptions {
    std::optional<double> clamp_eps;
    std::optional<ThermalBath> bath; // defaults to the signal's recorded bath
    double power_threshold_fraction{kDefaultPowerThreshold};
    std::optional<std::size_t> n_frequencies;
};

SpectralPrior invert_pd_signal(const Signal& s, const InversionOptions& opts = {});

// Local maxima of a sequence (strictly greater than the left neighbour, >= the right),
// returned in decreasing order of value.
std::vector<std::size_t> local_maxima(const std::vector<double>& v);

// CSV "nu,raw_S,prior_J,dominant" plus a JSON sidecar with the metadata.
void write_prior(const SpectralPrior& p, const std::filesystem::path& csv_path);
SpectralPrior read_prior(const std::filesystem::path& csv_path);
nlohmann::json prior_metadata(const SpectralPrior& p);

} // namespace sdfkit
