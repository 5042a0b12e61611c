// sdf_models.hpp — Spectral density families, thermal factors and SDF integrals

#pragma once

#include "sdfkit/numerics.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace sdfkit {

// J(w) = 2 alpha w_c^(1-s) w^s exp(-w / w_c)
struct Ohmic {
    double alpha{0.0};
    double s{1.0};
    double omega_c{1.0};
};

// J(w) = (1 / 2pi) gamma0 lambda^2 / ((w - w_b)^2 + lambda^2)
struct Lorentzian {
    double gamma0{0.0};
    double lambda{1.0};
    double omega_b{0.0};
};

// Bulk super-Ohmic background plus a Lorentzian local mode and a Gaussian band.
struct StructuredSiV {
    double alpha{0.0275};
    double s{3.0};
    double omega_c{1.0};
    double J0{0.0235};     // local-mode weight (inverse frequency)
    double Gamma{0.8414};  // local-mode FWHM
    double omega_loc{15.19};
    double J1{0.0025};     // Gaussian weight (inverse frequency squared)
    double sigma{2.4042};
    double omega_0g{9.35};

    // Silicon-vacancy parameter set in THz units.
    static StructuredSiV silicon_vacancy() { return StructuredSiV{}; }

    double bulk(double w) const;
    double local_mode(double w) const;
    double gaussian_band(double w) const;
};

// Linear interpolation on omega_j = j d_omega, zero outside the grid.
struct Tabulated {
    numerics::UniformFrequencyGrid grid;
    std::vector<double> values;
};

using SpectralDensity = std::variant<Ohmic, Lorentzian, StructuredSiV, Tabulated>;

// Throws InputError when a parameter leaves its admissible range.
void validate(const SpectralDensity& J);

std::string family_name(const SpectralDensity& J);

double eval_sdf(const SpectralDensity& J, double omega);

// Piecewise-linear interpolation of (grid, values), zero outside; values may be signed.
double interpolate_table(const numerics::UniformFrequencyGrid& grid, const std::vector<double>& values,
                         double omega);

// L1 norm int_0^inf J. Lorentzian uses its closed form, tabulated SDFs the exact
// trapezoid sum, the rest adaptive quadrature. The structured family has a 1/omega
// tail and throws DomainError.
double l1_norm(const SpectralDensity& J);
double lorentzian_l1_norm(const Lorentzian& J);

// Frequency scale beyond which J has passed its last feature; sets the quadrature split.
double spectral_scale(const SpectralDensity& J);

// Exponent p with J ~ w^p as w -> 0 (0 when J(0) > 0).
double low_frequency_exponent(const SpectralDensity& J);

// int_0^inf J(w) weight(w) dw using the family-appropriate quadrature layout.
numerics::QuadratureResult integrate_with_sdf(const SpectralDensity& J,
                                              const numerics::RealFunction& weight,
                                              const numerics::QuadratureOptions& opts = {});

// Weight with an oscillating factor of angular frequency `frequency`. Below the
// split `weight` is integrated directly; beyond it the weight must equal
// smooth + cos_amplitude cos(frequency w) + sin_amplitude sin(frequency w),
// where empty functions count as zero.
struct OscillatoryWeight {
    numerics::RealFunction weight;
    numerics::RealFunction smooth;
    numerics::RealFunction cos_amplitude;
    numerics::RealFunction sin_amplitude;
    double frequency{0.0};
    double split{0.0}; // 0 selects tail_split(J); larger values are honoured
};

// Frequency past which every family is smooth enough for the tail rules.
double tail_split(const SpectralDensity& J);

numerics::QuadratureResult integrate_oscillatory_with_sdf(const SpectralDensity& J, const OscillatoryWeight& w,
                                                          const numerics::QuadratureOptions& opts = {});

Tabulated tabulate(const SpectralDensity& J, const numerics::UniformFrequencyGrid& grid);

// ------------------------------------------------------------ thermal bath

class ThermalBath {
public:
    static ThermalBath zero_temperature() { return ThermalBath(); }
    static ThermalBath inverse_temperature(double beta);

    bool is_zero_temperature() const noexcept { return zero_; }
    // Infinity at zero temperature.
    double beta() const noexcept;

    bool operator==(const ThermalBath&) const = default;

private:
    ThermalBath() = default;
    double beta_{0.0};
    bool zero_{true};
};

enum class ThermalKind { coth_half, tanh_half, occupation };

// coth(beta w / 2), tanh(beta w / 2) or 1 / (exp(beta w) - 1); (1, 1, 0) at T = 0.
double thermal_factor(const ThermalBath& bath, double omega, ThermalKind kind);

// -------------------------------------------------------------- persistence

nlohmann::json to_json(const SpectralDensity& J);
SpectralDensity sdf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ThermalBath& bath);
ThermalBath bath_from_json(const nlohmann::json& j);

// Two-column CSV "omega,J" with a header line.
void write_tabulated_csv(const Tabulated& table, const std::filesystem::path& path);
Tabulated read_tabulated_csv(const std::filesystem::path& path);

} // namespace sdfkit
