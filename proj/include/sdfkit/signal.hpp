// signal.hpp — Channel configurations, noise descriptors and time-domain signals

#pragma once

#include "sdfkit/numerics.hpp"
#include "sdfkit/sdf_models.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sdfkit {

enum class Channel { PD, AD };

std::string to_string(Channel c);
Channel channel_from_string(const std::string& s);

// Pure dephasing: coherence 2|rho01(0)| exp(-G(t)).
struct PDConfig {
    SpectralDensity J{Ohmic{}};
    ThermalBath bath{ThermalBath::zero_temperature()};
    double rho01_abs{0.5};

    void validate() const;
};

// Amplitude damping in the zero-temperature single-excitation sector.
struct ADConfig {
    SpectralDensity J{Lorentzian{}};
    double omega_0{1.0};
    double rho11_init{1.0};

    void validate() const;
};

using ChannelConfig = std::variant<PDConfig, ADConfig>;

enum class NoiseKind { gaussian_multiplicative, uniform_multiplicative };

// Multiplicative noise f -> f (1 + delta) with |delta - mean_offset| <= clip.
struct NoiseSpec {
    NoiseKind kind{NoiseKind::gaussian_multiplicative};
    double sigma_or_halfwidth{0.0};
    double clip{0.0};
    double mean_offset{0.0};

    static NoiseSpec none() { return NoiseSpec{}; }
    // Zero-mean Gaussian clipped to |delta| <= clip.
    static NoiseSpec clipped_gaussian(double sigma, double clip) {
        return NoiseSpec{NoiseKind::gaussian_multiplicative, sigma, clip, 0.0};
    }
    // delta uniform on (0, 0.1), mean 0.05.
    static NoiseSpec positive_uniform() {
        return NoiseSpec{NoiseKind::uniform_multiplicative, 0.05, 0.05, 0.05};
    }

    void validate() const;
    bool operator==(const NoiseSpec&) const = default;
};

struct NoiseRecord {
    NoiseSpec spec;
    std::uint64_t seed{0};
};

struct Signal {
    Signal(Channel model, numerics::UniformTimeGrid grid, std::vector<double> values, ChannelConfig config,
           std::optional<NoiseRecord> noise = std::nullopt);

    Channel model;
    numerics::UniformTimeGrid grid;
    std::vector<double> values;
    ChannelConfig config;
    std::optional<NoiseRecord> noise;

    const PDConfig& pd() const;
    const ADConfig& ad() const;
};

nlohmann::json to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChannelConfig& c);
ChannelConfig channel_config_from_json(const nlohmann::json& j);

// Metadata sidecar: model, SDF family and parameters, bath, grid, noise and seed.
nlohmann::json signal_metadata(const Signal& s);

// Writes "t,f" CSV at csv_path and the metadata next to it with a .json extension.
void write_signal(const Signal& s, const std::filesystem::path& csv_path);
Signal read_signal(const std::filesystem::path& csv_path);

} // namespace sdfkit
