// datagen.hpp — Noise injection, parametric datasets and train/test partitions

#pragma once

#include "sdfkit/numerics.hpp"
#include "sdfkit/sdf_models.hpp"
#include "sdfkit/signal.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sdfkit {

// f -> f (1 + delta), delta drawn per sample and clamped to |delta - mean_offset| <= clip.
// AD outputs are additionally clamped to [-1, 1]. clip = 0 therefore disables noise.
Signal apply_noise(const Signal& clean, const NoiseSpec& noise, std::uint64_t seed);

// The multiplicative factors 1 + delta that apply_noise would use.
std::vector<double> noise_factors(std::size_t n, const NoiseSpec& noise, std::uint64_t seed);

// Parametric families used for datasets and least-squares fits.
enum class Family {
    ohmic,      // xi = (alpha, s, omega_c), PD channel
    lorentzian, // xi = (lambda, gamma0, omega_b), AD channel
};

std::string to_string(Family f);
Family family_from_string(const std::string& s);
Channel channel_of(Family f);
std::vector<std::string> parameter_names(Family f);
SpectralDensity make_sdf(Family f, std::span<const double> xi);

struct ParameterBox {
    std::vector<double> low;
    std::vector<double> high;

    static ParameterBox cube(std::size_t dim, double lo, double hi);
    std::size_t dim() const { return low.size(); }
    bool contains(std::span<const double> xi) const;
    void validate() const; // finite, low <= high
};

// Channel settings shared by every instance of a dataset.
struct ChannelContext {
    ThermalBath bath{ThermalBath::zero_temperature()};
    double rho01_abs{0.5};
    double omega_0{1.0};
};

enum class ForwardRoute {
    analytic,  // resolved closed forms (falls back to numerics at finite temperature)
    numerical, // quadrature / Volterra
};

// Clean signal of a family member on a grid.
Signal simulate_family(Family f, std::span<const double> xi, const numerics::UniformTimeGrid& grid,
                       const ChannelContext& ctx, ForwardRoute route = ForwardRoute::analytic);

struct Instance {
    std::vector<double> xi;
    Signal signal;
};

struct DatasetSpec {
    Family family{Family::lorentzian};
    ParameterBox box{ParameterBox::cube(3, 0.1, 1.0)};
    std::size_t n_instances{2000};
    numerics::UniformTimeGrid grid{0.1, 400};
    NoiseSpec noise{};
    std::uint64_t seed{0};
    ChannelContext context{};
    ForwardRoute route{ForwardRoute::analytic};
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Instance> instances;

    Channel model() const { return channel_of(spec.family); }
    std::size_t size() const { return instances.size(); }
    std::size_t n_times() const { return spec.grid.size(); }
};

// Uniform draws inside the box; a draw whose forward map throws or returns
// non-finite values is redrawn, at most 10 times per slot.
Dataset generate_dataset(const DatasetSpec& spec);

nlohmann::json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

enum class DatasetLayout { wide, per_instance };

// <dir>/manifest.json plus either <dir>/instances.csv (id, xi..., f0..f{N-1})
// or <dir>/instances/<id>.csv with columns t, f.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir, DatasetLayout layout = DatasetLayout::wide);
Dataset read_dataset(const std::filesystem::path& dir);

struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// round(fraction * n) training indices after a seeded shuffle.
HoldoutSplit holdout_split(std::size_t n, double fraction, std::uint64_t seed);

// k disjoint folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

} // namespace sdfkit
