// nn_refine.hpp — Constrained network SDF: J_NN(w) = w^d exp(-w/Omega) N(w)^2
//
// Phase A fits J_NN to the cosine-transform prior on its frequency grid; phase B
// starts from the phase-A optimum and fits the coherence signal through a
// fixed-grid quadrature of the decoherence exponent.

#pragma once

#include "sdfkit/dct_prior.hpp"
#include "sdfkit/mlp.hpp"
#include "sdfkit/signal.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdfkit {

struct FilterSpec {
    double d{3.0};
    double Omega{1.0};

    void validate() const;
    double operator()(double omega) const;
};

// d = 3 and Omega = 3 x the power centroid sum nu prior^2 / sum prior^2.
FilterSpec default_filter(const SpectralPrior& prior);

// The network sees omega / input_scale.
struct SdfNetwork {
    Mlp net;
    FilterSpec filter;
    double input_scale{1.0};
};

double constrained_sdf(const Mlp& net, const FilterSpec& filter, double omega, double input_scale = 1.0);
double constrained_sdf(const SdfNetwork& m, double omega);
std::vector<double> constrained_sdf(const SdfNetwork& m, const std::vector<double>& omegas);

enum class Phase { A, B };
std::string to_string(Phase p);

struct TrainConfig {
    Phase phase{Phase::A};
    double learning_rate{3e-3};
    double final_learning_rate{3e-5}; // exponential decay towards this over max_epochs
    std::size_t max_epochs{20000};
    std::size_t patience{2000};       // epochs without a 1e-9 relative improvement
    double smoothness_weight{0.0};    // lambda_sm on the squared second difference of J_NN
    std::uint64_t seed{0};

    void validate() const;
};

TrainConfig default_config(Phase p);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, Phase p);

struct Checkpoint {
    SdfNetwork model;
    Phase phase{Phase::A};
    std::size_t epoch{0};       // epoch of the stored (best) parameters
    std::size_t epochs_run{0};
    double initial_loss{0.0};
    double best_loss{0.0};
    std::vector<double> loss_history; // loss per epoch
    std::string config_hash;
};

// Fresh network with fan-in initialisation; hidden widths default to 32, 32.
SdfNetwork initial_network(const SpectralPrior& prior, std::uint64_t seed,
                           const std::vector<std::size_t>& hidden = {32, 32},
                           Activation act = Activation::tanh);

struct LossGrad {
    double loss{0.0};
    std::vector<double> gradient;
};

// Phase-A objective on (omegas, target):
// mean (J_NN - target)^2 + lambda_sm mean (second difference of J_NN)^2.
struct PhaseAProblem {
    std::vector<double> omegas;
    std::vector<double> target;
    double smoothness_weight{0.0};

    static PhaseAProblem from_prior(const SpectralPrior& prior, double smoothness_weight);
    LossGrad evaluate(const SdfNetwork& m, bool with_grad) const;
};

// Phase-B objective: mean (C0 exp(-A J_NN) - f)^2 with
// A_ij = w_j coth(beta w_j / 2) (1 - cos w_j t_i) / w_j^2 on the prior grid minus w = 0.
struct PhaseBProblem {
    std::vector<double> omegas;
    Eigen::MatrixXd A;
    Eigen::VectorXd f;
    double c0{1.0};
    double smoothness_weight{0.0};

    static PhaseBProblem build(const std::vector<double>& prior_frequencies, const Signal& s,
                               const ThermalBath& bath, double smoothness_weight);
    Eigen::VectorXd predict(const std::vector<double>& J) const;
    LossGrad evaluate(const SdfNetwork& m, bool with_grad) const;
};

// Rescales the output layer so the initial J_NN has the RMS of the target.
void calibrate_output(SdfNetwork& m, const PhaseAProblem& problem);

Checkpoint train_phase_a(SdfNetwork init, const SpectralPrior& prior, const TrainConfig& cfg);
// `frequencies` is the prior grid; its w = 0 point is dropped from the quadrature.
Checkpoint train_phase_b(const Checkpoint& start, const std::vector<double>& frequencies, const Signal& s,
                         const ThermalBath& bath, const TrainConfig& cfg);

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// CSV "omega,J_NN".
void write_reconstruction(const SdfNetwork& m, const std::vector<double>& omegas, const std::filesystem::path& path);

} // namespace sdfkit
