// nn_refine.cpp — Constrained network SDF, phase-A pretraining and phase-B refinement

#include "sdfkit/nn_refine.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

namespace sdfkit {

// ------------------------------------------------------------------ filter

void FilterSpec::validate() const {
    if (!(d > 0.0) || !(Omega > 0.0)) throw InputError("FilterSpec: d and Omega must be positive");
}

double FilterSpec::operator()(double omega) const {
    if (omega <= 0.0) return 0.0;
    return std::pow(omega, d) * std::exp(-omega / Omega);
}

FilterSpec default_filter(const SpectralPrior& prior) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < prior.frequencies.size(); ++k) {
        const double p = prior.prior_J[k] * prior.prior_J[k];
        num += prior.frequencies[k] * p;
        den += p;
    }
    const double centroid = den > 0.0 ? num / den : 0.5 * prior.frequencies.back();
    return FilterSpec{3.0, 3.0 * centroid};
}

double constrained_sdf(const Mlp& net, const FilterSpec& filter, double omega, double input_scale) {
    if (!(omega >= 0.0)) throw InputError("constrained_sdf: omega must be >= 0");
    const double n = mlp_eval_and_grad(net, omega / input_scale, false).value;
    return filter(omega) * n * n;
}

double constrained_sdf(const SdfNetwork& m, double omega) {
    return constrained_sdf(m.net, m.filter, omega, m.input_scale);
}

namespace {

Eigen::MatrixXd scaled_inputs(const std::vector<double>& omegas, double input_scale) {
    Eigen::MatrixXd X(1, static_cast<Eigen::Index>(omegas.size()));
    for (std::size_t i = 0; i < omegas.size(); ++i) X(0, static_cast<Eigen::Index>(i)) = omegas[i] / input_scale;
    return X;
}

struct Forward {
    Mlp::Tape tape;
    std::vector<double> N;
    std::vector<double> F;
    std::vector<double> J;
};

Forward forward(const SdfNetwork& m, const std::vector<double>& omegas, bool keep_tape) {
    Forward out;
    const Eigen::MatrixXd Y = m.net.forward(scaled_inputs(omegas, m.input_scale), keep_tape ? &out.tape : nullptr);
    out.N.resize(omegas.size());
    out.F.resize(omegas.size());
    out.J.resize(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        out.N[i] = Y(0, static_cast<Eigen::Index>(i));
        out.F[i] = m.filter(omegas[i]);
        out.J[i] = out.F[i] * out.N[i] * out.N[i];
    }
    return out;
}

// Chains dL/dJ through J = F N^2 into parameter gradients.
std::vector<double> chain_to_params(const SdfNetwork& m, const Forward& fw, const std::vector<double>& dJ) {
    Eigen::MatrixXd dY(1, static_cast<Eigen::Index>(dJ.size()));
    for (std::size_t i = 0; i < dJ.size(); ++i) dY(0, static_cast<Eigen::Index>(i)) = dJ[i] * 2.0 * fw.F[i] * fw.N[i];
    return m.net.backward(fw.tape, dY);
}

// lambda mean (J_{n-1} - 2 J_n + J_{n+1})^2, accumulating its gradient into dJ.
double smoothness_term(const std::vector<double>& J, double lambda, std::vector<double>* dJ) {
    if (lambda == 0.0 || J.size() < 3) return 0.0;
    const double m = static_cast<double>(J.size() - 2);
    double s = 0.0;
    for (std::size_t n = 1; n + 1 < J.size(); ++n) {
        const double c = J[n - 1] - 2.0 * J[n] + J[n + 1];
        s += c * c;
        if (dJ) {
            const double g = 2.0 * lambda * c / m;
            (*dJ)[n - 1] += g;
            (*dJ)[n] -= 2.0 * g;
            (*dJ)[n + 1] += g;
        }
    }
    return lambda * s / m;
}

} // namespace

std::vector<double> constrained_sdf(const SdfNetwork& m, const std::vector<double>& omegas) {
    for (double w : omegas) {
        if (!(w >= 0.0)) throw InputError("constrained_sdf: omega must be >= 0");
    }
    return forward(m, omegas, false).J;
}

std::string to_string(Phase p) { return p == Phase::A ? "A" : "B"; }

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) throw InputError("TrainConfig: learning rates must be positive");
    if (patience < 1) throw InputError("TrainConfig: patience must be at least 1");
    if (max_epochs < 1) throw InputError("TrainConfig: max_epochs must be at least 1");
    if (!(smoothness_weight >= 0.0)) throw InputError("TrainConfig: smoothness weight must be >= 0");
}

TrainConfig default_config(Phase p) {
    TrainConfig c;
    c.phase = p;
    if (p == Phase::B) {
        c.learning_rate = 1e-4;
        c.final_learning_rate = 1e-6;
        c.max_epochs = 3000;
        c.patience = 500;
    }
    return c;
}

nlohmann::json to_json(const TrainConfig& c) {
    return nlohmann::json{{"phase", to_string(c.phase)},
                          {"learning_rate", c.learning_rate},
                          {"final_learning_rate", c.final_learning_rate},
                          {"max_epochs", c.max_epochs},
                          {"patience", c.patience},
                          {"smoothness_weight", c.smoothness_weight},
                          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, Phase p) {
    try {
        TrainConfig c = default_config(p);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.final_learning_rate = j.value("final_learning_rate", c.final_learning_rate);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.smoothness_weight = j.value("smoothness_weight", c.smoothness_weight);
        c.seed = j.value("seed", c.seed);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("training config: ") + e.what());
    }
}

// ---------------------------------------------------------------- problems

SdfNetwork initial_network(const SpectralPrior& prior, std::uint64_t seed, const std::vector<std::size_t>& hidden,
                           Activation act) {
    if (prior.frequencies.size() < 2) throw InputError("initial_network: prior grid is too small");
    std::vector<std::size_t> sizes{1};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return SdfNetwork{Mlp::random(sizes, act, seed), default_filter(prior), 0.5 * prior.frequencies.back()};
}

PhaseAProblem PhaseAProblem::from_prior(const SpectralPrior& prior, double smoothness_weight) {
    if (prior.prior_J.size() != prior.frequencies.size()) throw InputError("phase A: prior_J has not been built");
    return PhaseAProblem{prior.frequencies, prior.prior_J, smoothness_weight};
}

LossGrad PhaseAProblem::evaluate(const SdfNetwork& m, bool with_grad) const {
    const Forward fw = forward(m, omegas, with_grad);
    const double L = static_cast<double>(omegas.size());
    LossGrad out;
    std::vector<double> dJ(omegas.size(), 0.0);
    for (std::size_t n = 0; n < omegas.size(); ++n) {
        const double r = fw.J[n] - target[n];
        out.loss += r * r / L;
        dJ[n] = 2.0 * r / L;
    }
    out.loss += smoothness_term(fw.J, smoothness_weight, with_grad ? &dJ : nullptr);
    if (with_grad) out.gradient = chain_to_params(m, fw, dJ);
    return out;
}

PhaseBProblem PhaseBProblem::build(const std::vector<double>& prior_frequencies, const Signal& s,
                                   const ThermalBath& bath, double smoothness_weight) {
    if (s.model != Channel::PD) throw InputError("phase B: expected a PD signal");
    PhaseBProblem p;
    for (double w : prior_frequencies) {
        if (w > 0.0) p.omegas.push_back(w);
    }
    if (p.omegas.size() < 2) throw InputError("phase B: frequency grid has fewer than two positive points");
    const double dw = p.omegas[1] - p.omegas[0];
    const auto K = static_cast<Eigen::Index>(p.omegas.size());
    const auto N = static_cast<Eigen::Index>(s.values.size());
    p.A.resize(N, K);
    for (Eigen::Index j = 0; j < K; ++j) {
        const double w = p.omegas[static_cast<std::size_t>(j)];
        // Trapezoid over [0, w_max] with a vanishing integrand at w = 0.
        const double weight = (j + 1 == K ? 0.5 : 1.0) * dw;
        const double c = weight * thermal_factor(bath, w, ThermalKind::coth_half) / (w * w);
        for (Eigen::Index i = 0; i < N; ++i) {
            const double h = std::sin(0.5 * w * s.grid.time(static_cast<std::size_t>(i)));
            p.A(i, j) = c * 2.0 * h * h;
        }
    }
    p.f = Eigen::Map<const Eigen::VectorXd>(s.values.data(), N);
    p.c0 = 2.0 * s.pd().rho01_abs;
    p.smoothness_weight = smoothness_weight;
    return p;
}

Eigen::VectorXd PhaseBProblem::predict(const std::vector<double>& J) const {
    if (static_cast<Eigen::Index>(J.size()) != A.cols()) throw InputError("phase B: J length mismatch");
    const Eigen::VectorXd G = A * Eigen::Map<const Eigen::VectorXd>(J.data(), A.cols());
    return c0 * (-G.array()).exp().matrix();
}

LossGrad PhaseBProblem::evaluate(const SdfNetwork& m, bool with_grad) const {
    const Forward fw = forward(m, omegas, with_grad);
    const Eigen::VectorXd fhat = predict(fw.J);
    const Eigen::VectorXd r = fhat - f;
    const double N = static_cast<double>(f.size());
    LossGrad out;
    out.loss = r.squaredNorm() / N;
    std::vector<double> dJ(omegas.size(), 0.0);
    if (with_grad) {
        // dL/dG_i = -(2/N) r_i fhat_i, and G = A J.
        const Eigen::VectorXd dG = (-2.0 / N) * r.cwiseProduct(fhat);
        const Eigen::VectorXd g = A.transpose() * dG;
        for (std::size_t j = 0; j < dJ.size(); ++j) dJ[j] = g(static_cast<Eigen::Index>(j));
    }
    out.loss += smoothness_term(fw.J, smoothness_weight, with_grad ? &dJ : nullptr);
    if (with_grad) out.gradient = chain_to_params(m, fw, dJ);
    return out;
}

void calibrate_output(SdfNetwork& m, const PhaseAProblem& problem) {
    const auto J = forward(m, problem.omegas, false).J;
    double sj = 0.0;
    double st = 0.0;
    for (std::size_t n = 0; n < J.size(); ++n) {
        sj += J[n] * J[n];
        st += problem.target[n] * problem.target[n];
    }
    if (sj == 0.0 || st == 0.0) return;
    const double c = std::pow(st / sj, 0.25); // J scales with the square of the output
    auto& last = m.net.layers().back();
    last.W *= c;
    last.b *= c;
}

// ---------------------------------------------------------------- training

namespace {

std::string config_hash(const TrainConfig& cfg, const SdfNetwork& m) {
    nlohmann::json j = to_json(cfg);
    j["layer_sizes"] = m.net.layer_sizes();
    j["filter"] = {{"d", m.filter.d}, {"Omega", m.filter.Omega}};
    j["input_scale"] = m.input_scale;
    return sha256_hex(j.dump());
}

Checkpoint run_adam(SdfNetwork model, const TrainConfig& cfg,
                    const std::function<LossGrad(const SdfNetwork&, bool)>& objective) {
    cfg.validate();
    Checkpoint ck;
    ck.phase = cfg.phase;
    ck.config_hash = config_hash(cfg, model);
    std::vector<double> theta = model.net.flatten();
    std::vector<double> best_theta = theta;
    Adam adam(theta.size(), cfg.learning_rate);
    const double decay = std::log(cfg.final_learning_rate / cfg.learning_rate) / static_cast<double>(cfg.max_epochs);

    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        model.net.assign(theta);
        const LossGrad lg = objective(model, true);
        if (epoch == 0) {
            ck.initial_loss = lg.loss;
            ck.best_loss = lg.loss;
        }
        ck.loss_history.push_back(lg.loss);
        ck.epochs_run = epoch + 1;
        if (!std::isfinite(lg.loss) || lg.loss > 1e3 * std::max(ck.initial_loss, 1e-300)) {
            throw NumericalError("phase " + to_string(cfg.phase) + " training diverged at epoch " +
                                 std::to_string(epoch) + " (loss " + std::to_string(lg.loss) + ", initial " +
                                 std::to_string(ck.initial_loss) + "); lower the learning rate");
        }
        if (epoch == 0 || lg.loss < ck.best_loss * (1.0 - 1e-9)) {
            ck.best_loss = lg.loss;
            ck.epoch = epoch;
            best_theta = theta;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
        adam.set_learning_rate(cfg.learning_rate * std::exp(decay * static_cast<double>(epoch)));
        adam.step(theta, lg.gradient);
    }
    model.net.assign(best_theta);
    ck.model = std::move(model);
    return ck;
}

} // namespace

Checkpoint train_phase_a(SdfNetwork init, const SpectralPrior& prior, const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.phase = Phase::A;
    const auto problem = PhaseAProblem::from_prior(prior, c.smoothness_weight);
    calibrate_output(init, problem);
    return run_adam(std::move(init), c,
                    [&problem](const SdfNetwork& m, bool g) { return problem.evaluate(m, g); });
}

Checkpoint train_phase_b(const Checkpoint& start, const std::vector<double>& frequencies, const Signal& s,
                         const ThermalBath& bath, const TrainConfig& cfg) {
    if (start.phase != Phase::A) throw InputError("train_phase_b: expected a phase-A checkpoint to start from");
    TrainConfig c = cfg;
    c.phase = Phase::B;
    const auto problem = PhaseBProblem::build(frequencies, s, bath, c.smoothness_weight);
    return run_adam(start.model, c, [&problem](const SdfNetwork& m, bool g) { return problem.evaluate(m, g); });
}

// ------------------------------------------------------------- persistence

nlohmann::json to_json(const Checkpoint& c) {
    return nlohmann::json{{"network", to_json(c.model.net)},
                          {"filter", {{"d", c.model.filter.d}, {"Omega", c.model.filter.Omega}}},
                          {"input_scale", c.model.input_scale},
                          {"phase", to_string(c.phase)},
                          {"epoch", c.epoch},
                          {"epochs_run", c.epochs_run},
                          {"initial_loss", c.initial_loss},
                          {"best_loss", c.best_loss},
                          {"loss_history", c.loss_history},
                          {"config_hash", c.config_hash}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        Checkpoint c;
        c.model.net = mlp_from_json(j.at("network"));
        c.model.filter = FilterSpec{j.at("filter").at("d").get<double>(), j.at("filter").at("Omega").get<double>()};
        c.model.filter.validate();
        c.model.input_scale = j.at("input_scale").get<double>();
        const std::string phase = j.at("phase").get<std::string>();
        if (phase != "A" && phase != "B") throw ConfigError("checkpoint: unknown phase '" + phase + "'");
        c.phase = phase == "A" ? Phase::A : Phase::B;
        c.epoch = j.at("epoch").get<std::size_t>();
        c.epochs_run = j.value("epochs_run", c.epoch + 1);
        c.initial_loss = j.at("initial_loss").get<double>();
        c.best_loss = j.at("best_loss").get<double>();
        c.loss_history = j.at("loss_history").get<std::vector<double>>();
        c.config_hash = j.at("config_hash").get<std::string>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    // Full precision so a reload reproduces the losses bit for bit.
    os << to_json(c).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    try {
        return checkpoint_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_reconstruction(const SdfNetwork& m, const std::vector<double>& omegas, const std::filesystem::path& path) {
    csv::write(path, {"omega", "J_NN"}, {omegas, constrained_sdf(m, omegas)});
}

} // namespace sdfkit
