// pipeline.cpp — Run configuration, stage orchestration, manifests and robustness sweeps

#include "sdfkit/pipeline.hpp"

#include "sdfkit/csv.hpp"
#include "sdfkit/datagen.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/estimators.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/hashing.hpp"
#include "sdfkit/random.hpp"
#include "sdfkit/sensitivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>

namespace sdfkit {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------ config

json default_run_config() {
    json j;
    j["seed"] = 0;
    j["input_signal"] = nullptr;
    j["channel"] = {{"model", "PD"},
                    {"sdf", to_json(SpectralDensity{StructuredSiV::silicon_vacancy()})},
                    {"bath", to_json(ThermalBath::zero_temperature())},
                    {"rho01_abs", 0.5},
                    {"omega_0", 1.0}};
    j["grid"] = {{"dt", 0.01}, {"n_points", 6400}};
    j["noise"] = nullptr;
    j["noise_seed"] = nullptr;
    j["inversion"] = {{"clamp_eps", nullptr}, {"power_threshold", kDefaultPowerThreshold}, {"max_frequency", 40.0}};
    j["network"] = {{"hidden", {32, 32}}, {"activation", "tanh"}};
    j["phase_a"] = to_json(default_config(Phase::A));
    j["phase_b"] = to_json(default_config(Phase::B));
    j["diagnostics"] = {{"compare_range", {2.0, 25.0}},
                        {"peak_min_fraction", 0.01},
                        {"peak_tolerance_bins", 2.0},
                        {"rms_tolerance", 0.05},
                        {"dct_sufficient_residual", 0.01}};
    j["fit"] = {{"family", "lorentzian"},
                {"params", {0.5, 0.5, 0.5}},
                {"box", {{"low", {0.1, 0.1, 0.1}}, {"high", {1.0, 1.0, 1.0}}}},
                {"grid", {{"dt", 0.1}, {"n_points", 400}}},
                {"multistart", 20}};
    j["bench"] = {{"family", "lorentzian"},
                  {"count", 2000},
                  {"grid", {{"dt", 0.1}, {"n_points", 400}}},
                  {"box", {{"low", {0.1, 0.1, 0.1}}, {"high", {1.0, 1.0, 1.0}}}},
                  {"train_fraction", 0.75},
                  {"kfold", 5},
                  {"regressors", {"mlp", "random_forest"}},
                  {"mlp_grid", json::array({json::object()})},
                  {"forest_grid", json::array({json::object()})}};
    j["sensitivity"] = {{"sdf", to_json(SpectralDensity{Lorentzian{1.0, 0.5, 1.0}})},
                        {"omega_0", 1.0},
                        {"n_perturbations", 100},
                        {"ratio", 1e-3},
                        {"dt", 0.02},
                        {"t_final_over_lambda", 5.0},
                        {"d_omega", 0.02},
                        {"omega_max", 40.0},
                        {"bump_half_width", 0.05}};
    j["sweep"] = {{"seeds", {0, 1}}, {"variations", json::array()}, {"stages", "full"}};
    return j;
}

namespace {

void deep_merge(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        // SDF blocks are replaced wholesale: merging would leak parameters across families.
        if (it.key() != "sdf" && base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

} // namespace

json resolve_run_config(const json& user) {
    if (!user.is_object()) throw ConfigError("run config must be a JSON object");
    json src = user;
    if (src.contains("command") && src.contains("config")) src = src["config"]; // a previous manifest
    json cfg = default_run_config();
    for (auto it = src.begin(); it != src.end(); ++it) {
        if (!cfg.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    }
    deep_merge(cfg, src);
    return cfg;
}

json load_run_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    try {
        return resolve_run_config(json::parse(is));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    std::string pointer;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        pointer += "/" + part;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    const std::string top = key.substr(0, key.find('.'));
    if (!cfg.contains(top)) throw ConfigError("unknown config key '" + top + "'");
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    try {
        cfg[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
}

fs::path default_output_root() {
    if (const char* env = std::getenv("SDFKIT_OUTPUT_ROOT"); env != nullptr && *env != '\0') return fs::path(env);
    return fs::path("sdfkit-runs");
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
        if (!fs::is_empty(dir)) {
            if (!overwrite) throw ConfigError("output directory " + dir.string() + " is not empty (use --overwrite)");
            fs::remove_all(dir);
        }
    }
    fs::create_directories(dir);
}

void write_manifest(const fs::path& dir, const std::string& command, const json& cfg,
                    const std::vector<fs::path>& artifacts, const json& extra) {
    json m;
    m["command"] = command;
    m["config"] = cfg;
    m["seed"] = cfg.value("seed", 0);
    json files = json::object();
    for (const auto& a : artifacts) files[fs::relative(a, dir).generic_string()] = sha256_file(a);
    m["artifacts"] = files;
    m["precision"] = "float64";
    m["hardware"] = "single process, no threading";
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    std::ofstream os(dir / "manifest.json");
    if (!os) throw ConfigError("cannot write manifest in " + dir.string());
    os << m.dump(2) << '\n';
}

// ------------------------------------------------------------------ stages

namespace {

// Re-throws with the stage name prepended, keeping the error category.
template <class F>
auto stage(const char* name, F&& f) {
    const std::string p = std::string("stage '") + name + "': ";
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(p + e.what());
    } catch (const InputError& e) {
        throw InputError(p + e.what());
    } catch (const DomainError& e) {
        throw DomainError(p + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(p + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(p + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

std::uint64_t noise_seed(const json& cfg) {
    if (cfg.contains("noise_seed") && !cfg["noise_seed"].is_null()) return cfg["noise_seed"].get<std::uint64_t>();
    return derive_seed(cfg.value("seed", std::uint64_t{0}), 1);
}

numerics::UniformTimeGrid grid_from(const json& g) {
    return numerics::UniformTimeGrid(get<double>(g, "dt"), get<std::size_t>(g, "n_points"));
}

ChannelContext context_from(const json& ch) {
    ChannelContext ctx;
    ctx.bath = bath_from_json(ch.value("bath", json()));
    ctx.rho01_abs = ch.value("rho01_abs", 0.5);
    ctx.omega_0 = ch.value("omega_0", 1.0);
    return ctx;
}

ParameterBox box_from(const json& b) {
    ParameterBox box{get<std::vector<double>>(b, "low"), get<std::vector<double>>(b, "high")};
    box.validate();
    return box;
}

double rms(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Locations of significant local maxima, strongest first.
std::vector<double> peaks(const std::vector<double>& freqs, const std::vector<double>& values, double min_fraction) {
    const auto idx = local_maxima(values);
    std::vector<double> out;
    if (idx.empty()) return out;
    const double top = values[idx.front()];
    for (auto i : idx) {
        if (values[i] >= min_fraction * top && values[i] > 0.0) out.push_back(freqs[i]);
    }
    return out;
}

// Distance in bins from `target` to the nearest of `found` (infinity when empty).
double bin_distance(double target, const std::vector<double>& found, double d_nu) {
    double best = std::numeric_limits<double>::infinity();
    for (double f : found) best = std::min(best, std::abs(f - target) / d_nu);
    return best;
}

double nearest(double target, const std::vector<double>& found) {
    double best = std::numeric_limits<double>::quiet_NaN();
    double dist = std::numeric_limits<double>::infinity();
    for (double f : found) {
        if (std::abs(f - target) < dist) {
            dist = std::abs(f - target);
            best = f;
        }
    }
    return best;
}

double relative_l2(const std::vector<double>& freqs, const std::vector<double>& est, const std::vector<double>& truth,
                   double lo, double hi) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (freqs[k] < lo || freqs[k] > hi) continue;
        num += (est[k] - truth[k]) * (est[k] - truth[k]);
        den += truth[k] * truth[k];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::quiet_NaN();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

SignalBundle make_signal(const json& cfg) {
    if (cfg.contains("input_signal") && !cfg["input_signal"].is_null()) {
        return SignalBundle{read_signal(cfg["input_signal"].get<std::string>()), std::nullopt};
    }
    const json& ch = cfg.at("channel");
    const auto grid = grid_from(cfg.at("grid"));
    json chj = ch;
    chj.erase(to_string(channel_from_string(get<std::string>(ch, "model"))) == "PD" ? "omega_0" : "rho01_abs");
    const ChannelConfig cc = channel_config_from_json(chj);
    Signal clean = std::holds_alternative<PDConfig>(cc) ? pd_signal(std::get<PDConfig>(cc), grid)
                                                        : ad_signal(std::get<ADConfig>(cc), grid);
    if (cfg["noise"].is_null()) return SignalBundle{clean, std::nullopt};
    Signal noisy = apply_noise(clean, noise_from_json(cfg["noise"]), noise_seed(cfg));
    return SignalBundle{std::move(noisy), std::move(clean)};
}

InversionOptions inversion_options(const json& cfg, const Signal& s) {
    const json& inv = cfg.at("inversion");
    InversionOptions o;
    if (inv.contains("clamp_eps") && !inv["clamp_eps"].is_null()) o.clamp_eps = inv["clamp_eps"].get<double>();
    o.power_threshold_fraction = inv.value("power_threshold", kDefaultPowerThreshold);
    if (inv.contains("max_frequency") && !inv["max_frequency"].is_null()) {
        const double wmax = inv["max_frequency"].get<double>();
        if (!(wmax > 0.0)) throw ConfigError("inversion.max_frequency must be positive");
        const double d_nu = std::numbers::pi / s.grid.final_time();
        o.n_frequencies = std::min(s.grid.size(), static_cast<std::size_t>(wmax / d_nu) + 1);
    }
    return o;
}

namespace {

enum class Depth { signal, prior, refine, full };

struct StageState {
    std::vector<fs::path> artifacts;
    json report;
    json grids;
};

PipelineOutcome run_stages(const json& cfg, const fs::path& dir, Depth depth, const std::string& command) {
    PipelineOutcome out;
    StageState st;
    json& rep = st.report;
    const auto t_start = std::chrono::steady_clock::now();

    // simulate
    auto t0 = std::chrono::steady_clock::now();
    const SignalBundle sig = stage("simulate", [&] { return make_signal(cfg); });
    const Signal& s = sig.measured;
    stage("simulate", [&] {
        write_signal(s, dir / "signal.csv");
        st.artifacts.push_back(dir / "signal.csv");
        st.artifacts.push_back(dir / "signal.json");
        if (sig.clean) {
            write_signal(*sig.clean, dir / "signal_clean.csv");
            st.artifacts.push_back(dir / "signal_clean.csv");
            st.artifacts.push_back(dir / "signal_clean.json");
        }
        return 0;
    });
    st.grids = {{"dt", s.grid.dt()}, {"t_f", s.grid.final_time()}, {"n_points", s.grid.size()}};
    rep["signal"] = {{"model", to_string(s.model)}, {"f0", s.values.front()}, {"noisy", s.noise.has_value()}};
    json timings = {{"simulate", seconds_since(t0)}};

    auto finish = [&] {
        // Wall-clock times live outside the hashed artifacts so reruns reproduce them bit for bit.
        timings["total"] = seconds_since(t_start);
        write_json(dir / "report.json", rep);
        write_json(dir / "timings.json", timings);
        st.artifacts.push_back(dir / "report.json");
        write_manifest(dir, command, cfg, st.artifacts, {{"grids", st.grids}, {"noise_seed", noise_seed(cfg)}});
        out.report = rep;
        out.report["seconds"] = timings;
        return out;
    };
    if (depth == Depth::signal) return finish();

    if (s.model != Channel::PD) throw ConfigError("stage 'precondition': the spectral inversion needs a PD signal");
    const PDConfig& pd = s.pd();
    const InversionOptions io = inversion_options(cfg, s);

    // precondition
    stage("precondition", [&] {
        const double eps = io.clamp_eps.value_or(kDefaultClampFraction * 2.0 * pd.rho01_abs);
        const auto H = log_second_derivative(s, eps);
        std::vector<double> clamped(s.values.size()), G(s.values.size());
        std::size_t n_clamped = 0;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            clamped[i] = std::max(s.values[i], eps);
            n_clamped += s.values[i] < eps ? 1 : 0;
            G[i] = -std::log(clamped[i] / (2.0 * pd.rho01_abs));
        }
        csv::write(dir / "preconditioned.csv", {"t", "C", "G", "H"}, {s.grid.times(), clamped, G, H});
        st.artifacts.push_back(dir / "preconditioned.csv");
        rep["precondition"] = {{"clamp_eps", eps}, {"n_clamped", n_clamped}};
        return 0;
    });

    // prior
    t0 = std::chrono::steady_clock::now();
    const SpectralPrior prior = stage("prior", [&] { return invert_pd_signal(s, io); });
    stage("prior", [&] {
        write_prior(prior, dir / "prior.csv");
        st.artifacts.push_back(dir / "prior.csv");
        st.artifacts.push_back(dir / "prior.json");
        return 0;
    });
    const json& dg = cfg.at("diagnostics");
    const double min_frac = dg.value("peak_min_fraction", 0.01);
    const auto range = dg.value("compare_range", std::vector<double>{2.0, 25.0});
    const double d_nu = prior.d_nu();
    st.grids["d_omega"] = d_nu;
    st.grids["omega_max"] = prior.frequencies.back();
    const double raw_min = *std::min_element(prior.raw_S.begin(), prior.raw_S.end());
    const double raw_max = *std::max_element(prior.raw_S.begin(), prior.raw_S.end());
    const auto prior_peaks = peaks(prior.frequencies, prior.prior_J, min_frac);
    rep["prior"] = {{"n_frequencies", prior.frequencies.size()},
                    {"d_nu", d_nu},
                    {"raw_min", raw_min},
                    {"raw_max", raw_max},
                    {"has_negative_values", raw_min < 0.0},
                    {"peaks", std::vector<double>(prior_peaks.begin(),
                                                  prior_peaks.begin() + std::min<std::ptrdiff_t>(5, std::ssize(prior_peaks)))},
                    {"diagnostics", prior.diagnostics}};
    timings["prior"] = seconds_since(t0);

    // Reference SDF on the prior grid, when the signal was simulated from a known model.
    std::optional<std::vector<double>> J_true;
    std::vector<double> true_peaks;
    if (sig.clean || !s.noise) {
        if (!(cfg.contains("input_signal") && !cfg["input_signal"].is_null())) {
            std::vector<double> v(prior.frequencies.size());
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = eval_sdf(pd.J, prior.frequencies[k]);
            for (double p : peaks(prior.frequencies, v, min_frac)) {
                if (p >= range[0] && p <= range[1]) true_peaks.push_back(p);
            }
            rep["truth"] = {{"peaks", true_peaks},
                            {"prior_relative_l2", relative_l2(prior.frequencies, prior.prior_J, v, range[0], range[1])}};
            J_true = std::move(v);
        }
    }
    auto peak_report = [&](const std::vector<double>& found) {
        json j = json::array();
        for (double p : true_peaks) {
            j.push_back({{"true", p}, {"found", nearest(p, found)}, {"bins", bin_distance(p, found, d_nu)}});
        }
        return j;
    };
    if (!true_peaks.empty()) rep["prior"]["peak_match"] = peak_report(prior_peaks);

    const PhaseBProblem forward = stage("prior", [&] {
        return PhaseBProblem::build(prior.frequencies, s, prior.bath, 0.0);
    });
    auto coherence_of = [&](const std::vector<double>& J) {
        return to_vector(forward.predict(std::vector<double>(J.begin() + 1, J.end())));
    };
    const double scale = 2.0 * pd.rho01_abs;
    const auto C_prior = coherence_of(prior.prior_J);
    const double prior_res = rms(C_prior, s.values) / scale;
    rep["prior"]["coherence_rms_vs_measured"] = prior_res;
    rep["dct_only_sufficient"] = prior_res <= dg.value("dct_sufficient_residual", 0.01);

    if (depth == Depth::prior) return finish();

    // refine
    const json& net = cfg.at("network");
    const auto hidden = get<std::vector<std::size_t>>(net, "hidden");
    const Activation act = activation_from_string(net.value("activation", std::string("tanh")));
    const TrainConfig ca = stage("refine", [&] { return train_config_from_json(cfg.at("phase_a"), Phase::A); });
    const TrainConfig cb = stage("refine", [&] { return train_config_from_json(cfg.at("phase_b"), Phase::B); });
    t0 = std::chrono::steady_clock::now();
    const Checkpoint A = stage("refine", [&] {
        auto init = initial_network(prior, derive_seed(cfg.value("seed", std::uint64_t{0}), 2), hidden, act);
        auto c = train_phase_a(std::move(init), prior, ca);
        save_checkpoint(c, dir / "checkpoint_phase_a.json");
        st.artifacts.push_back(dir / "checkpoint_phase_a.json");
        return c;
    });
    const double secs_a = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const Checkpoint B = stage("refine", [&] {
        auto c = train_phase_b(A, prior.frequencies, s, prior.bath, cb);
        save_checkpoint(c, dir / "checkpoint_phase_b.json");
        st.artifacts.push_back(dir / "checkpoint_phase_b.json");
        write_reconstruction(c.model, prior.frequencies, dir / "reconstruction.csv");
        st.artifacts.push_back(dir / "reconstruction.csv");
        return c;
    });
    auto loss_csv = [&](const Checkpoint& c, const char* name) {
        std::vector<double> epoch(c.loss_history.size());
        std::iota(epoch.begin(), epoch.end(), 0.0);
        csv::write(dir / name, {"epoch", "loss"}, {epoch, c.loss_history});
        st.artifacts.push_back(dir / name);
    };
    loss_csv(A, "loss_phase_a.csv");
    loss_csv(B, "loss_phase_b.csv");
    auto phase_json = [](const Checkpoint& c) {
        return json{{"initial_loss", c.initial_loss}, {"best_loss", c.best_loss}, {"best_epoch", c.epoch},
                    {"epochs_run", c.epochs_run}};
    };
    rep["phase_a"] = phase_json(A);
    rep["phase_b"] = phase_json(B);
    timings["phase_a"] = secs_a;
    timings["phase_b"] = seconds_since(t0);

    if (depth == Depth::refine) return finish();

    // diagnose
    stage("diagnose", [&] {
        const auto J_nn = constrained_sdf(B.model, prior.frequencies);
        const auto C_nn = coherence_of(J_nn);
        const auto nn_peaks = peaks(prior.frequencies, J_nn, min_frac);
        const double nn_min = *std::min_element(J_nn.begin(), J_nn.end());
        json nn = {{"min", nn_min},
                   {"peaks", std::vector<double>(nn_peaks.begin(),
                                                 nn_peaks.begin() + std::min<std::ptrdiff_t>(5, std::ssize(nn_peaks)))},
                   {"coherence_rms_vs_measured", rms(C_nn, s.values) / scale}};
        std::vector<std::string> sdf_header{"omega", "J_cos", "raw_S", "J_NN"};
        std::vector<std::vector<double>> sdf_cols{prior.frequencies, prior.prior_J, prior.raw_S, J_nn};
        std::vector<std::string> coh_header{"t", "C", "C_NN", "C_cos"};
        std::vector<std::vector<double>> coh_cols{s.grid.times(), s.values, C_nn, C_prior};
        const std::vector<double>& reference = sig.clean ? sig.clean->values : s.values;
        const double nn_res = rms(C_nn, reference) / scale;
        nn["coherence_rms"] = nn_res;
        if (sig.clean) {
            coh_header.push_back("C_true");
            coh_cols.push_back(sig.clean->values);
        }
        if (J_true) {
            sdf_header.push_back("J_true");
            sdf_cols.push_back(*J_true);
            nn["relative_l2"] = relative_l2(prior.frequencies, J_nn, *J_true, range[0], range[1]);
            nn["peak_match"] = peak_report(nn_peaks);
        }
        csv::write(dir / "comparison_sdf.csv", sdf_header, sdf_cols);
        csv::write(dir / "comparison_coherence.csv", coh_header, coh_cols);
        st.artifacts.push_back(dir / "comparison_sdf.csv");
        st.artifacts.push_back(dir / "comparison_coherence.csv");
        rep["nn"] = nn;

        json checks = json::object();
        checks["j_nn_nonnegative"] = nn_min >= 0.0;
        checks["phase_b_decreased"] = B.best_loss < B.initial_loss;
        checks["coherence_rms"] = nn_res <= dg.value("rms_tolerance", 0.05);
        if (!true_peaks.empty()) {
            const double tol = dg.value("peak_tolerance_bins", 2.0);
            bool ok = true;
            for (double p : true_peaks) ok = ok && bin_distance(p, nn_peaks, d_nu) <= tol;
            checks["peaks_recovered"] = ok;
        }
        for (auto it = checks.begin(); it != checks.end(); ++it) {
            if (!it.value().get<bool>()) {
                out.check_passed = false;
                out.failed_checks.push_back(it.key());
            }
        }
        rep["checks"] = checks;
        rep["check_passed"] = out.check_passed;
        return 0;
    });
    return finish();
}

} // namespace

json run_simulate(const json& cfg, const fs::path& dir) {
    return run_stages(cfg, dir, Depth::signal, "simulate").report;
}

json run_invert(const json& cfg, const fs::path& dir) { return run_stages(cfg, dir, Depth::prior, "invert").report; }

json run_refine(const json& cfg, const fs::path& dir) { return run_stages(cfg, dir, Depth::refine, "refine").report; }

PipelineOutcome run_pipeline(const json& cfg, const fs::path& dir) {
    return run_stages(cfg, dir, Depth::full, "pipeline");
}

// ---------------------------------------------------------------- fit

json run_fit(const json& cfg, const fs::path& dir) {
    const json& fc = cfg.at("fit");
    const Family family = stage("fit", [&] { return family_from_string(get<std::string>(fc, "family")); });
    const ParameterBox box = stage("fit", [&] { return box_from(fc.at("box")); });
    std::vector<fs::path> artifacts;
    std::optional<std::vector<double>> truth;
    const Signal s = stage("simulate", [&] {
        if (cfg.contains("input_signal") && !cfg["input_signal"].is_null()) {
            return read_signal(cfg["input_signal"].get<std::string>());
        }
        truth = get<std::vector<double>>(fc, "params");
        Signal clean = simulate_family(family, *truth, grid_from(fc.at("grid")), context_from(cfg.at("channel")));
        if (cfg["noise"].is_null()) return clean;
        return apply_noise(clean, noise_from_json(cfg["noise"]), noise_seed(cfg));
    });
    write_signal(s, dir / "signal.csv");
    artifacts.insert(artifacts.end(), {dir / "signal.csv", dir / "signal.json"});

    FitConfig fit_cfg;
    fit_cfg.multistart = fc.value("multistart", std::size_t{20});
    fit_cfg.seed = derive_seed(cfg.value("seed", std::uint64_t{0}), 3);
    const FitResult r = stage("fit", [&] { return least_squares_fit(s, family, box, fit_cfg); });
    const Signal fitted = simulate_family(family, r.xi_hat, s.grid, context_from(cfg.at("channel")));
    csv::write(dir / "fit_signal.csv", {"t", "f", "f_fit"}, {s.grid.times(), s.values, fitted.values});
    artifacts.push_back(dir / "fit_signal.csv");

    json rep = {{"family", to_string(family)},
                {"parameters", parameter_names(family)},
                {"xi_hat", r.xi_hat},
                {"final_loss", r.final_loss},
                {"restarts", r.n_restarts_used},
                {"converged", r.converged},
                {"evaluations", r.evaluations}};
    if (truth) rep["xi_true"] = *truth;
    write_json(dir / "fit.json", rep);
    artifacts.push_back(dir / "fit.json");
    write_manifest(dir, "fit", cfg, artifacts,
                   {{"grids", {{"dt", s.grid.dt()}, {"t_f", s.grid.final_time()}, {"n_points", s.grid.size()}}}});
    return rep;
}

// ---------------------------------------------------------------- bench

json run_bench(const json& cfg, const fs::path& dir) {
    const json& bc = cfg.at("bench");
    BenchmarkConfig b = stage("bench", [&] {
        BenchmarkConfig c;
        c.dataset.family = family_from_string(get<std::string>(bc, "family"));
        c.dataset.box = box_from(bc.at("box"));
        c.dataset.n_instances = bc.value("count", std::size_t{2000});
        c.dataset.grid = grid_from(bc.at("grid"));
        c.dataset.context = context_from(cfg.at("channel"));
        c.seed = cfg.value("seed", std::uint64_t{0});
        c.dataset.seed = derive_seed(c.seed, 4);
        c.train_fraction = bc.value("train_fraction", 0.75);
        c.kfold = bc.value("kfold", std::size_t{5});
        c.regressors.clear();
        for (const auto& r : bc.at("regressors")) c.regressors.push_back(regressor_kind_from_string(r.get<std::string>()));
        c.mlp_grid.clear();
        for (const auto& h : bc.at("mlp_grid")) {
            MlpRegressorOptions o;
            o.hidden = h.value("hidden", o.hidden);
            o.activation = activation_from_string(h.value("activation", to_string(o.activation)));
            o.epochs = h.value("epochs", o.epochs);
            o.batch_size = h.value("batch_size", o.batch_size);
            o.learning_rate = h.value("learning_rate", o.learning_rate);
            o.final_learning_rate = h.value("final_learning_rate", o.final_learning_rate);
            o.seed = h.value("seed", c.seed);
            c.mlp_grid.push_back(o);
        }
        c.forest_grid.clear();
        for (const auto& h : bc.at("forest_grid")) {
            ForestOptions o;
            o.n_trees = h.value("n_trees", o.n_trees);
            o.max_depth = h.value("max_depth", o.max_depth);
            o.min_leaf = h.value("min_leaf", o.min_leaf);
            o.max_features = h.value("max_features", o.max_features);
            o.seed = h.value("seed", c.seed);
            c.forest_grid.push_back(o);
        }
        return c;
    });
    const BenchmarkResult res = stage("bench", [&] { return run_benchmark(b); });
    std::vector<fs::path> artifacts = write_benchmark(res, dir);
    json rep = {{"parameters", res.parameter_names}, {"cells", json::array()}};
    for (const auto& c : res.cells) {
        rep["cells"].push_back({{"condition", c.condition},
                                {"regressor", to_string(c.regressor)},
                                {"test", to_json(c.test)},
                                {"cv_mse", c.report.cv_mse},
                                {"best_index", c.report.best_index},
                                {"warnings", c.report.warnings}});
    }
    // Noisy-to-noiseless MSE ratio per regressor and parameter.
    json ratios = json::object();
    for (auto k : b.regressors) {
        const auto& clean = res.cell(b.conditions.front().name, k).test;
        const auto& noisy = res.cell(b.conditions.back().name, k).test;
        std::vector<double> r(clean.mse_per_parameter.size());
        for (std::size_t p = 0; p < r.size(); ++p) r[p] = noisy.mse_per_parameter[p] / clean.mse_per_parameter[p];
        ratios[to_string(k)] = r;
    }
    rep["mse_ratio_noisy_over_noiseless"] = ratios;
    write_json(dir / "bench.json", rep);
    artifacts.push_back(dir / "bench.json");
    write_manifest(dir, "bench", cfg, artifacts,
                   {{"grids", {{"dt", b.dataset.grid.dt()}, {"t_f", b.dataset.grid.final_time()},
                               {"n_points", b.dataset.grid.size()}}}});
    return rep;
}

// ---------------------------------------------------------- sensitivity

json run_sensitivity(const json& cfg, const fs::path& dir) {
    const json& sc = cfg.at("sensitivity");
    const SpectralDensity J = stage("sensitivity", [&] { return sdf_from_json(sc.at("sdf")); });
    const double omega_0 = sc.value("omega_0", 1.0);
    const auto* lor = std::get_if<Lorentzian>(&J);
    const double horizon = lor ? sc.value("t_final_over_lambda", 5.0) / lor->lambda : sc.value("t_final", 10.0);
    const double dt = sc.value("dt", 0.02);
    const numerics::UniformTimeGrid grid(dt, static_cast<std::size_t>(std::llround(horizon / dt)) + 1);
    const double dw = sc.value("d_omega", 0.02);
    const numerics::UniformFrequencyGrid fgrid(dw, static_cast<std::size_t>(std::llround(sc.value("omega_max", 40.0) / dw)) + 1);
    const ADConfig ad{J, omega_0};
    const double ratio = sc.value("ratio", 1e-3);
    const std::size_t n = sc.value("n_perturbations", std::size_t{100});
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});

    const auto kernel = stage("sensitivity", [&] {
        std::vector<std::complex<double>> k(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) k[i] = ad_memory_kernel(ad, grid.time(i));
        return k;
    });
    const double l1 = l1_norm(J);
    std::vector<double> idx, max_ratio, ok, emp_int, int_bound;
    PerturbationReport worst;
    worst.max_ratio = -1.0;
    stage("sensitivity", [&] {
        for (std::size_t p = 0; p < n; ++p) {
            const auto dJ = random_perturbation(J, fgrid, ratio, derive_seed(seed, 100 + p));
            auto r = empirical_verify(kernel, l1, dJ, ad, grid);
            idx.push_back(static_cast<double>(p));
            max_ratio.push_back(r.max_ratio);
            ok.push_back(r.satisfied ? 1.0 : 0.0);
            emp_int.push_back(r.empirical_integral);
            int_bound.push_back(r.integrated_bound);
            if (r.max_ratio > worst.max_ratio) worst = std::move(r);
        }
        return 0;
    });
    const auto bump = stage("sensitivity", [&] {
        return empirical_verify(kernel, l1, resonant_bump(J, fgrid, omega_0, sc.value("bump_half_width", 0.05), ratio),
                                ad, grid);
    });
    std::vector<fs::path> artifacts;
    csv::write(dir / "perturbations.csv", {"index", "max_ratio", "satisfied", "empirical_integral", "integrated_bound"},
               {idx, max_ratio, ok, emp_int, int_bound});
    artifacts.push_back(dir / "perturbations.csv");
    if (n > 0) {
        write_perturbation_csv(worst, dir / "worst_case.csv");
        artifacts.push_back(dir / "worst_case.csv");
    }
    write_perturbation_csv(bump, dir / "resonant_bump.csv");
    artifacts.push_back(dir / "resonant_bump.csv");
    const double n_ok = std::accumulate(ok.begin(), ok.end(), 0.0);
    json rep = {{"J_l1", l1},
                {"ratio", ratio},
                {"n_perturbations", n},
                {"n_satisfied", static_cast<std::size_t>(n_ok)},
                {"all_satisfied", n_ok == static_cast<double>(n)},
                {"worst_ratio", n > 0 ? worst.max_ratio : 0.0},
                {"resonant_bump", to_json(bump)}};
    write_json(dir / "sensitivity.json", rep);
    artifacts.push_back(dir / "sensitivity.json");
    write_manifest(dir, "sensitivity", cfg, artifacts,
                   {{"grids", {{"dt", dt}, {"t_f", grid.time(grid.size() - 1)}, {"d_omega", dw},
                               {"omega_max", fgrid.max_frequency()}}}});
    return rep;
}

// ---------------------------------------------------------------- sweep

json robustness_sweep(const json& cfg, const fs::path& dir) {
    const json& sw = cfg.at("sweep");
    const auto seeds = get<std::vector<std::uint64_t>>(sw, "seeds");
    if (seeds.size() < 2) throw ConfigError("sweep.seeds needs at least two seeds");
    const std::string stages = sw.value("stages", std::string("full"));
    if (stages != "full" && stages != "prior") throw ConfigError("sweep.stages must be 'full' or 'prior'");

    // Variation 0 is the unmodified config; each further one overrides a single key.
    std::vector<std::pair<std::string, json>> variations{{"baseline", json()}};
    for (const auto& v : sw.at("variations")) {
        const std::string key = get<std::string>(v, "key");
        for (const auto& value : v.at("values")) variations.emplace_back(key, value);
    }

    json summary = {{"stages", stages}, {"seeds", seeds}, {"variations", json::array()}};
    std::vector<double> col_var, col_seed, col_p1, col_p2, col_rms;
    std::vector<fs::path> artifacts;
    for (std::size_t vi = 0; vi < variations.size(); ++vi) {
        std::vector<std::vector<double>> locs;
        std::vector<double> residuals;
        double d_nu = 0.0;
        for (auto sd : seeds) {
            json c = cfg;
            if (vi > 0) apply_override(c, variations[vi].first + "=" + variations[vi].second.dump());
            c["seed"] = sd;
            c["noise_seed"] = nullptr;
            const fs::path sub = dir / ("v" + std::to_string(vi) + "_seed" + std::to_string(sd));
            prepare_output_dir(sub, true);
            const auto rep = stages == "full" ? run_pipeline(c, sub).report : run_invert(c, sub);
            d_nu = rep["prior"]["d_nu"].get<double>();
            const json& block = stages == "full" ? rep["nn"] : rep["prior"];
            std::vector<double> l;
            if (block.contains("peak_match")) {
                for (const auto& m : block["peak_match"]) {
                    l.push_back(m["found"].is_number() ? m["found"].get<double>() : std::numeric_limits<double>::quiet_NaN());
                }
            } else {
                for (const auto& p : block["peaks"]) l.push_back(p.get<double>());
                l.resize(2, std::numeric_limits<double>::quiet_NaN());
            }
            const double res = stages == "full" ? block["coherence_rms"].get<double>()
                                                : block["coherence_rms_vs_measured"].get<double>();
            col_var.push_back(static_cast<double>(vi));
            col_seed.push_back(static_cast<double>(sd));
            col_p1.push_back(l.size() > 0 ? l[0] : std::numeric_limits<double>::quiet_NaN());
            col_p2.push_back(l.size() > 1 ? l[1] : std::numeric_limits<double>::quiet_NaN());
            col_rms.push_back(res);
            locs.push_back(std::move(l));
            residuals.push_back(res);
        }
        auto mean_std = [](const std::vector<double>& v) {
            const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - m) * (x - m);
            return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
        };
        json peaks_json = json::array();
        for (std::size_t p = 0; p < locs.front().size(); ++p) {
            std::vector<double> v;
            for (const auto& l : locs) v.push_back(p < l.size() ? l[p] : std::numeric_limits<double>::quiet_NaN());
            const auto [m, sdev] = mean_std(v);
            peaks_json.push_back({{"mean", m}, {"std", sdev}, {"std_bins", sdev / d_nu}});
        }
        const auto [rm, rs] = mean_std(residuals);
        summary["variations"].push_back({{"key", variations[vi].first},
                                         {"value", variations[vi].second},
                                         {"peaks", peaks_json},
                                         {"residual_mean", rm},
                                         {"residual_std", rs},
                                         {"d_nu", d_nu}});
    }
    csv::write(dir / "sweep.csv", {"variation", "seed", "peak_1", "peak_2", "coherence_rms"},
               {col_var, col_seed, col_p1, col_p2, col_rms});
    artifacts.push_back(dir / "sweep.csv");
    write_json(dir / "sweep_summary.json", summary);
    artifacts.push_back(dir / "sweep_summary.json");
    write_manifest(dir, "sweep", cfg, artifacts);
    return summary;
}

} // namespace sdfkit
