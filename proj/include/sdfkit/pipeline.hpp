// pipeline.hpp — Run configuration, stage orchestration, manifests and robustness sweeps

#pragma once

#include "sdfkit/dct_prior.hpp"
#include "sdfkit/nn_refine.hpp"
#include "sdfkit/signal.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdfkit {

// Every key a run config may carry, filled with defaults. The default describes the
// structured SiV spectral density seen through the pure-dephasing channel.
nlohmann::json default_run_config();

// Merges `user` into the defaults; unknown top-level keys are a ConfigError.
nlohmann::json resolve_run_config(const nlohmann::json& user);
nlohmann::json load_run_config(const std::filesystem::path& path);

// "a.b.c=value"; value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

// Output root: $SDFKIT_OUTPUT_ROOT when set, else "sdfkit-runs".
std::filesystem::path default_output_root();

// Creates dir; an existing nonempty directory is a ConfigError unless overwrite is set.
void prepare_output_dir(const std::filesystem::path& dir, bool overwrite);

// manifest.json: command, resolved config, seeds, recorded grids and SHA-256 of each artifact.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& cfg,
                    const std::vector<std::filesystem::path>& artifacts, const nlohmann::json& extra = {});

// Signal described by cfg.channel / cfg.grid / cfg.noise, or read from cfg.input_signal.
struct SignalBundle {
    Signal measured;
    std::optional<Signal> clean; // available for simulated signals
};
SignalBundle make_signal(const nlohmann::json& cfg);

InversionOptions inversion_options(const nlohmann::json& cfg, const Signal& s);

struct PipelineOutcome {
    nlohmann::json report;
    bool check_passed{true};
    std::vector<std::string> failed_checks;
};

// Each subcommand writes its artifacts and manifest into dir and returns a summary.
nlohmann::json run_simulate(const nlohmann::json& cfg, const std::filesystem::path& dir);
nlohmann::json run_invert(const nlohmann::json& cfg, const std::filesystem::path& dir);
nlohmann::json run_refine(const nlohmann::json& cfg, const std::filesystem::path& dir);
nlohmann::json run_fit(const nlohmann::json& cfg, const std::filesystem::path& dir);
nlohmann::json run_bench(const nlohmann::json& cfg, const std::filesystem::path& dir);
nlohmann::json run_sensitivity(const nlohmann::json& cfg, const std::filesystem::path& dir);

// simulate -> precondition -> prior -> refine -> diagnose. A failing stage is reported
// by name; artifacts of earlier stages stay on disk.
PipelineOutcome run_pipeline(const nlohmann::json& cfg, const std::filesystem::path& dir);

// Repeats the pipeline for cfg.sweep.seeds (at least two) and each variation in
// cfg.sweep.variations, then summarises peak-location spread and residuals.
nlohmann::json robustness_sweep(const nlohmann::json& cfg, const std::filesystem::path& dir);

} // namespace sdfkit
