// sdfkit — command-line driver for simulation, inversion, refinement and benchmarks
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 failed checks in `pipeline --check`.

#include "sdfkit/errors.hpp"
#include "sdfkit/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    bool overwrite{false};
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON run config (a manifest.json is accepted too)");
    sub->add_option("--set", c.sets, "Override a config value, e.g. --set grid.n_points=3200")->take_all();
    sub->add_option("--out", c.out, "Output directory (default: $SDFKIT_OUTPUT_ROOT/<command>)");
    sub->add_flag("--overwrite", c.overwrite, "Replace a nonempty output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral density reconstruction from open-system dynamics"};
    app.require_subcommand(1);
    Common common;
    bool check = false;
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print the resolved config and exit");

    const std::vector<std::pair<const char*, const char*>> commands{
        {"simulate", "Forward-simulate a coherence or population signal"},
        {"invert", "Cosine-transform spectral prior from a PD signal"},
        {"refine", "Prior plus neural-network refinement (phases A and B)"},
        {"fit", "Multistart least-squares fit of a parametric family"},
        {"bench", "Regressor benchmark on noiseless and noisy datasets"},
        {"sensitivity", "Check the perturbation bounds against the Volterra solver"},
        {"pipeline", "Full protocol: simulate, precondition, prior, refine, diagnose"},
        {"sweep", "Repeat the protocol over seeds and config variations"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, common);
        if (std::string(name) == "pipeline") sub->add_flag("--check", check, "Exit with 4 when a report check fails");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        nlohmann::json cfg = common.config.empty() ? sdfkit::resolve_run_config(nlohmann::json::object())
                                                   : sdfkit::load_run_config(common.config);
        for (const auto& s : common.sets) sdfkit::apply_override(cfg, s);
        if (print_config) {
            std::cout << cfg.dump(2) << '\n';
            return 0;
        }
        const std::filesystem::path dir =
            common.out.empty() ? sdfkit::default_output_root() / command : std::filesystem::path(common.out);
        sdfkit::prepare_output_dir(dir, common.overwrite);

        nlohmann::json summary;
        int code = 0;
        if (command == "simulate") {
            summary = sdfkit::run_simulate(cfg, dir);
        } else if (command == "invert") {
            summary = sdfkit::run_invert(cfg, dir);
        } else if (command == "refine") {
            summary = sdfkit::run_refine(cfg, dir);
        } else if (command == "fit") {
            summary = sdfkit::run_fit(cfg, dir);
        } else if (command == "bench") {
            summary = sdfkit::run_bench(cfg, dir);
        } else if (command == "sensitivity") {
            summary = sdfkit::run_sensitivity(cfg, dir);
        } else if (command == "pipeline") {
            const auto outcome = sdfkit::run_pipeline(cfg, dir);
            summary = outcome.report;
            if (check && !outcome.check_passed) {
                std::cerr << "checks failed:";
                for (const auto& f : outcome.failed_checks) std::cerr << ' ' << f;
                std::cerr << '\n';
                code = 4;
            }
        } else {
            summary = sdfkit::robustness_sweep(cfg, dir);
        }
        std::cout << summary.dump(2) << '\n' << "artifacts: " << dir.string() << '\n';
        return code;
    } catch (const sdfkit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sdfkit::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sdfkit::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const sdfkit::DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
}
