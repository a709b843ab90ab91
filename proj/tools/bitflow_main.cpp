// Experiment harness entry point.
//
//   bitflow <verify|train|sweep-eps|sweep-width|gradcheck> --config <path>
//           [--out <dir>] [--workers N]
//
// Exit codes: 0 success, 1 assertion failure, 2 config error,
// 3 numerical fatality.

#include "bitflow/config.hpp"
#include "bitflow/errors.hpp"
#include "bitflow/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Smoothed quantized-network dynamics and lemma verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int workers = 1;

    const std::vector<std::pair<std::string, bitflow::ExperimentKind>> kinds = {
        {"verify", bitflow::ExperimentKind::Verify},
        {"train", bitflow::ExperimentKind::Train},
        {"sweep-eps", bitflow::ExperimentKind::SweepEps},
        {"sweep-width", bitflow::ExperimentKind::SweepWidth},
        {"gradcheck", bitflow::ExperimentKind::GradCheck},
    };
    for (const auto& [name, kind] : kinds) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config file path")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker threads for sweep cells");
        sub->parse_complete_callback([&, kind_copy = kind]() {
            bitflow::ExperimentConfig cfg = bitflow::load_config(config_path);
            cfg.kind = kind_copy;
            cfg.validate();
            const int code = bitflow::run_experiment(cfg, out_dir, workers);
            std::exit(code);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const bitflow::ConfigError& e) {
        std::cerr << "config error";
        if (e.line > 0) std::cerr << " (line " << e.line << ", col " << e.column << ")";
        std::cerr << ": " << e.what() << "\n";
        return 2;
    } catch (const bitflow::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
