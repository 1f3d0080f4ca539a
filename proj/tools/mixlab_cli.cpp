#include <mixlab/runner.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace mixlab;

int main(int argc, char** argv) {
    CLI::App app{"mixlab: mixing experiments on SL2(Z)\\SL2(R)"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    unsigned threads = 0;
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--samples", samples, "override the config sample count")->check(CLI::Range(std::size_t{2}, SIZE_MAX));
    app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));

    std::string config_path, output;
    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("-o,--output", output, "output directory");

    auto* verify_cmd = app.add_subcommand("verify", "run the exact-identity suite");

    std::string results_path, kind, plot_out;
    auto* plot_cmd = app.add_subcommand("plotdata", "emit plot data from a results file");
    plot_cmd->add_option("results", results_path, "results file")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("kind", kind, "decay | et | density | scheduler")->required();
    plot_cmd->add_option("-o,--output", plot_out, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    if (threads > 0) set_default_threads(threads);

    if (*run_cmd) {
        RunOverrides ov;
        ov.seed = seed;
        ov.samples = samples;
        if (!output.empty()) ov.output = output;
        return run(config_path, ov);
    }

    if (*verify_cmd) {
        ExperimentConfig cfg;
        cfg.experiment = Experiment::kernels;
        cfg.seed = seed.value_or(1);
        cfg.samples = samples.value_or(100000);
        const RunResult res = run_experiment(cfg);
        std::cout << res.files.at("results.csv");
        std::cerr << (res.all_passed ? "all checks passed\n" : "some checks FAILED\n");
        return res.all_passed ? kExitOk : kExitFailed;
    }

    if (*plot_cmd) {
        try {
            std::ifstream in(results_path, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            std::vector<std::string> warnings;
            const std::string data = emit_plot_data(buf.str(), kind, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            if (plot_out.empty()) {
                std::cout << data;
            } else {
                std::ofstream(plot_out, std::ios::binary) << data;
            }
            return kExitOk;
        } catch (const InvalidInput& e) {
            std::cerr << "validation error: " << e.what() << '\n';
            return kExitValidation;
        }
    }
    return kExitValidation;
}
