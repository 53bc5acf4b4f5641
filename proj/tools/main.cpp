#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specpredict/experiment.hpp"

namespace {

using namespace specpredict;

int run_command(const std::string& config_path, const std::string& out_dir,
                int seeds_override, const std::vector<std::string>& dump_args,
                const std::string& score_window, bool quiet) {
    experiment::ExperimentConfig config;
    experiment::OutputOptions output;
    output.out_dir = out_dir;

    try {
        config = experiment::parse_config_file(config_path);
        if (seeds_override > 0) {
            config.replications = seeds_override;
        }
        if (!score_window.empty()) {
            if (score_window == "full") {
                config.score_window = experiment::ScoreWindowMode::full;
            } else if (score_window == "post-sei") {
                config.score_window = experiment::ScoreWindowMode::post_sei;
            } else {
                std::fprintf(stderr, "error: --score-window must be full or post-sei\n");
                return 2;
            }
        }
        if (!dump_args.empty()) {
            experiment::PosteriorDumpSpec dump;
            try {
                dump.subband = std::stoi(dump_args.at(0));
            } catch (const std::exception&) {
                std::fprintf(stderr,
                             "error: --dump-posterior subband must be an integer\n");
                return 2;
            }
            const auto& kind = dump_args.at(1);
            if (kind == "busy") {
                dump.kind = predictor::IntervalKind::busy;
            } else if (kind == "idle") {
                dump.kind = predictor::IntervalKind::idle;
            } else {
                std::fprintf(stderr,
                             "error: --dump-posterior kind must be busy or idle\n");
                return 2;
            }
            output.dump_posterior = dump;
        }
        config.validate();
    } catch (const std::exception& err) {
        std::fprintf(stderr, "%s\n", err.what());
        return 2;
    }

    try {
        const auto result = experiment::run_experiment(config, output);
        if (!quiet) {
            std::printf("%-16s %10s %10s %10s %10s\n", "variant", "C", "D", "rho",
                        "rho_std");
            for (const auto& agg : result.aggregates) {
                std::printf("%-16s %10.4f %10.4f %10.4f %10.4f\n", agg.label.c_str(),
                            agg.mean_collision_rate, agg.mean_missed_rate,
                            agg.mean_weighted_error, agg.std_weighted_error);
            }
            if (!out_dir.empty()) {
                std::printf("outputs written to %s\n", out_dir.c_str());
            }
        }
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Changepoint-aware spectrum prediction experiment runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    std::string config_path;
    std::string out_dir = "out";
    int seeds = 0;
    std::vector<std::string> dump_args;
    std::string score_window;
    bool quiet = false;

    run->add_option("config", config_path, "Path to the experiment config (JSON)")
        ->required();
    run->add_option("--out-dir", out_dir, "Directory for CSV outputs")
        ->capture_default_str();
    run->add_option("--seeds", seeds, "Override the number of replications")
        ->check(CLI::PositiveNumber);
    run->add_option("--dump-posterior", dump_args,
                    "Stream the run-length posterior of one detector: <subband> <busy|idle>")
        ->expected(2);
    run->add_option("--score-window", score_window,
                    "Scoring window: full or post-sei");
    run->add_flag("--quiet", quiet, "Suppress the summary table");

    CLI11_PARSE(app, argc, argv);

    return run_command(config_path, out_dir, seeds, dump_args, score_window, quiet);
}
