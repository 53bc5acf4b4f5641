#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

#include "specpredict/experiment.hpp"

using namespace specpredict;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream stream(path, std::ios::binary);
    REQUIRE(stream.good());
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("specpredict_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string small_config_text(double h, std::int64_t pulses, int replications) {
    std::ostringstream out;
    out << R"({
  "environment": {
    "subbands": 1,
    "busy": {"mean": 40.0, "std": 2.0},
    "idle": {"mean": 40.0, "std": 2.0},
    "changepoint_probability": )"
        << h << R"(,
    "magnitude": {"mean": 30.0, "std": 5.0},
    "pulses": )" << pulses
        << R"(
  },
  "sei": 600,
  "latency": 5,
  "alpha": 0.5,
  "replications": )"
        << replications << R"(,
  "base_seed": 3,
  "score_window": "post_sei",
  "variants": [
    {"name": "original"},
    {"name": "cp_lognormal", "bocd": {"max_run_length": 30, "sensitivity": 60.0}},
    {"name": "cp_empirical", "bocd": {"max_run_length": 30, "sensitivity": 60.0}}
  ]
})";
    return out.str();
}

int run_cli(const std::string& args, const fs::path& stdout_path,
            const fs::path& stderr_path) {
    const std::string command = std::string(SPECPREDICT_CLI_PATH) + " " + args + " >" +
                                stdout_path.string() + " 2>" + stderr_path.string();
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing fills every field") {
    const auto config = experiment::parse_config_text(small_config_text(0.02, 20000, 4));
    CHECK(config.environment.subbands.size() == 1);
    CHECK(config.environment.subbands[0].busy.mean == 40.0);
    CHECK(config.environment.subbands[0].idle.stddev == 2.0);
    CHECK(config.environment.changepoint_probability == 0.02);
    CHECK(config.environment.magnitude.mean == 30.0);
    CHECK(config.environment.pulses == 20000);
    CHECK(config.sei == 600);
    CHECK(config.replications == 4);
    CHECK(config.base_seed == 3);
    CHECK(config.score_window == experiment::ScoreWindowMode::post_sei);
    REQUIRE(config.variants.size() == 3);
    CHECK(config.variants[0].predictor.variant == predictor::Variant::original);
    CHECK(config.variants[0].predictor.sei == 600);
    CHECK(config.variants[0].predictor.latency == 5);
    CHECK(config.variants[1].predictor.bocd.max_run_length == 30);
    CHECK(config.variants[1].predictor.bocd.sensitivity == 60.0);
    CHECK(config.variants[2].label == "cp_empirical");
    CHECK(config.scoring_window() == metrics::ScoringWindow{600, 20000});
}

TEST_CASE("config serialization round trips semantically") {
    const auto config = experiment::parse_config_text(small_config_text(0.01, 8000, 2));
    const auto round_tripped =
        experiment::parse_config_text(experiment::config_to_json(config));
    CHECK(round_tripped == config);
}

TEST_CASE("changepoint cadence parses and round trips") {
    auto text = small_config_text(0.02, 20000, 2);
    const auto defaulted = experiment::parse_config_text(text);
    CHECK(defaulted.environment.cadence == sim::ChangepointCadence::per_pulse);

    const auto pos = text.find("\"changepoint_probability\"");
    REQUIRE(pos != std::string::npos);
    text.insert(pos, "\"changepoint_cadence\": \"per_interval\",\n    ");
    const auto config = experiment::parse_config_text(text);
    CHECK(config.environment.cadence == sim::ChangepointCadence::per_interval);
    const auto round_tripped =
        experiment::parse_config_text(experiment::config_to_json(config));
    CHECK(round_tripped == config);

    auto bad = text;
    const auto cadence_pos = bad.find("per_interval");
    bad.replace(cadence_pos, std::string("per_interval").size(), "hourly");
    try {
        experiment::parse_config_text(bad);
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& err) {
        CHECK(std::string(err.what()).find("changepoint_cadence") != std::string::npos);
    }
}

TEST_CASE("config validation diagnostics name the offending field") {
    auto broken = small_config_text(0.02, 20000, 4);
    const auto pos = broken.find("\"alpha\": 0.5");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 12, "\"alpha\": 1.5");
    try {
        experiment::parse_config_text(broken);
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& err) {
        CHECK(std::string(err.what()).find("alpha") != std::string::npos);
    }

    CHECK_THROWS_AS(experiment::parse_config_text("{ not json"), std::invalid_argument);
    CHECK_THROWS_AS(experiment::parse_config_text("{}"), std::invalid_argument);

    // h outside [0, 1)
    CHECK_THROWS_AS(experiment::parse_config_text(small_config_text(1.2, 20000, 4)),
                    std::invalid_argument);
    // empty scoring window: sei >= pulses
    CHECK_THROWS_AS(experiment::parse_config_text(small_config_text(0.0, 500, 4)),
                    std::invalid_argument);

    // duplicate variant labels would collide in the output files
    auto duplicated = small_config_text(0.0, 20000, 4);
    const auto variant_pos = duplicated.find("{\"name\": \"original\"},");
    REQUIRE(variant_pos != std::string::npos);
    duplicated.insert(variant_pos, "{\"name\": \"original\"},\n    ");
    try {
        experiment::parse_config_text(duplicated);
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& err) {
        CHECK(std::string(err.what()).find("duplicate") != std::string::npos);
    }
}

TEST_CASE("multi-sub-band experiments score every band") {
    auto config = experiment::parse_config_text(small_config_text(0.0, 4000, 1));
    config.environment.subbands.assign(3, config.environment.subbands.front());
    const auto dir = fresh_dir("multiband");
    experiment::OutputOptions out;
    out.out_dir = dir.string();
    const auto result = experiment::run_experiment(config, out);
    REQUIRE(result.runs.size() == 3);
    for (const auto& run : result.runs) {
        // every pulse in the window is scored once per band
        CHECK(run.report.counts.busy_scored + run.report.counts.idle_scored ==
              3 * (4000 - 600));
    }
    // truth trace covers all three bands
    const auto text = read_file(dir / "truth.csv");
    std::size_t lines = 0;
    for (char c : text) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 1 + 3 * 4000);
    fs::remove_all(dir);
}

TEST_CASE("experiment runs are deterministic and CSVs byte-identical") {
    const auto config = experiment::parse_config_text(small_config_text(0.0, 3000, 1));
    const auto dir_a = fresh_dir("det_a");
    const auto dir_b = fresh_dir("det_b");
    experiment::OutputOptions out_a;
    out_a.out_dir = dir_a.string();
    experiment::OutputOptions out_b;
    out_b.out_dir = dir_b.string();
    const auto result_a = experiment::run_experiment(config, out_a);
    const auto result_b = experiment::run_experiment(config, out_b);
    REQUIRE(result_a.runs.size() == 3);
    for (const auto name :
         {"metrics.csv", "truth.csv", "changepoints.csv", "decisions_original.csv",
          "decisions_cp_lognormal.csv", "decisions_cp_empirical.csv"}) {
        CAPTURE(name);
        CHECK(read_file(dir_a / name) == read_file(dir_b / name));
    }
    for (std::size_t i = 0; i < result_a.runs.size(); ++i) {
        CHECK(result_a.runs[i].report.weighted_error ==
              result_b.runs[i].report.weighted_error);
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("metrics csv lists every run plus aggregate rows") {
    const auto config = experiment::parse_config_text(small_config_text(0.0, 3000, 2));
    const auto dir = fresh_dir("metrics_rows");
    experiment::OutputOptions out;
    out.out_dir = dir.string();
    experiment::run_experiment(config, out);
    const auto text = read_file(dir / "metrics.csv");
    std::size_t lines = 0;
    for (char c : text) {
        lines += c == '\n' ? 1 : 0;
    }
    // header + 3 variants x 2 seeds + 3 x (mean, std)
    CHECK(lines == 1 + 6 + 6);
    CHECK(text.find("cp_lognormal,mean") != std::string::npos);
    CHECK(text.find("original,std") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("posterior dump records detector updates for the chosen band") {
    // strong, well separated mean shifts so each one forces a reset
    std::string text = small_config_text(0.0002, 60000, 1);
    auto pos = text.find("\"magnitude\": {\"mean\": 30.0, \"std\": 5.0}");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"magnitude\": {\"mean\": 30.0, \"std\": 5.0}").size(),
                 "\"magnitude\": {\"mean\": 100.0, \"std\": 0.0}");
    pos = text.find("\"busy\": {\"mean\": 40.0, \"std\": 2.0}");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"busy\": {\"mean\": 40.0, \"std\": 2.0}").size(),
                 "\"busy\": {\"mean\": 20.0, \"std\": 1.0}");
    pos = text.find("\"idle\": {\"mean\": 40.0, \"std\": 2.0}");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"idle\": {\"mean\": 40.0, \"std\": 2.0}").size(),
                 "\"idle\": {\"mean\": 20.0, \"std\": 1.0}");

    const auto config = experiment::parse_config_text(text);
    const auto dir = fresh_dir("dump");
    experiment::OutputOptions out;
    out.out_dir = dir.string();
    out.dump_posterior = experiment::PosteriorDumpSpec{0, predictor::IntervalKind::busy};
    const auto result = experiment::run_experiment(config, out);
    (void)result;

    std::ifstream dump(dir / "posterior.csv");
    REQUIRE(dump.good());
    std::string line;
    REQUIRE(std::getline(dump, line));
    CHECK(line.rfind("index,x,map_run_length,hazard,p0,p1,", 0) == 0);
    int resets = 0;
    int prev_map = 0;
    int max_map = 0;
    int rows = 0;
    while (std::getline(dump, line)) {
        ++rows;
        std::stringstream fields(line);
        std::string field;
        std::getline(fields, field, ',');  // index
        std::getline(fields, field, ',');  // x
        std::getline(fields, field, ',');  // map
        const int map = std::stoi(field);
        max_map = std::max(max_map, map);
        if (map <= 2 && prev_map > 2) {
            ++resets;
        }
        prev_map = map;
    }
    CHECK(rows >= 100);
    CHECK(max_map == 30);  // long stationary stretches pool at the cap
    CHECK(resets >= 3);    // the injected mean shifts force MAP resets
    fs::remove_all(dir);
}

TEST_CASE("posterior dump on a run with no completed intervals is header-only") {
    auto text = small_config_text(0.0, 2000, 1);
    const auto pos = text.find("\"pulses\": 2000");
    REQUIRE(pos != std::string::npos);
    // shorter than any interval: nothing completes, nothing is dumped
    auto config = experiment::parse_config_text(text);
    config.environment.pulses = 10;
    config.sei = 5;
    config.environment.subbands[0].busy = {40.0, 0.0};
    config.environment.subbands[0].idle = {40.0, 0.0};
    const auto dir = fresh_dir("dump_empty");
    experiment::OutputOptions out;
    out.out_dir = dir.string();
    out.dump_posterior = experiment::PosteriorDumpSpec{0, predictor::IntervalKind::busy};
    experiment::run_experiment(config, out);
    const auto text_out = read_file(dir / "posterior.csv");
    std::size_t lines = 0;
    for (char c : text_out) {
        lines += c == '\n' ? 1 : 0;
    }
    CHECK(lines == 1);
    fs::remove_all(dir);
}

TEST_CASE("zero-latency runs score decisions against the same pulse") {
    auto config = experiment::parse_config_text(small_config_text(0.0, 4000, 1));
    for (auto& variant : config.variants) {
        variant.predictor.latency = 0;
    }
    config.score_window = experiment::ScoreWindowMode::full;
    const auto result = experiment::run_experiment(config, {});
    for (const auto& run : result.runs) {
        CHECK(run.report.counts.busy_scored + run.report.counts.idle_scored == 4000);
        // with zero lead time the state cannot change before the target, so
        // a ready model collides only by prediction error, never by lag
        CHECK(run.report.weighted_error <= 0.5);
    }
}

TEST_CASE("cli runs a config end to end") {
    const auto dir = fresh_dir("cli");
    const auto config_path = dir / "config.json";
    std::ofstream(config_path) << small_config_text(0.0, 3000, 1);
    const int code = run_cli("run " + config_path.string() + " --out-dir " +
                                 (dir / "out").string(),
                             dir / "stdout.txt", dir / "stderr.txt");
    CHECK(code == 0);
    CHECK(fs::exists(dir / "out" / "metrics.csv"));
    CHECK(fs::exists(dir / "out" / "truth.csv"));
    CHECK(fs::exists(dir / "out" / "decisions_cp_lognormal.csv"));
    const auto stdout_text = read_file(dir / "stdout.txt");
    CHECK(stdout_text.find("original") != std::string::npos);
    CHECK(stdout_text.find("rho") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli rejects invalid configs with a diagnostic naming the field") {
    const auto dir = fresh_dir("cli_bad");
    const auto config_path = dir / "bad.json";
    auto text = small_config_text(0.0, 3000, 1);
    const auto pos = text.find("\"alpha\": 0.5");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"alpha\": 1.5");
    std::ofstream(config_path) << text;
    const int code = run_cli("run " + config_path.string() + " --out-dir " +
                                 (dir / "out").string(),
                             dir / "stdout.txt", dir / "stderr.txt");
    CHECK(code != 0);
    CHECK(read_file(dir / "stderr.txt").find("alpha") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli reports unwritable output paths with a nonzero exit") {
    const auto dir = fresh_dir("cli_unwritable");
    const auto config_path = dir / "config.json";
    std::ofstream(config_path) << small_config_text(0.0, 3000, 1);
    // procfs rejects directory creation
    const int code = run_cli("run " + config_path.string() +
                                 " --out-dir /proc/specpredict_nope",
                             dir / "stdout.txt", dir / "stderr.txt");
    CHECK(code != 0);
    CHECK(!read_file(dir / "stderr.txt").empty());
    fs::remove_all(dir);
}

TEST_CASE("cli seed and window overrides are applied") {
    const auto dir = fresh_dir("cli_overrides");
    const auto config_path = dir / "config.json";
    std::ofstream(config_path) << small_config_text(0.0, 3000, 3);
    const int code = run_cli("run " + config_path.string() + " --out-dir " +
                                 (dir / "out").string() +
                                 " --seeds 1 --score-window full --quiet",
                             dir / "stdout.txt", dir / "stderr.txt");
    CHECK(code == 0);
    CHECK(read_file(dir / "stdout.txt").empty());
    const auto metrics_text = read_file(dir / "out" / "metrics.csv");
    // window override: scoring starts at pulse 0
    CHECK(metrics_text.find(",0,3000") != std::string::npos);
    std::size_t lines = 0;
    for (char c : metrics_text) {
        lines += c == '\n' ? 1 : 0;
    }
    // header + 3 variants x 1 seed + 3 x (mean, std)
    CHECK(lines == 1 + 3 + 6);
    fs::remove_all(dir);
}
