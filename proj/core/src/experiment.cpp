#include "specpredict/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace specpredict::experiment {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw std::invalid_argument("config error: " + field + " " + what);
}

double require_number(const json& node, const std::string& field) {
    if (!node.is_number()) {
        config_error(field, "must be a number");
    }
    return node.get<double>();
}

std::int64_t require_integer(const json& node, const std::string& field) {
    if (!node.is_number_integer()) {
        config_error(field, "must be an integer");
    }
    return node.get<std::int64_t>();
}

sim::NormalSpec parse_normal(const json& node, const std::string& field) {
    if (!node.is_object()) {
        config_error(field, "must be an object with mean and std");
    }
    sim::NormalSpec spec;
    if (!node.contains("mean")) {
        config_error(field + ".mean", "is required");
    }
    spec.mean = require_number(node.at("mean"), field + ".mean");
    if (node.contains("std")) {
        spec.stddev = require_number(node.at("std"), field + ".std");
    }
    return spec;
}

json normal_to_json(const sim::NormalSpec& spec) {
    return json{{"mean", spec.mean}, {"std", spec.stddev}};
}

predictor::Variant parse_variant_name(const std::string& name, const std::string& field) {
    if (name == "original") {
        return predictor::Variant::original;
    }
    if (name == "cp_lognormal") {
        return predictor::Variant::cp_lognormal;
    }
    if (name == "cp_empirical") {
        return predictor::Variant::cp_empirical;
    }
    config_error(field, "must be one of original, cp_lognormal, cp_empirical");
}

std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return {buffer, result.ptr};
}

class CsvWriter {
public:
    CsvWriter() = default;
    CsvWriter(const std::filesystem::path& path, const std::string& header) {
        stream_.open(path);
        if (!stream_) {
            throw std::runtime_error("cannot open output file: " + path.string());
        }
        stream_ << header << '\n';
    }

    bool enabled() const { return stream_.is_open(); }

    template <class... Fields>
    void row(const Fields&... fields) {
        if (!stream_.is_open()) {
            return;
        }
        bool first = true;
        ((stream_ << (first ? "" : ",") << field(fields), first = false), ...);
        stream_ << '\n';
    }

private:
    static std::string field(double value) { return format_double(value); }
    static std::string field(int value) { return std::to_string(value); }
    static std::string field(std::int64_t value) { return std::to_string(value); }
    static std::string field(std::uint64_t value) { return std::to_string(value); }
    static std::string field(const std::string& value) { return value; }

    std::ofstream stream_;
};

}  // namespace

metrics::ScoringWindow ExperimentConfig::scoring_window() const {
    const std::int64_t begin = score_window == ScoreWindowMode::post_sei ? sei : 0;
    return {begin, environment.pulses};
}

void ExperimentConfig::validate() const {
    environment.validate();
    if (variants.empty()) {
        config_error("variants", "must list at least one predictor variant");
    }
    std::map<std::string, int> seen;
    for (const auto& variant : variants) {
        if (++seen[variant.label] > 1) {
            config_error("variants", "contains duplicate label '" + variant.label + "'");
        }
        variant.predictor.validate();
    }
    if (replications < 1) {
        config_error("replications", "must be >= 1");
    }
    if (sei < 1) {
        config_error("sei", "must be >= 1");
    }
    const auto window = scoring_window();
    if (window.begin >= window.end) {
        config_error("sei", "leaves an empty scoring window (sei >= pulses)");
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw std::invalid_argument(std::string("config error: invalid JSON: ") +
                                    err.what());
    }
    if (!root.is_object()) {
        config_error("(root)", "must be a JSON object");
    }

    ExperimentConfig config;

    if (!root.contains("environment")) {
        config_error("environment", "is required");
    }
    const auto& env = root.at("environment");
    int subbands = 1;
    if (env.contains("subbands")) {
        subbands = static_cast<int>(require_integer(env.at("subbands"),
                                                    "environment.subbands"));
        if (subbands < 1) {
            config_error("environment.subbands", "must be >= 1");
        }
    }
    if (!env.contains("busy") || !env.contains("idle")) {
        config_error("environment.busy/idle", "distributions are required");
    }
    const sim::SubBandSpec band{parse_normal(env.at("busy"), "environment.busy"),
                                parse_normal(env.at("idle"), "environment.idle")};
    config.environment.subbands.assign(static_cast<std::size_t>(subbands), band);
    // config defaults mirror the first shipped study
    config.environment.changepoint_probability = 0.03;
    if (env.contains("changepoint_probability")) {
        config.environment.changepoint_probability = require_number(
            env.at("changepoint_probability"), "environment.changepoint_probability");
    }
    if (env.contains("changepoint_cadence")) {
        const auto cadence = env.at("changepoint_cadence").get<std::string>();
        if (cadence == "per_pulse") {
            config.environment.cadence = sim::ChangepointCadence::per_pulse;
        } else if (cadence == "per_interval") {
            config.environment.cadence = sim::ChangepointCadence::per_interval;
        } else {
            config_error("environment.changepoint_cadence",
                         "must be per_pulse or per_interval");
        }
    }
    if (env.contains("magnitude")) {
        config.environment.magnitude =
            parse_normal(env.at("magnitude"), "environment.magnitude");
    }
    if (env.contains("pulses")) {
        config.environment.pulses =
            require_integer(env.at("pulses"), "environment.pulses");
    }

    if (root.contains("sei")) {
        config.sei = require_integer(root.at("sei"), "sei");
    }
    if (root.contains("replications")) {
        config.replications =
            static_cast<int>(require_integer(root.at("replications"), "replications"));
    }
    if (root.contains("base_seed")) {
        config.base_seed =
            static_cast<std::uint64_t>(require_integer(root.at("base_seed"), "base_seed"));
    }
    if (root.contains("score_window")) {
        const auto mode = root.at("score_window").get<std::string>();
        if (mode == "post_sei") {
            config.score_window = ScoreWindowMode::post_sei;
        } else if (mode == "full") {
            config.score_window = ScoreWindowMode::full;
        } else {
            config_error("score_window", "must be post_sei or full");
        }
    }

    const double default_alpha =
        root.contains("alpha") ? require_number(root.at("alpha"), "alpha") : 0.5;
    const int default_latency =
        root.contains("latency")
            ? static_cast<int>(require_integer(root.at("latency"), "latency"))
            : 5;

    if (!root.contains("variants") || !root.at("variants").is_array() ||
        root.at("variants").empty()) {
        config_error("variants", "must be a non-empty array");
    }
    int index = 0;
    for (const auto& node : root.at("variants")) {
        const std::string field = "variants[" + std::to_string(index++) + "]";
        if (!node.is_object() || !node.contains("name")) {
            config_error(field + ".name", "is required");
        }
        VariantConfig variant;
        variant.predictor.variant =
            parse_variant_name(node.at("name").get<std::string>(), field + ".name");
        variant.label = node.contains("label") ? node.at("label").get<std::string>()
                                               : node.at("name").get<std::string>();
        variant.predictor.alpha =
            node.contains("alpha") ? require_number(node.at("alpha"), field + ".alpha")
                                   : default_alpha;
        variant.predictor.latency =
            node.contains("latency") ? static_cast<int>(require_integer(
                                           node.at("latency"), field + ".latency"))
                                     : default_latency;
        variant.predictor.sei =
            node.contains("sei") ? require_integer(node.at("sei"), field + ".sei")
                                 : config.sei;
        if (node.contains("theta_busy")) {
            variant.predictor.theta_busy =
                require_number(node.at("theta_busy"), field + ".theta_busy");
        }
        if (node.contains("theta_idle")) {
            variant.predictor.theta_idle =
                require_number(node.at("theta_idle"), field + ".theta_idle");
        }
        if (node.contains("bocd")) {
            const auto& bocd = node.at("bocd");
            auto& cfg = variant.predictor.bocd;
            if (bocd.contains("max_run_length")) {
                cfg.max_run_length = static_cast<int>(require_integer(
                    bocd.at("max_run_length"), field + ".bocd.max_run_length"));
            }
            if (bocd.contains("sensitivity")) {
                cfg.sensitivity =
                    require_number(bocd.at("sensitivity"), field + ".bocd.sensitivity");
            }
            if (bocd.contains("run_length_prune_threshold")) {
                cfg.run_length_prune_threshold =
                    require_number(bocd.at("run_length_prune_threshold"),
                                   field + ".bocd.run_length_prune_threshold");
            }
            if (bocd.contains("changepoint_count_prune_threshold")) {
                cfg.changepoint_count_prune_threshold =
                    require_number(bocd.at("changepoint_count_prune_threshold"),
                                   field + ".bocd.changepoint_count_prune_threshold");
            }
            if (bocd.contains("variance_floor")) {
                cfg.variance_floor = require_number(bocd.at("variance_floor"),
                                                    field + ".bocd.variance_floor");
            }
        }
        config.variants.push_back(std::move(variant));
    }

    try {
        config.validate();
    } catch (const std::invalid_argument&) {
        throw;
    }
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) {
        throw std::runtime_error("cannot read config file: " + path);
    }
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return parse_config_text(buffer.str());
}

std::string config_to_json(const ExperimentConfig& config) {
    json root;
    const auto& band = config.environment.subbands.front();
    root["environment"] = {
        {"subbands", static_cast<int>(config.environment.subbands.size())},
        {"busy", normal_to_json(band.busy)},
        {"idle", normal_to_json(band.idle)},
        {"changepoint_probability", config.environment.changepoint_probability},
        {"changepoint_cadence",
         config.environment.cadence == sim::ChangepointCadence::per_pulse
             ? "per_pulse"
             : "per_interval"},
        {"magnitude", normal_to_json(config.environment.magnitude)},
        {"pulses", config.environment.pulses},
    };
    root["sei"] = config.sei;
    root["replications"] = config.replications;
    root["base_seed"] = config.base_seed;
    root["score_window"] =
        config.score_window == ScoreWindowMode::post_sei ? "post_sei" : "full";
    root["variants"] = json::array();
    for (const auto& variant : config.variants) {
        json node;
        node["name"] = predictor::variant_name(variant.predictor.variant);
        node["label"] = variant.label;
        node["alpha"] = variant.predictor.alpha;
        node["latency"] = variant.predictor.latency;
        node["sei"] = variant.predictor.sei;
        if (variant.predictor.theta_busy) {
            node["theta_busy"] = *variant.predictor.theta_busy;
        }
        if (variant.predictor.theta_idle) {
            node["theta_idle"] = *variant.predictor.theta_idle;
        }
        if (variant.predictor.variant != predictor::Variant::original) {
            const auto& cfg = variant.predictor.bocd;
            node["bocd"] = {
                {"max_run_length", cfg.max_run_length},
                {"sensitivity", cfg.sensitivity},
                {"run_length_prune_threshold", cfg.run_length_prune_threshold},
                {"changepoint_count_prune_threshold",
                 cfg.changepoint_count_prune_threshold},
                {"variance_floor", cfg.variance_floor},
            };
        }
        root["variants"].push_back(std::move(node));
    }
    return root.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const OutputOptions& output) {
    config.validate();
    if (output.dump_posterior) {
        const auto& dump = *output.dump_posterior;
        if (dump.subband < 0 ||
            dump.subband >= static_cast<int>(config.environment.subbands.size())) {
            config_error("dump_posterior.subband", "is out of range");
        }
        const bool has_cp_variant =
            std::any_of(config.variants.begin(), config.variants.end(),
                        [](const VariantConfig& v) {
                            return v.predictor.variant != predictor::Variant::original;
                        });
        if (!has_cp_variant) {
            config_error("dump_posterior",
                         "requires at least one changepoint variant");
        }
    }

    const bool write_files = !output.out_dir.empty();
    std::filesystem::path out_dir(output.out_dir);
    if (write_files) {
        std::filesystem::create_directories(out_dir);
    }

    const auto window = config.scoring_window();
    const int bands = static_cast<int>(config.environment.subbands.size());
    const std::int64_t pulses = config.environment.pulses;

    CsvWriter metrics_csv;
    if (write_files) {
        metrics_csv = CsvWriter(
            out_dir / "metrics.csv",
            "variant,seed,collision_rate,missed_rate,weighted_error,collisions,"
            "missed_opportunities,busy_pulses,idle_pulses,window_start,window_end");
    }

    // The first changepoint variant owns the posterior dump.
    std::size_t dump_variant = config.variants.size();
    if (output.dump_posterior) {
        for (std::size_t v = 0; v < config.variants.size(); ++v) {
            if (config.variants[v].predictor.variant != predictor::Variant::original) {
                dump_variant = v;
                break;
            }
        }
    }

    ExperimentResult result;
    std::vector<std::uint8_t> truth;  // pulse-major truth flags of one seed

    for (int rep = 0; rep < config.replications; ++rep) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(rep);
        const bool tracing = write_files && rep == 0;

        auto env_spec = config.environment;
        env_spec.seed = seed;
        sim::Environment env(env_spec);
        truth.assign(static_cast<std::size_t>(pulses) * bands, 0);
        for (std::int64_t t = 0; t < pulses; ++t) {
            const auto flags = env.advance();
            std::copy(flags.begin(), flags.end(),
                      truth.begin() + static_cast<std::size_t>(t) * bands);
        }

        if (tracing) {
            CsvWriter truth_csv(out_dir / "truth.csv", "pulse,subband,state");
            for (std::int64_t t = 0; t < pulses; ++t) {
                for (int b = 0; b < bands; ++b) {
                    truth_csv.row(t, b,
                                  static_cast<int>(
                                      truth[static_cast<std::size_t>(t) * bands + b]));
                }
            }
            CsvWriter cp_csv(out_dir / "changepoints.csv",
                             "pulse,subband,busy_mean,idle_mean");
            for (const auto& event : env.changepoint_log()) {
                cp_csv.row(event.pulse, event.subband, event.busy_mean, event.idle_mean);
            }
        }

        for (std::size_t v = 0; v < config.variants.size(); ++v) {
            const auto& variant = config.variants[v];
            predictor::Engine engine(variant.predictor, bands);

            CsvWriter decisions_csv;
            if (tracing) {
                decisions_csv =
                    CsvWriter(out_dir / ("decisions_" + variant.label + ".csv"),
                              "pulse,subband,state,probability,available,truth");
            }
            CsvWriter posterior_csv;
            std::int64_t dump_index = 0;
            if (tracing && v == dump_variant) {
                std::string header = "index,x,map_run_length,hazard";
                const int cap = variant.predictor.bocd.max_run_length;
                for (int r = 0; r <= cap; ++r) {
                    header += ",p" + std::to_string(r);
                }
                posterior_csv = CsvWriter(out_dir / "posterior.csv", header);
                const auto dump = *output.dump_posterior;
                engine.set_detector_observer(
                    [&, dump](int subband, predictor::IntervalKind kind, double duration,
                              const bocd::DetectorUpdate& update,
                              const bocd::Detector& detector) {
                        if (subband != dump.subband || kind != dump.kind) {
                            return;
                        }
                        std::string row = std::to_string(dump_index++) + "," +
                                          format_double(duration) + "," +
                                          std::to_string(update.map_run_length) + "," +
                                          format_double(update.hazard_estimate);
                        for (double p : detector.run_length_posterior()) {
                            row += "," + format_double(p);
                        }
                        posterior_csv.row(row);
                    });
            }

            metrics::Counters counters;
            const int latency = variant.predictor.latency;
            struct Pending {
                std::int64_t target;
                std::vector<predictor::Decision> decisions;
                std::vector<std::uint8_t> states;  // flags at decision time
            };
            std::deque<Pending> pending;
            std::vector<std::uint8_t> flags(static_cast<std::size_t>(bands));

            for (std::int64_t t = 0; t < pulses; ++t) {
                std::copy_n(truth.begin() + static_cast<std::size_t>(t) * bands, bands,
                            flags.begin());
                auto decisions = engine.step(flags);
                pending.push_back({t + latency, std::move(decisions), flags});
                while (!pending.empty() && pending.front().target <= t) {
                    const auto& entry = pending.front();
                    const bool scored = window.contains(entry.target);
                    for (int b = 0; b < bands; ++b) {
                        const bool truth_busy =
                            truth[static_cast<std::size_t>(entry.target) * bands + b] != 0;
                        const auto& d = entry.decisions[static_cast<std::size_t>(b)];
                        if (scored) {
                            counters.record(d.available, truth_busy);
                        }
                        if (decisions_csv.enabled()) {
                            decisions_csv.row(
                                entry.target - latency, b,
                                static_cast<int>(entry.states[static_cast<std::size_t>(b)]),
                                d.probability, static_cast<int>(d.available),
                                static_cast<int>(truth_busy));
                        }
                    }
                    pending.pop_front();
                }
            }

            RunResult run;
            run.label = variant.label;
            run.seed = seed;
            run.report = metrics::finalize(counters, variant.predictor.alpha, window);
            if (metrics_csv.enabled()) {
                metrics_csv.row(run.label, std::to_string(seed),
                                run.report.collision_rate, run.report.missed_rate,
                                run.report.weighted_error, counters.collisions,
                                counters.missed_opportunities, counters.busy_scored,
                                counters.idle_scored, window.begin, window.end);
            }
            result.runs.push_back(std::move(run));
        }
    }

    for (const auto& variant : config.variants) {
        VariantAggregate aggregate;
        aggregate.label = variant.label;
        std::vector<double> errors;
        for (const auto& run : result.runs) {
            if (run.label != variant.label) {
                continue;
            }
            aggregate.mean_collision_rate += run.report.collision_rate;
            aggregate.mean_missed_rate += run.report.missed_rate;
            aggregate.mean_weighted_error += run.report.weighted_error;
            errors.push_back(run.report.weighted_error);
        }
        const double n = static_cast<double>(errors.size());
        aggregate.mean_collision_rate /= n;
        aggregate.mean_missed_rate /= n;
        aggregate.mean_weighted_error /= n;
        if (errors.size() > 1) {
            double ss = 0.0;
            for (double e : errors) {
                const double d = e - aggregate.mean_weighted_error;
                ss += d * d;
            }
            aggregate.std_weighted_error = std::sqrt(ss / (n - 1.0));
        }
        if (metrics_csv.enabled()) {
            metrics_csv.row(aggregate.label, std::string("mean"),
                            aggregate.mean_collision_rate, aggregate.mean_missed_rate,
                            aggregate.mean_weighted_error, std::int64_t{0},
                            std::int64_t{0}, std::int64_t{0}, std::int64_t{0},
                            window.begin, window.end);
            metrics_csv.row(aggregate.label, std::string("std"), 0.0, 0.0,
                            aggregate.std_weighted_error, std::int64_t{0},
                            std::int64_t{0}, std::int64_t{0}, std::int64_t{0},
                            window.begin, window.end);
        }
        result.aggregates.push_back(std::move(aggregate));
    }

    return result;
}

}  // namespace specpredict::experiment
