#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specpredict/metrics.hpp"
#include "specpredict/predictor.hpp"
#include "specpredict/simulator.hpp"

namespace specpredict::experiment {

enum class ScoreWindowMode { post_sei, full };

struct VariantConfig {
    std::string label;  // defaults to the variant name
    predictor::PredictorConfig predictor;

    bool operator==(const VariantConfig&) const = default;
};

/// Full description of a comparative study: one environment, one or more
/// predictor variants, replicated over consecutive seeds.
struct ExperimentConfig {
    sim::EnvironmentSpec environment;
    std::vector<VariantConfig> variants;
    int replications = 10;
    std::uint64_t base_seed = 1;
    /// SEI length used both as the original variant's default and as the
    /// start of the post-SEI scoring window.
    std::int64_t sei = 5000;
    ScoreWindowMode score_window = ScoreWindowMode::post_sei;

    metrics::ScoringWindow scoring_window() const;
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses a JSON config; error messages name the offending field.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

struct RunResult {
    std::string label;
    std::uint64_t seed = 0;
    metrics::MetricsReport report;
};

struct VariantAggregate {
    std::string label;
    double mean_collision_rate = 0.0;
    double mean_missed_rate = 0.0;
    double mean_weighted_error = 0.0;
    double std_weighted_error = 0.0;
};

struct ExperimentResult {
    std::vector<RunResult> runs;
    std::vector<VariantAggregate> aggregates;
};

struct PosteriorDumpSpec {
    int subband = 0;
    predictor::IntervalKind kind = predictor::IntervalKind::busy;
};

struct OutputOptions {
    /// Directory for CSV outputs; empty disables file output entirely.
    std::string out_dir;
    /// When set, streams every detector update of the designated sub-band
    /// and interval kind (first changepoint variant, first seed).
    std::optional<PosteriorDumpSpec> dump_posterior;
};

/// Runs every (variant, seed) pair: simulate, predict, score. Diagnostic
/// traces (ground truth, changepoints, decisions, posterior dump) cover the
/// first seed; metrics.csv covers all of them.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const OutputOptions& output);

}  // namespace specpredict::experiment
