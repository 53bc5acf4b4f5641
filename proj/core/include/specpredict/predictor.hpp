#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specpredict/bocd.hpp"
#include "specpredict/interval_models.hpp"

namespace specpredict::predictor {

enum class Variant { original, cp_lognormal, cp_empirical };

std::string variant_name(Variant variant);

/// Offline threshold rule for the changepoint variants:
/// theta_busy = theta_idle = 1 - alpha.
std::pair<double, double> static_thresholds(double alpha);

/// One pulse of a threshold-tuning trace: the availability probability the
/// model produced, the sub-band state it was produced in, and the ground
/// truth at the targeted pulse.
struct ThresholdSample {
    double probability;
    bool state_busy;
    bool truth_busy;
};

/// Exhaustively evaluates the weighted error over a 100 x 100 grid of
/// busy/idle thresholds spanning [0.05, 0.95] and returns the minimizing
/// pair; ties break toward larger thresholds. An empty trace yields
/// (0.5, 0.5).
std::pair<double, double> grid_search_thresholds(std::span<const ThresholdSample> trace,
                                                 double alpha);

/// Sample mean and population variance of one interval log, converted to
/// lognormal parameters. Fewer than two intervals leave no model (the
/// previous one stays in place).
std::optional<models::LognormalParams> legacy_retrain(std::span<const int> durations);

struct PredictorConfig {
    Variant variant = Variant::cp_lognormal;
    /// Action latency delta-t in pulses: decisions made at pulse t target
    /// pulse t + latency.
    int latency = 5;
    /// Collision weight in the error metric, also the source of the static
    /// threshold rule.
    double alpha = 0.5;
    /// Spectrum evaluation interval in pulses (original variant).
    std::int64_t sei = 5000;
    /// Fixed threshold override for the changepoint variants. The original
    /// variant always tunes thresholds by grid search at SEI boundaries.
    std::optional<double> theta_busy;
    std::optional<double> theta_idle;
    bocd::BocdConfig bocd{};

    void validate() const;

    bool operator==(const PredictorConfig&) const = default;
};

struct Decision {
    bool available = false;
    double probability = 0.0;
    bool model_ready = false;
};

enum class IntervalKind { busy, idle };

/// Per-sub-band predictor state shared by all variants.
struct SubBandState {
    bool status_busy = false;
    std::int64_t elapsed = 0;  // pulses spent in the current state
    std::optional<models::IntervalModel> busy_model;
    std::optional<models::IntervalModel> idle_model;
    // changepoint variants
    std::optional<bocd::Detector> busy_detector;
    std::optional<bocd::Detector> idle_detector;
    // original variant: intervals completed during the current SEI
    std::vector<int> sei_busy_log;
    std::vector<int> sei_idle_log;

    bool model_ready() const { return busy_model.has_value() && idle_model.has_value(); }
};

/// The per-sub-band sense-and-predict engine.
///
/// Every pulse it ingests the observed busy flags, closes any finished
/// intervals, and emits one availability decision per sub-band targeted at
/// pulse t + latency, thresholding the conditional-failure availability
/// probability of the current state. The original variant stays passive
/// through its first SEI, retrains its lognormal models from each completed
/// SEI, and re-tunes both thresholds by replaying that SEI under the fresh
/// models. The changepoint variants feed every completed interval to the
/// matching detector and refit the interval model from the MAP run-length
/// partition, with fixed thresholds.
class Engine {
public:
    /// Called after a detector ingests a completed interval; used for the
    /// posterior dump.
    using DetectorObserver = std::function<void(
        int subband, IntervalKind kind, double duration,
        const bocd::DetectorUpdate& update, const bocd::Detector& detector)>;

    Engine(PredictorConfig config, int subband_count);

    /// Ingests the busy flags of the next pulse; returns the decision per
    /// sub-band for pulse t + latency.
    std::vector<Decision> step(std::span<const std::uint8_t> busy_flags);

    std::int64_t pulses_seen() const { return pulse_; }
    int subband_count() const { return static_cast<int>(bands_.size()); }
    const SubBandState& subband(int index) const {
        return bands_[static_cast<std::size_t>(index)];
    }
    const PredictorConfig& config() const { return config_; }
    double theta_busy() const { return theta_busy_; }
    double theta_idle() const { return theta_idle_; }

    void set_detector_observer(DetectorObserver observer) {
        observer_ = std::move(observer);
    }

private:
    void complete_interval(int subband, IntervalKind kind, std::int64_t duration);
    void retrain_original();
    double availability(const SubBandState& band) const;

    PredictorConfig config_;
    std::vector<SubBandState> bands_;
    double theta_busy_ = 0.5;
    double theta_idle_ = 0.5;
    std::int64_t pulse_ = 0;
    DetectorObserver observer_;

    // original variant: per-pulse record of the running SEI's live
    // availability probabilities, for threshold tuning at the boundary
    struct PulseRecord {
        std::uint8_t busy;
        std::uint8_t model_ready;
        double probability;
    };
    std::vector<std::vector<PulseRecord>> sei_records_;  // [band][pulse in SEI]
};

}  // namespace specpredict::predictor
