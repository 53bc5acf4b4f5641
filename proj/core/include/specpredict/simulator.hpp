#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace specpredict::sim {

struct NormalSpec {
    double mean = 0.0;
    double stddev = 0.0;

    bool operator==(const NormalSpec&) const = default;
};

struct SubBandSpec {
    NormalSpec busy;
    NormalSpec idle;

    bool operator==(const SubBandSpec&) const = default;
};

/// When the changepoint trial fires: once per pulse, or once per interval
/// draw. Per-pulse trials compound fast (h = 0.03 shifts the means about
/// every 33 pulses, well inside a single interval); per-interval trials
/// keep regimes tens of intervals long.
enum class ChangepointCadence { per_pulse, per_interval };

/// Per-pulse spectral environment: each sub-band alternates busy and idle
/// intervals whose duration means shift at random changepoints.
struct EnvironmentSpec {
    std::vector<SubBandSpec> subbands;
    /// Per-trial, per-sub-band probability that both duration means shift.
    double changepoint_probability = 0.0;
    ChangepointCadence cadence = ChangepointCadence::per_pulse;
    /// Distribution of the shift magnitude |delta| (absolute value taken).
    NormalSpec magnitude{40.0, 10.0};
    std::int64_t pulses = 100000;
    std::uint64_t seed = 1;

    void validate() const;

    bool operator==(const EnvironmentSpec&) const = default;
};

struct ChangepointEvent {
    std::int64_t pulse;
    int subband;
    double busy_mean;
    double idle_mean;
};

/// Draws an interval duration: a normal variate rounded to the nearest
/// pulse count and clamped to at least one pulse.
int draw_interval(const NormalSpec& dist, std::mt19937_64& rng);

class Environment {
public:
    explicit Environment(EnvironmentSpec spec);

    int subband_count() const { return static_cast<int>(bands_.size()); }
    std::int64_t pulse() const { return pulse_; }

    /// Emits the busy flags for the next pulse (1 = busy).
    std::vector<std::uint8_t> advance();

    /// Shifts both duration means of one sub-band by an independently signed
    /// magnitude draw; means stay at or above two pulses. In-progress
    /// intervals complete unchanged. Logged as one event.
    void apply_changepoint(int subband);

    double busy_mean(int subband) const { return bands_[static_cast<std::size_t>(subband)].busy.mean; }
    double idle_mean(int subband) const { return bands_[static_cast<std::size_t>(subband)].idle.mean; }

    const std::vector<ChangepointEvent>& changepoint_log() const { return log_; }

private:
    struct Band {
        NormalSpec busy;
        NormalSpec idle;
        bool is_busy = false;
        int remaining = 0;
    };

    EnvironmentSpec spec_;
    std::vector<Band> bands_;
    std::vector<ChangepointEvent> log_;
    std::mt19937_64 rng_;
    std::int64_t pulse_ = 0;
};

}  // namespace specpredict::sim
