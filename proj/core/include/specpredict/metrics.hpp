#pragma once

#include <cstdint>

namespace specpredict::metrics {

struct ScoringWindow {
    std::int64_t begin = 0;  // inclusive
    std::int64_t end = 0;    // exclusive

    bool contains(std::int64_t pulse) const { return pulse >= begin && pulse < end; }

    bool operator==(const ScoringWindow&) const = default;
};

/// Decision-vs-truth counters. Mergeable, so replicated runs can be
/// combined by addition.
struct Counters {
    std::int64_t busy_scored = 0;
    std::int64_t idle_scored = 0;
    std::int64_t collisions = 0;
    std::int64_t missed_opportunities = 0;

    /// Scores one decision against the ground truth at its target pulse:
    /// transmitting into a busy band is a collision, staying silent in an
    /// idle band is a missed opportunity.
    void record(bool predicted_available, bool truth_busy) {
        if (truth_busy) {
            ++busy_scored;
            if (predicted_available) {
                ++collisions;
            }
        } else {
            ++idle_scored;
            if (!predicted_available) {
                ++missed_opportunities;
            }
        }
    }

    Counters& operator+=(const Counters& other) {
        busy_scored += other.busy_scored;
        idle_scored += other.idle_scored;
        collisions += other.collisions;
        missed_opportunities += other.missed_opportunities;
        return *this;
    }

    bool operator==(const Counters&) const = default;
};

struct MetricsReport {
    double collision_rate = 0.0;        // C, conditioned on truly busy pulses
    double missed_rate = 0.0;           // D, conditioned on truly idle pulses
    double weighted_error = 0.0;        // rho = alpha C + (1 - alpha) D
    Counters counts;
    ScoringWindow window;
};

/// Rates from counters; a side with no scored pulses contributes rate 0.
MetricsReport finalize(const Counters& counts, double alpha, ScoringWindow window);

}  // namespace specpredict::metrics
