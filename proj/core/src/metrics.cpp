#include "specpredict/metrics.hpp"

namespace specpredict::metrics {

MetricsReport finalize(const Counters& counts, double alpha, ScoringWindow window) {
    MetricsReport report;
    report.counts = counts;
    report.window = window;
    if (counts.busy_scored > 0) {
        report.collision_rate = static_cast<double>(counts.collisions) /
                                static_cast<double>(counts.busy_scored);
    }
    if (counts.idle_scored > 0) {
        report.missed_rate = static_cast<double>(counts.missed_opportunities) /
                             static_cast<double>(counts.idle_scored);
    }
    report.weighted_error =
        alpha * report.collision_rate + (1.0 - alpha) * report.missed_rate;
    return report;
}

}  // namespace specpredict::metrics
