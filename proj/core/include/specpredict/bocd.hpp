#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace specpredict::bocd {

/// Tunables of the prior-free online changepoint detector.
struct BocdConfig {
    /// Run-length cap L: mass that would grow past it accumulates at L.
    int max_run_length = 60;
    /// Growth multiplier gamma; larger values make resets rarer.
    double sensitivity = 60.0;
    /// Run-length posterior tail prune threshold (theta_r).
    double run_length_prune_threshold = 1e-6;
    /// Changepoint-count marginal tail prune threshold (theta_a).
    double changepoint_count_prune_threshold = 1e-6;
    /// Lower bound on partition variance so constant partitions keep a
    /// finite predictive density.
    double variance_floor = 1e-4;

    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;

    bool operator==(const BocdConfig&) const = default;
};

/// Sufficient statistics of a data partition: count, sum and sum of squares.
struct PartitionStats {
    int count = 0;
    double sum = 0.0;
    double sum_squares = 0.0;

    void add(double x) {
        ++count;
        sum += x;
        sum_squares += x * x;
    }
    double mean() const { return sum / count; }
    /// Population variance (1/n) * sum((x - mean)^2).
    double variance() const {
        const double m = mean();
        return sum_squares / count - m * m;
    }
};

/// Normal predictive density of x under a partition with at least two data.
/// The variance is floored at `variance_floor`. Throws std::logic_error on
/// partitions with fewer than two data: those are handled by the recursion's
/// run-length-1 special case, never by a density evaluation.
double predictive_likelihood(const PartitionStats& stats, double x, double variance_floor);

/// Index of the posterior mode; ties break toward the largest run length.
int map_run_length(std::span<const double> posterior);

/// Folds mass above the run-length cap into the bin at `max_run_length`,
/// discards tail entries older than the mode whose probability is below
/// `prune_threshold` (never run lengths 0 or 1), and renormalizes.
/// `posterior` may arrive longer than max_run_length + 1; it is resized.
void truncate_and_prune(std::vector<double>& posterior, int max_run_length,
                        double prune_threshold);

/// Joint mass over (run length, changepoint count) pairs, used to estimate
/// the hazard rate online. b = t - a counts non-changepoint steps.
class JointPosterior {
public:
    struct Entry {
        int run_length;
        int changepoint_count;
        double probability;
    };

    JointPosterior() = default;

    /// Posterior-mean hazard: sum over entries of P(r, a) * (a+1)/(a+b+2).
    double hazard_estimate() const;
    double total_mass() const;
    int time_index() const { return time_; }

    /// Entries in (changepoint count, run length) order, zero mass omitted.
    std::vector<Entry> entries() const;

private:
    friend class Detector;
    // one dense run-length column per retained changepoint count
    std::map<int, std::vector<double>> columns_;
    int time_ = 0;
};

/// Result of feeding one observation to a detector.
struct DetectorUpdate {
    int map_run_length = 0;
    /// Mean of the MAP partition; 0 when the MAP run holds no data.
    double partition_mean = 0.0;
    /// Floored variance of the MAP partition.
    double partition_variance = 0.0;
    /// Posterior-mean hazard after this observation.
    double hazard_estimate = 0.0;
    /// Posterior mass at run length 0 after this observation.
    double changepoint_probability = 0.0;
};

/// Prior-free Bayesian online changepoint detector over a univariate stream
/// of interval durations.
///
/// Per observation the run-length posterior follows the three-case update:
/// run length 0 collects h * pi over every nonzero predecessor, run length 1
/// carries the previous changepoint mass unweighted (a one-datum partition
/// has no usable variance), and deeper growth is weighted by
/// (1 - h) * pi * gamma. The predictive pi of a predecessor run is the
/// normal density of the new datum under that run's partition statistics;
/// a predecessor of length 1 scales its variance to the first two data of
/// the new partition. The hazard h is re-estimated after every observation
/// from the joint (run length, changepoint count) posterior, which advances
/// under the same predictives with per-pair transition probabilities
/// (a+1)/(a+b+2). Memory stays O(L): mass past the run-length cap pools at
/// L and both posterior tails are pruned.
///
/// A detector is a sequential state machine; distinct detectors are
/// independent.
class Detector {
public:
    explicit Detector(BocdConfig config);

    /// Ingests one completed interval duration (pulses, > 0 and finite).
    DetectorUpdate observe(double x);

    /// Dense run-length posterior over [0, max_run_length].
    const std::vector<double>& run_length_posterior() const { return posterior_; }
    const JointPosterior& joint() const { return joint_; }
    const BocdConfig& config() const { return config_; }

    double hazard_estimate() const { return joint_.hazard_estimate(); }
    int map_run_length() const;
    int observation_count() const { return observations_; }

    /// Statistics over the `run_length` most recent observations
    /// (1 <= run_length <= min(count, L)).
    PartitionStats partition_stats(int run_length) const;

    /// The `count` most recent observations, oldest first.
    std::vector<double> recent_observations(int count) const;

private:
    double predictive_for_source(int source_run, double x) const;

    BocdConfig config_;
    std::vector<double> posterior_;   // P(r | x_1:t), indexed by r
    JointPosterior joint_;
    std::vector<double> window_;      // newest-last, holds up to L + 1 values
    int observations_ = 0;
};

}  // namespace specpredict::bocd
