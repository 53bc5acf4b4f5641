#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace specpredict::models {

/// Parameters of a lognormal duration distribution in log-pulse units.
/// sigma_hat == 0 degenerates to a deterministic duration at exp(mu_hat).
struct LognormalParams {
    double mu_hat = 0.0;
    double sigma_hat = 0.0;

    bool operator==(const LognormalParams&) const = default;
};

/// Moment-matched lognormal parameters for a positive variable with the
/// given mean and variance:
///   sigma_hat^2 = ln(1 + var/mean^2)
///   mu_hat      = ln(mean) - sigma_hat^2 / 2
/// Round trip: exp(mu_hat + sigma_hat^2/2) == mean and
/// (exp(sigma_hat^2) - 1) * exp(2 mu_hat + sigma_hat^2) == var.
/// Throws std::domain_error for mean <= 0 or var < 0.
LognormalParams gaussian_to_lognormal(double mean, double variance);

/// CDF of the lognormal at t (0 for t <= 0).
double lognormal_cdf(const LognormalParams& params, double t);

/// 1 - CDF, evaluated directly so the right tail keeps precision.
double lognormal_survival(const LognormalParams& params, double t);

/// Normalized histogram over integer durations (pulses >= 1) with its
/// running-sum CDF. Immutable after construction.
class EmpiricalDistribution {
public:
    /// Builds the distribution from observed durations.
    /// Throws std::domain_error on an empty list or durations < 1.
    static EmpiricalDistribution from_samples(std::span<const int> samples);

    double pmf(int duration) const;
    double cdf(double t) const;
    double survival(double t) const;
    int support_max() const { return support_.empty() ? 0 : support_.back(); }

    /// (duration, pmf) pairs in increasing duration order.
    std::vector<std::pair<int, double>> pmf_entries() const;

    bool operator==(const EmpiricalDistribution&) const = default;

private:
    std::vector<int> support_;
    std::vector<std::int64_t> cumulative_;  // cumulative sample counts
    std::int64_t total_ = 0;
};

enum class ModelKind { lognormal, empirical };

/// A busy- or idle-interval duration model: exactly one of the two payloads.
class IntervalModel {
public:
    static IntervalModel lognormal(LognormalParams params);
    static IntervalModel empirical(EmpiricalDistribution dist);

    ModelKind kind() const { return kind_; }
    const LognormalParams& lognormal_params() const;
    const EmpiricalDistribution& empirical_dist() const;

    double cdf(double t) const;
    double survival(double t) const;

private:
    ModelKind kind_ = ModelKind::lognormal;
    LognormalParams lognormal_{};
    EmpiricalDistribution empirical_{};
};

/// P(state change in (a, b] | no change through a) = (F(b) - F(a)) / (1 - F(a)).
/// Returns 1 once the support is exhausted (F(a) = 1): the interval has
/// outlived every modeled duration. Requires b >= a >= 0.
double conditional_failure(const IntervalModel& model, double a, double b);

/// Same rule for an arbitrary CDF callable.
template <class Cdf>
double conditional_failure_cdf(Cdf&& cdf, double a, double b) {
    const double fa = cdf(a);
    if (fa >= 1.0) {
        return 1.0;
    }
    const double value = (cdf(b) - fa) / (1.0 - fa);
    return std::clamp(value, 0.0, 1.0);
}

/// Probability that a sub-band busy for `elapsed` pulses frees up within
/// the next `latency` pulses.
double busy_availability(const IntervalModel& model, double elapsed, double latency);

/// Probability that a sub-band idle for `elapsed` pulses is still idle
/// after `latency` pulses.
double idle_availability(const IntervalModel& model, double elapsed, double latency);

}  // namespace specpredict::models
