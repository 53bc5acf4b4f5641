#include "specpredict/interval_models.hpp"

#include <cmath>
#include <stdexcept>

namespace specpredict::models {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

double normal_survival(double z) {
    return 0.5 * std::erfc(z * kInvSqrt2);
}

}  // namespace

LognormalParams gaussian_to_lognormal(double mean, double variance) {
    if (!(mean > 0.0)) {
        throw std::domain_error("gaussian_to_lognormal: mean must be > 0");
    }
    if (variance < 0.0) {
        throw std::domain_error("gaussian_to_lognormal: variance must be >= 0");
    }
    const double sigma_sq = std::log1p(variance / (mean * mean));
    return {std::log(mean) - 0.5 * sigma_sq, std::sqrt(sigma_sq)};
}

double lognormal_cdf(const LognormalParams& params, double t) {
    if (t <= 0.0) {
        return 0.0;
    }
    if (params.sigma_hat == 0.0) {
        return t >= std::exp(params.mu_hat) ? 1.0 : 0.0;
    }
    return normal_cdf((std::log(t) - params.mu_hat) / params.sigma_hat);
}

double lognormal_survival(const LognormalParams& params, double t) {
    if (t <= 0.0) {
        return 1.0;
    }
    if (params.sigma_hat == 0.0) {
        return t >= std::exp(params.mu_hat) ? 0.0 : 1.0;
    }
    return normal_survival((std::log(t) - params.mu_hat) / params.sigma_hat);
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::span<const int> samples) {
    if (samples.empty()) {
        throw std::domain_error("EmpiricalDistribution: no samples");
    }
    std::vector<int> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 1) {
        throw std::domain_error("EmpiricalDistribution: durations must be >= 1");
    }

    EmpiricalDistribution dist;
    dist.total_ = static_cast<std::int64_t>(sorted.size());
    std::int64_t seen = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        seen += static_cast<std::int64_t>(j - i);
        dist.support_.push_back(sorted[i]);
        dist.cumulative_.push_back(seen);
        i = j;
    }
    return dist;
}

double EmpiricalDistribution::pmf(int duration) const {
    const auto it = std::lower_bound(support_.begin(), support_.end(), duration);
    if (it == support_.end() || *it != duration) {
        return 0.0;
    }
    const auto idx = static_cast<std::size_t>(it - support_.begin());
    const std::int64_t count =
        cumulative_[idx] - (idx == 0 ? 0 : cumulative_[idx - 1]);
    return static_cast<double>(count) / static_cast<double>(total_);
}

double EmpiricalDistribution::cdf(double t) const {
    // First support value strictly greater than t; everything before it has
    // duration <= t.
    const auto it = std::upper_bound(support_.begin(), support_.end(), t,
                                     [](double v, int s) { return v < static_cast<double>(s); });
    if (it == support_.begin()) {
        return 0.0;
    }
    const auto idx = static_cast<std::size_t>(it - support_.begin()) - 1;
    return static_cast<double>(cumulative_[idx]) / static_cast<double>(total_);
}

double EmpiricalDistribution::survival(double t) const {
    const auto it = std::upper_bound(support_.begin(), support_.end(), t,
                                     [](double v, int s) { return v < static_cast<double>(s); });
    if (it == support_.begin()) {
        return 1.0;
    }
    const auto idx = static_cast<std::size_t>(it - support_.begin()) - 1;
    return static_cast<double>(total_ - cumulative_[idx]) / static_cast<double>(total_);
}

std::vector<std::pair<int, double>> EmpiricalDistribution::pmf_entries() const {
    std::vector<std::pair<int, double>> entries;
    entries.reserve(support_.size());
    for (std::size_t i = 0; i < support_.size(); ++i) {
        const std::int64_t count = cumulative_[i] - (i == 0 ? 0 : cumulative_[i - 1]);
        entries.emplace_back(support_[i],
                             static_cast<double>(count) / static_cast<double>(total_));
    }
    return entries;
}

IntervalModel IntervalModel::lognormal(LognormalParams params) {
    IntervalModel model;
    model.kind_ = ModelKind::lognormal;
    model.lognormal_ = params;
    return model;
}

IntervalModel IntervalModel::empirical(EmpiricalDistribution dist) {
    IntervalModel model;
    model.kind_ = ModelKind::empirical;
    model.empirical_ = std::move(dist);
    return model;
}

const LognormalParams& IntervalModel::lognormal_params() const {
    if (kind_ != ModelKind::lognormal) {
        throw std::logic_error("IntervalModel: not a lognormal model");
    }
    return lognormal_;
}

const EmpiricalDistribution& IntervalModel::empirical_dist() const {
    if (kind_ != ModelKind::empirical) {
        throw std::logic_error("IntervalModel: not an empirical model");
    }
    return empirical_;
}

double IntervalModel::cdf(double t) const {
    return kind_ == ModelKind::lognormal ? lognormal_cdf(lognormal_, t) : empirical_.cdf(t);
}

double IntervalModel::survival(double t) const {
    return kind_ == ModelKind::lognormal ? lognormal_survival(lognormal_, t)
                                         : empirical_.survival(t);
}

double conditional_failure(const IntervalModel& model, double a, double b) {
    if (a < 0.0 || b < a) {
        throw std::invalid_argument("conditional_failure: requires b >= a >= 0");
    }
    if (model.cdf(a) >= 1.0) {
        return 1.0;
    }
    const double sa = model.survival(a);
    if (sa <= 0.0) {
        return 1.0;
    }
    return std::clamp(1.0 - model.survival(b) / sa, 0.0, 1.0);
}

double busy_availability(const IntervalModel& model, double elapsed, double latency) {
    return conditional_failure(model, elapsed, elapsed + latency);
}

double idle_availability(const IntervalModel& model, double elapsed, double latency) {
    return 1.0 - conditional_failure(model, elapsed, elapsed + latency);
}

}  // namespace specpredict::models
