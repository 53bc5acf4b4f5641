#include "specpredict/predictor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace specpredict::predictor {

namespace {

constexpr int kGridPoints = 100;
constexpr double kGridLow = 0.05;
constexpr double kGridSpan = 0.9;  // thresholds span [0.05, 0.95]

double grid_value(int index) {
    return kGridLow + kGridSpan * index / (kGridPoints - 1);
}

}  // namespace

std::string variant_name(Variant variant) {
    switch (variant) {
        case Variant::original: return "original";
        case Variant::cp_lognormal: return "cp_lognormal";
        case Variant::cp_empirical: return "cp_empirical";
    }
    return "unknown";
}

std::pair<double, double> static_thresholds(double alpha) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("static_thresholds: alpha must lie in [0, 1]");
    }
    return {1.0 - alpha, 1.0 - alpha};
}

std::pair<double, double> grid_search_thresholds(std::span<const ThresholdSample> trace,
                                                 double alpha) {
    if (trace.empty()) {
        return {0.5, 0.5};
    }

    std::int64_t busy_truth = 0;
    std::int64_t idle_truth = 0;
    // Per-threshold counts, split by the state the decision was made in.
    // A busy-state pulse only depends on theta_busy, an idle-state pulse
    // only on theta_idle, so each axis can be counted independently.
    std::array<std::int64_t, kGridPoints> collisions_busy{}, missed_busy{};
    std::array<std::int64_t, kGridPoints> collisions_idle{}, missed_idle{};

    for (const auto& sample : trace) {
        (sample.truth_busy ? busy_truth : idle_truth) += 1;
        auto& collisions = sample.state_busy ? collisions_busy : collisions_idle;
        auto& missed = sample.state_busy ? missed_busy : missed_idle;
        for (int k = 0; k < kGridPoints; ++k) {
            const bool available = sample.probability >= grid_value(k);
            if (available && sample.truth_busy) {
                ++collisions[static_cast<std::size_t>(k)];
            } else if (!available && !sample.truth_busy) {
                ++missed[static_cast<std::size_t>(k)];
            }
        }
    }

    double best_error = 0.0;
    int best_busy = 0;
    int best_idle = 0;
    bool first = true;
    for (int b = 0; b < kGridPoints; ++b) {
        for (int i = 0; i < kGridPoints; ++i) {
            const auto collisions = collisions_busy[static_cast<std::size_t>(b)] +
                                    collisions_idle[static_cast<std::size_t>(i)];
            const auto missed = missed_busy[static_cast<std::size_t>(b)] +
                                missed_idle[static_cast<std::size_t>(i)];
            const double c_rate = busy_truth > 0
                                      ? static_cast<double>(collisions) /
                                            static_cast<double>(busy_truth)
                                      : 0.0;
            const double d_rate = idle_truth > 0
                                      ? static_cast<double>(missed) /
                                            static_cast<double>(idle_truth)
                                      : 0.0;
            const double error = alpha * c_rate + (1.0 - alpha) * d_rate;
            // <= keeps the largest tied pair, biasing toward caution
            if (first || error <= best_error) {
                first = false;
                best_error = error;
                best_busy = b;
                best_idle = i;
            }
        }
    }
    return {grid_value(best_busy), grid_value(best_idle)};
}

std::optional<models::LognormalParams> legacy_retrain(std::span<const int> durations) {
    if (durations.size() < 2) {
        return std::nullopt;
    }
    double sum = 0.0;
    double sum_squares = 0.0;
    for (int d : durations) {
        sum += d;
        sum_squares += static_cast<double>(d) * d;
    }
    const double n = static_cast<double>(durations.size());
    const double mean = sum / n;
    const double variance = std::max(0.0, sum_squares / n - mean * mean);
    return models::gaussian_to_lognormal(mean, variance);
}

void PredictorConfig::validate() const {
    if (latency < 0) {
        throw std::invalid_argument("PredictorConfig: latency must be >= 0");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("PredictorConfig: alpha must lie in [0, 1]");
    }
    if (sei < 1) {
        throw std::invalid_argument("PredictorConfig: sei must be >= 1");
    }
    for (const auto& theta : {theta_busy, theta_idle}) {
        if (theta && (*theta < 0.0 || *theta > 1.0)) {
            throw std::invalid_argument("PredictorConfig: thresholds must lie in [0, 1]");
        }
    }
    if (variant != Variant::original) {
        bocd.validate();
    }
}

Engine::Engine(PredictorConfig config, int subband_count) : config_(std::move(config)) {
    config_.validate();
    if (subband_count < 1) {
        throw std::invalid_argument("Engine: at least one sub-band required");
    }
    bands_.resize(static_cast<std::size_t>(subband_count));
    if (config_.variant == Variant::original) {
        sei_records_.resize(bands_.size());
        for (auto& records : sei_records_) {
            records.reserve(static_cast<std::size_t>(config_.sei));
        }
    } else {
        const auto [theta_b, theta_i] = static_thresholds(config_.alpha);
        theta_busy_ = config_.theta_busy.value_or(theta_b);
        theta_idle_ = config_.theta_idle.value_or(theta_i);
        for (auto& band : bands_) {
            band.busy_detector.emplace(config_.bocd);
            band.idle_detector.emplace(config_.bocd);
        }
    }
}

void Engine::complete_interval(int subband, IntervalKind kind, std::int64_t duration) {
    auto& band = bands_[static_cast<std::size_t>(subband)];
    const int clipped = static_cast<int>(std::min<std::int64_t>(
        duration, std::numeric_limits<int>::max()));

    if (config_.variant == Variant::original) {
        (kind == IntervalKind::busy ? band.sei_busy_log : band.sei_idle_log)
            .push_back(clipped);
        return;
    }

    auto& detector =
        kind == IntervalKind::busy ? band.busy_detector : band.idle_detector;
    const auto update = detector->observe(static_cast<double>(duration));
    if (observer_) {
        observer_(subband, kind, static_cast<double>(duration), update, *detector);
    }
    if (update.map_run_length < 2) {
        // A partition of fewer than two data has no usable variance; the
        // previous model stays in place until the run regrows.
        return;
    }

    std::optional<models::IntervalModel> model;
    if (config_.variant == Variant::cp_lognormal) {
        model = models::IntervalModel::lognormal(models::gaussian_to_lognormal(
            update.partition_mean, update.partition_variance));
    } else {
        const auto recent = detector->recent_observations(update.map_run_length);
        std::vector<int> durations;
        durations.reserve(recent.size());
        for (double value : recent) {
            durations.push_back(static_cast<int>(std::lround(value)));
        }
        model = models::IntervalModel::empirical(
            models::EmpiricalDistribution::from_samples(durations));
    }
    (kind == IntervalKind::busy ? band.busy_model : band.idle_model) = std::move(model);
}

void Engine::retrain_original() {
    // Tune the thresholds on the probabilities the finished SEI actually
    // produced (under the model that was live then); only pulses whose
    // target stayed inside the SEI have a known ground truth. The first
    // boundary sees an empty trace and keeps the defaults.
    std::vector<ThresholdSample> trace;
    const auto span = static_cast<std::int64_t>(sei_records_.front().size());
    for (const auto& records : sei_records_) {
        for (std::int64_t u = 0; u + config_.latency < span; ++u) {
            const auto& rec = records[static_cast<std::size_t>(u)];
            if (!rec.model_ready) {
                continue;
            }
            trace.push_back(
                {rec.probability, rec.busy != 0,
                 records[static_cast<std::size_t>(u + config_.latency)].busy != 0});
        }
    }
    if (!trace.empty()) {
        std::tie(theta_busy_, theta_idle_) = grid_search_thresholds(trace, config_.alpha);
    }

    for (auto& band : bands_) {
        if (const auto params = legacy_retrain(band.sei_busy_log)) {
            band.busy_model = models::IntervalModel::lognormal(*params);
        }
        if (const auto params = legacy_retrain(band.sei_idle_log)) {
            band.idle_model = models::IntervalModel::lognormal(*params);
        }
        band.sei_busy_log.clear();
        band.sei_idle_log.clear();
    }
    for (auto& records : sei_records_) {
        records.clear();
    }
}

double Engine::availability(const SubBandState& band) const {
    // The original algorithm reads the plain CDF at the latency horizon; the
    // changepoint variants condition on the elapsed time surviving so far.
    if (config_.variant == Variant::original) {
        const double horizon = static_cast<double>(band.elapsed) + config_.latency;
        return band.status_busy ? band.busy_model->cdf(horizon)
                                : 1.0 - band.idle_model->cdf(horizon);
    }
    return band.status_busy
               ? models::busy_availability(*band.busy_model,
                                           static_cast<double>(band.elapsed),
                                           config_.latency)
               : models::idle_availability(*band.idle_model,
                                           static_cast<double>(band.elapsed),
                                           config_.latency);
}

std::vector<Decision> Engine::step(std::span<const std::uint8_t> busy_flags) {
    if (busy_flags.size() != bands_.size()) {
        throw std::invalid_argument("Engine::step: one busy flag per sub-band expected");
    }

    if (config_.variant == Variant::original && pulse_ > 0 && pulse_ % config_.sei == 0) {
        retrain_original();
    }

    for (std::size_t i = 0; i < bands_.size(); ++i) {
        auto& band = bands_[i];
        const bool busy = busy_flags[i] != 0;
        if (pulse_ == 0) {
            band.status_busy = busy;
            band.elapsed = 1;
        } else if (busy == band.status_busy) {
            ++band.elapsed;
        } else {
            complete_interval(static_cast<int>(i),
                              band.status_busy ? IntervalKind::busy : IntervalKind::idle,
                              band.elapsed);
            band.status_busy = busy;
            band.elapsed = 1;
        }
    }

    std::vector<Decision> decisions(bands_.size());
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        const auto& band = bands_[i];
        auto& decision = decisions[i];
        decision.model_ready = band.model_ready();
        if (decision.model_ready) {
            decision.probability = availability(band);
            const double theta = band.status_busy ? theta_busy_ : theta_idle_;
            decision.available = decision.probability >= theta;
        }
        if (config_.variant == Variant::original) {
            sei_records_[i].push_back({static_cast<std::uint8_t>(band.status_busy ? 1 : 0),
                                       static_cast<std::uint8_t>(decision.model_ready ? 1 : 0),
                                       decision.probability});
        }
    }

    ++pulse_;
    return decisions;
}

}  // namespace specpredict::predictor
