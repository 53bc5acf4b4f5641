#include "specpredict/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specpredict::sim {

namespace {
constexpr double kMinMean = 2.0;
}

void EnvironmentSpec::validate() const {
    if (subbands.empty()) {
        throw std::invalid_argument("EnvironmentSpec: at least one sub-band required");
    }
    for (const auto& band : subbands) {
        if (!(band.busy.mean > 0.0) || !(band.idle.mean > 0.0)) {
            throw std::invalid_argument("EnvironmentSpec: distribution means must be > 0");
        }
        if (band.busy.stddev < 0.0 || band.idle.stddev < 0.0) {
            throw std::invalid_argument("EnvironmentSpec: stddev must be >= 0");
        }
    }
    if (changepoint_probability < 0.0 || changepoint_probability >= 1.0) {
        throw std::invalid_argument(
            "EnvironmentSpec: changepoint_probability must lie in [0, 1)");
    }
    if (magnitude.stddev < 0.0) {
        throw std::invalid_argument("EnvironmentSpec: magnitude.stddev must be >= 0");
    }
    if (pulses < 1) {
        throw std::invalid_argument("EnvironmentSpec: pulses must be >= 1");
    }
}

int draw_interval(const NormalSpec& dist, std::mt19937_64& rng) {
    double value = dist.mean;
    if (dist.stddev > 0.0) {
        value = std::normal_distribution<double>(dist.mean, dist.stddev)(rng);
    }
    const double rounded = std::round(value);
    return rounded < 1.0 ? 1 : static_cast<int>(rounded);
}

Environment::Environment(EnvironmentSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
    spec_.validate();
    bands_.reserve(spec_.subbands.size());
    for (const auto& sub : spec_.subbands) {
        Band band;
        band.busy = sub.busy;
        band.idle = sub.idle;
        band.is_busy = std::bernoulli_distribution(0.5)(rng_);
        band.remaining = draw_interval(band.is_busy ? band.busy : band.idle, rng_);
        bands_.push_back(band);
    }
}

void Environment::apply_changepoint(int subband) {
    auto& band = bands_[static_cast<std::size_t>(subband)];
    double magnitude = spec_.magnitude.mean;
    if (spec_.magnitude.stddev > 0.0) {
        magnitude = std::normal_distribution<double>(spec_.magnitude.mean,
                                                     spec_.magnitude.stddev)(rng_);
    }
    magnitude = std::abs(magnitude);
    const double busy_sign = std::bernoulli_distribution(0.5)(rng_) ? 1.0 : -1.0;
    const double idle_sign = std::bernoulli_distribution(0.5)(rng_) ? 1.0 : -1.0;
    band.busy.mean = std::max(kMinMean, band.busy.mean + busy_sign * magnitude);
    band.idle.mean = std::max(kMinMean, band.idle.mean + idle_sign * magnitude);
    log_.push_back({pulse_, subband, band.busy.mean, band.idle.mean});
}

std::vector<std::uint8_t> Environment::advance() {
    std::vector<std::uint8_t> flags(bands_.size(), 0);
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        auto& band = bands_[i];
        const bool trial_now = spec_.cadence == ChangepointCadence::per_pulse ||
                               band.remaining == 0;
        if (trial_now && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
                             spec_.changepoint_probability) {
            apply_changepoint(static_cast<int>(i));
        }
        if (band.remaining == 0) {
            band.is_busy = !band.is_busy;
            band.remaining = draw_interval(band.is_busy ? band.busy : band.idle, rng_);
        }
        --band.remaining;
        flags[i] = band.is_busy ? 1 : 0;
    }
    ++pulse_;
    return flags;
}

}  // namespace specpredict::sim
