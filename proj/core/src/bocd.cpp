#include "specpredict/bocd.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace specpredict::bocd {

namespace {

constexpr double kTwoPi = 6.2831853071795864769;

double normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(kTwoPi * variance);
}

}  // namespace

void BocdConfig::validate() const {
    if (max_run_length < 2) {
        throw std::invalid_argument("BocdConfig: max_run_length must be >= 2");
    }
    if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
        throw std::invalid_argument("BocdConfig: sensitivity must be > 0");
    }
    if (run_length_prune_threshold < 0.0 || run_length_prune_threshold > 0.1) {
        throw std::invalid_argument(
            "BocdConfig: run_length_prune_threshold must lie in [0, 0.1]");
    }
    if (changepoint_count_prune_threshold < 0.0 ||
        changepoint_count_prune_threshold > 0.1) {
        throw std::invalid_argument(
            "BocdConfig: changepoint_count_prune_threshold must lie in [0, 0.1]");
    }
    if (!(variance_floor > 0.0)) {
        throw std::invalid_argument("BocdConfig: variance_floor must be > 0");
    }
}

double predictive_likelihood(const PartitionStats& stats, double x, double variance_floor) {
    if (stats.count < 2) {
        throw std::logic_error(
            "predictive_likelihood: partition must hold at least two data");
    }
    const double variance = std::max(stats.variance(), variance_floor);
    return normal_pdf(x, stats.mean(), variance);
}

int map_run_length(std::span<const double> posterior) {
    if (posterior.empty()) {
        throw std::invalid_argument("map_run_length: empty posterior");
    }
    int best = 0;
    for (int r = 1; r < static_cast<int>(posterior.size()); ++r) {
        if (posterior[static_cast<std::size_t>(r)] >=
            posterior[static_cast<std::size_t>(best)]) {
            best = r;
        }
    }
    return best;
}

void truncate_and_prune(std::vector<double>& posterior, int max_run_length,
                        double prune_threshold) {
    const auto cap = static_cast<std::size_t>(max_run_length);
    if (posterior.size() > cap + 1) {
        for (std::size_t r = cap + 1; r < posterior.size(); ++r) {
            posterior[cap] += posterior[r];
        }
        posterior.resize(cap + 1);
    }

    double total = 0.0;
    for (double p : posterior) {
        total += p;
    }
    assert(total > 0.0);
    for (double& p : posterior) {
        p /= total;
    }

    if (prune_threshold > 0.0) {
        const int mode = map_run_length(posterior);
        bool pruned = false;
        for (int r = std::max(mode + 1, 2); r < static_cast<int>(posterior.size()); ++r) {
            auto& p = posterior[static_cast<std::size_t>(r)];
            if (p > 0.0 && p < prune_threshold) {
                p = 0.0;
                pruned = true;
            }
        }
        if (pruned) {
            total = 0.0;
            for (double p : posterior) {
                total += p;
            }
            for (double& p : posterior) {
                p /= total;
            }
        }
    }
}

double JointPosterior::hazard_estimate() const {
    double estimate = 0.0;
    const double denom = static_cast<double>(time_) + 2.0;
    for (const auto& [a, column] : columns_) {
        double mass = 0.0;
        for (double p : column) {
            mass += p;
        }
        estimate += mass * (static_cast<double>(a) + 1.0) / denom;
    }
    return estimate;
}

double JointPosterior::total_mass() const {
    double total = 0.0;
    for (const auto& [a, column] : columns_) {
        for (double p : column) {
            total += p;
        }
    }
    return total;
}

std::vector<JointPosterior::Entry> JointPosterior::entries() const {
    std::vector<Entry> out;
    for (const auto& [a, column] : columns_) {
        for (int r = 0; r < static_cast<int>(column.size()); ++r) {
            const double p = column[static_cast<std::size_t>(r)];
            if (p > 0.0) {
                out.push_back({r, a, p});
            }
        }
    }
    return out;
}

Detector::Detector(BocdConfig config) : config_(config) {
    config_.validate();
    posterior_.assign(static_cast<std::size_t>(config_.max_run_length) + 1, 0.0);
    posterior_[0] = 1.0;
    joint_.columns_[0] =
        std::vector<double>(static_cast<std::size_t>(config_.max_run_length) + 1, 0.0);
    joint_.columns_[0][0] = 1.0;
}

int Detector::map_run_length() const {
    return bocd::map_run_length(posterior_);
}

PartitionStats Detector::partition_stats(int run_length) const {
    const int available = std::min(observations_, config_.max_run_length);
    if (run_length < 1 || run_length > available) {
        throw std::invalid_argument("Detector: run length outside stored window");
    }
    PartitionStats stats;
    for (std::size_t i = window_.size() - static_cast<std::size_t>(run_length);
         i < window_.size(); ++i) {
        stats.add(window_[i]);
    }
    return stats;
}

std::vector<double> Detector::recent_observations(int count) const {
    const int available = std::min(observations_, config_.max_run_length);
    if (count < 0 || count > available) {
        throw std::invalid_argument("Detector: count outside stored window");
    }
    return {window_.end() - count, window_.end()};
}

double Detector::predictive_for_source(int source_run, double x) const {
    PartitionStats stats;
    if (source_run == 1) {
        // One-datum run: its variance is scaled to the first two data of the
        // partition the new observation would extend.
        stats.add(window_.back());
        stats.add(x);
    } else {
        const auto len = static_cast<std::size_t>(
            std::min(source_run, static_cast<int>(window_.size())));
        for (std::size_t i = window_.size() - len; i < window_.size(); ++i) {
            stats.add(window_[i]);
        }
    }
    return predictive_likelihood(stats, x, config_.variance_floor);
}

DetectorUpdate Detector::observe(double x) {
    if (!std::isfinite(x) || x <= 0.0) {
        throw std::invalid_argument("Detector::observe: duration must be finite and > 0");
    }

    const int cap = config_.max_run_length;
    const double gamma = config_.sensitivity;
    const double hazard = joint_.hazard_estimate();

    // Predictive density per predecessor run length, shared by both updates.
    const int max_source = std::min(observations_, cap);
    std::vector<double> predictive(static_cast<std::size_t>(cap) + 1, 0.0);
    for (int j = 1; j <= max_source; ++j) {
        predictive[static_cast<std::size_t>(j)] = predictive_for_source(j, x);
    }

    // Run-length posterior: the three-case recursion.
    std::vector<double> raw(static_cast<std::size_t>(cap) + 2, 0.0);
    raw[1] = posterior_[0];
    double changepoint_mass = 0.0;
    for (int j = 1; j <= cap; ++j) {
        const double prev = posterior_[static_cast<std::size_t>(j)];
        if (prev == 0.0) {
            continue;
        }
        const double pi = predictive[static_cast<std::size_t>(j)];
        raw[static_cast<std::size_t>(j) + 1] += (1.0 - hazard) * pi * gamma * prev;
        changepoint_mass += pi * prev;
    }
    raw[0] = hazard * changepoint_mass;
    truncate_and_prune(raw, cap, config_.run_length_prune_threshold);
    posterior_ = std::move(raw);

    // Joint posterior: same structure with per-pair transition probabilities.
    const double pair_denom = static_cast<double>(joint_.time_) + 2.0;
    std::map<int, std::vector<double>> next;
    auto column_at = [&](int a) -> std::vector<double>& {
        auto [it, inserted] = next.try_emplace(a);
        if (inserted) {
            it->second.assign(static_cast<std::size_t>(cap) + 1, 0.0);
        }
        return it->second;
    };
    for (const auto& [a, column] : joint_.columns_) {
        const double pair_hazard = (static_cast<double>(a) + 1.0) / pair_denom;
        for (int r = 0; r <= cap; ++r) {
            const double prev = column[static_cast<std::size_t>(r)];
            if (prev == 0.0) {
                continue;
            }
            if (r == 0) {
                column_at(a)[1] += prev;
                continue;
            }
            const double pi = predictive[static_cast<std::size_t>(r)];
            const int grown = std::min(r + 1, cap);
            column_at(a + 1)[0] += pair_hazard * pi * prev;
            column_at(a)[static_cast<std::size_t>(grown)] +=
                (1.0 - pair_hazard) * pi * gamma * prev;
        }
    }

    double joint_total = 0.0;
    for (auto& [a, column] : next) {
        for (double p : column) {
            joint_total += p;
        }
    }
    assert(joint_total > 0.0);
    for (auto& [a, column] : next) {
        for (double& p : column) {
            p /= joint_total;
        }
    }

    // theta_a prune: drop low-mass columns at either end of the count axis.
    const double theta_a = config_.changepoint_count_prune_threshold;
    if (theta_a > 0.0 && next.size() > 1) {
        auto column_mass = [](const std::vector<double>& column) {
            double mass = 0.0;
            for (double p : column) {
                mass += p;
            }
            return mass;
        };
        while (next.size() > 1 && column_mass(next.begin()->second) < theta_a) {
            next.erase(next.begin());
        }
        while (next.size() > 1 && column_mass(std::prev(next.end())->second) < theta_a) {
            next.erase(std::prev(next.end()));
        }
        joint_total = 0.0;
        for (auto& [a, column] : next) {
            for (double p : column) {
                joint_total += p;
            }
        }
        for (auto& [a, column] : next) {
            for (double& p : column) {
                p /= joint_total;
            }
        }
    }

    joint_.columns_ = std::move(next);
    joint_.time_ += 1;

    ++observations_;
    window_.push_back(x);
    if (window_.size() > static_cast<std::size_t>(cap) + 1) {
        window_.erase(window_.begin());
    }

#ifndef NDEBUG
    {
        double total = 0.0;
        for (double p : posterior_) {
            total += p;
        }
        assert(std::abs(total - 1.0) <= 1e-9);
        assert(std::abs(joint_.total_mass() - 1.0) <= 1e-9);
    }
#endif

    DetectorUpdate update;
    update.map_run_length = map_run_length();
    if (update.map_run_length >= 1) {
        const auto stats = partition_stats(
            std::min(update.map_run_length, std::min(observations_, cap)));
        update.partition_mean = stats.mean();
        update.partition_variance = std::max(stats.variance(), config_.variance_floor);
    } else {
        update.partition_variance = config_.variance_floor;
    }
    update.hazard_estimate = joint_.hazard_estimate();
    update.changepoint_probability = posterior_[0];
    return update;
}

}  // namespace specpredict::bocd
