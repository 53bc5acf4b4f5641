#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace specpredict::testsupport {

struct PiecewiseStream {
    std::vector<double> data;
    std::vector<int> changepoints;  // index of the first observation of each new segment
};

// Piecewise-constant stream of positive integer durations: segment means
// separated by at least `separation`, observation noise `sigma`.
inline PiecewiseStream make_piecewise_stream(std::mt19937_64& rng, int segments,
                                             int min_len, int max_len,
                                             double separation, double sigma) {
    PiecewiseStream stream;
    std::uniform_int_distribution<int> seg_len(min_len, max_len);
    std::uniform_real_distribution<double> extra(0.0, 0.5 * separation);
    std::normal_distribution<double> noise(0.0, sigma);
    double mean = 60.0;
    for (int s = 0; s < segments; ++s) {
        if (s > 0) {
            stream.changepoints.push_back(static_cast<int>(stream.data.size()));
        }
        const int len = seg_len(rng);
        for (int i = 0; i < len; ++i) {
            stream.data.push_back(std::max(1.0, std::round(mean + noise(rng))));
        }
        const double step = separation + extra(rng);
        if (mean - step >= separation / 2.0 &&
            std::bernoulli_distribution(0.5)(rng)) {
            mean -= step;
        } else {
            mean += step;
        }
    }
    return stream;
}

}  // namespace specpredict::testsupport
