#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "specpredict/bocd.hpp"
#include "specpredict/experiment.hpp"
#include "specpredict/interval_models.hpp"
#include "specpredict/predictor.hpp"
#include "specpredict/simulator.hpp"

namespace {

using namespace specpredict;

std::vector<double> stationary_durations(std::size_t count) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(150.0, 4.0);
    std::vector<double> durations(count);
    for (auto& d : durations) {
        d = std::max(1.0, std::round(noise(rng)));
    }
    return durations;
}

void BM_DetectorObserve(benchmark::State& state) {
    const auto durations = stationary_durations(4096);
    bocd::BocdConfig config;
    config.max_run_length = static_cast<int>(state.range(0));
    config.sensitivity = 60.0;
    std::size_t i = 0;
    bocd::Detector detector(config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(detector.observe(durations[i++ & 4095]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DetectorObserve)->Arg(30)->Arg(60)->Arg(120);

void BM_EngineStep(benchmark::State& state) {
    sim::EnvironmentSpec spec;
    spec.subbands = {{{150.0, 4.0}, {150.0, 4.0}}};
    spec.pulses = 1 << 16;
    spec.seed = 1;
    sim::Environment env(spec);
    std::vector<std::vector<std::uint8_t>> flags;
    flags.reserve(1 << 16);
    for (int t = 0; t < (1 << 16); ++t) {
        flags.push_back(env.advance());
    }
    predictor::PredictorConfig config;
    config.variant = state.range(0) == 0 ? predictor::Variant::original
                                         : predictor::Variant::cp_lognormal;
    predictor::Engine engine(config, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.step(flags[i++ & ((1 << 16) - 1)]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EngineStep)->Arg(0)->Arg(1);

void BM_EnvironmentAdvance(benchmark::State& state) {
    sim::EnvironmentSpec spec;
    spec.subbands.assign(static_cast<std::size_t>(state.range(0)),
                         {{150.0, 4.0}, {150.0, 4.0}});
    spec.changepoint_probability = 0.03;
    spec.cadence = sim::ChangepointCadence::per_interval;
    spec.pulses = 1 << 30;
    spec.seed = 7;
    sim::Environment env(spec);
    for (auto _ : state) {
        benchmark::DoNotOptimize(env.advance());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnvironmentAdvance)->Arg(1)->Arg(8);

void BM_BusyAvailability(benchmark::State& state) {
    const auto model =
        models::IntervalModel::lognormal(models::gaussian_to_lognormal(150.0, 16.0));
    double elapsed = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(models::busy_availability(model, elapsed, 5.0));
        elapsed = elapsed >= 300.0 ? 1.0 : elapsed + 1.0;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BusyAvailability);

void BM_GridSearch(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    std::vector<predictor::ThresholdSample> trace;
    for (int i = 0; i < 5000; ++i) {
        trace.push_back({prob(rng), prob(rng) < 0.5, prob(rng) < 0.5});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(predictor::grid_search_thresholds(trace, 0.5));
    }
}
BENCHMARK(BM_GridSearch);

}  // namespace

BENCHMARK_MAIN();
