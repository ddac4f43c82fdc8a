#include <benchmark/benchmark.h>

#include "polling/study.hpp"
#include "polling/transforms.hpp"

namespace {

polling::TransformEngine make_engine(double rho) {
    return polling::TransformEngine(polling::reference_heavy_traffic_config(rho));
}

void BM_BusyPeriodFixpoint(benchmark::State& state) {
    const auto engine = make_engine(0.8);
    double s = 0.05;
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.busy_period(polling::QueueId::Q1, s));
        s = s < 2.0 ? s + 0.01 : 0.05;
    }
}
BENCHMARK(BM_BusyPeriodFixpoint);

void BM_PollingEpochPgf(benchmark::State& state) {
    const auto engine = make_engine(state.range(0) / 100.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.polling_epoch_pgf(polling::QueueId::Q1, 0.5, 0.7));
    }
}
BENCHMARK(BM_PollingEpochPgf)->Arg(50)->Arg(80)->Arg(95);

void BM_DsaG1(benchmark::State& state) {
    const auto engine = make_engine(state.range(0) / 100.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.dsa_g1(0.4));
    }
}
BENCHMARK(BM_DsaG1)->Arg(50)->Arg(80)->Arg(95);

void BM_WaitingTimeMean(benchmark::State& state) {
    const auto engine = make_engine(0.8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.mean_waiting_time(polling::CustomerClass::Low));
    }
}
BENCHMARK(BM_WaitingTimeMean);

}  // namespace

BENCHMARK_MAIN();
