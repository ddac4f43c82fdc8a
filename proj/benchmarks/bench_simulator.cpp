#include <benchmark/benchmark.h>

#include "polling/simulator.hpp"
#include "polling/study.hpp"

namespace {

void BM_Simulation(benchmark::State& state) {
    const auto config = polling::reference_heavy_traffic_config(state.range(0) / 100.0);
    polling::SimOptions options;
    options.served_target = 20000;
    options.warmup_fraction = 0.1;
    std::uint64_t seed = 1;
    for (auto _ : state) {
        options.seed = seed++;
        benchmark::DoNotOptimize(polling::run_simulation(config, options));
    }
    state.SetItemsProcessed(state.iterations() * options.served_target);
}
BENCHMARK(BM_Simulation)->Arg(50)->Arg(80)->Arg(99)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
