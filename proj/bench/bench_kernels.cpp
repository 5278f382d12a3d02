#include <string>
#include <thread>

#include <benchmark/benchmark.h>

#include "brw/engine.hpp"
#include "brw/grid.hpp"
#include "brw/scheme.hpp"

namespace {

int max_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void BM_GridSweepSerial(benchmark::State& state) {
  brw::GridSolver solver(brw::presets::binary_pm1_tabulated(), static_cast<int>(state.range(0)), 0.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(solver.sweep_serial());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GridSweepParallel(benchmark::State& state) {
  brw::GridSolver solver(brw::presets::binary_pm1_tabulated(), static_cast<int>(state.range(0)), 0.0,
                         max_workers());
  for (auto _ : state) benchmark::DoNotOptimize(solver.sweep_parallel());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TailMonteCarlo(benchmark::State& state) {
  const int workers = state.range(0) == 0 ? 1 : max_workers();
  const auto spec = brw::presets::binary_pm1();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto est = brw::estimate_tail(spec, {5.0, 10.0}, 20000, brw::SimCaps{}, seed++, workers);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(workers));
}

}  // namespace

BENCHMARK(BM_GridSweepSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_GridSweepParallel)->Arg(1000)->Arg(20000);
BENCHMARK(BM_TailMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
