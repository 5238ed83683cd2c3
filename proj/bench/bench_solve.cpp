// Serial reference against the OpenMP kernel over ci0 in [35, 70] Pa.

#include <benchmark/benchmark.h>

#include "ftrans/bench_kernel.hpp"

namespace {

using namespace ftrans::leaf;

void BM_SolveSerial(benchmark::State& state) {
  auto ci0 = linspace(35.0, 70.0, static_cast<std::size_t>(state.range(0)));
  PhotoParams p;
  for (auto _ : state) {
    auto r = solve_batch_serial(p, ci0);
    benchmark::DoNotOptimize(r.ci.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SolveParallel(benchmark::State& state) {
  auto ci0 = linspace(35.0, 70.0, static_cast<std::size_t>(state.range(0)));
  PhotoParams p;
  for (auto _ : state) {
    auto r = solve_batch_parallel(p, ci0, static_cast<int>(state.range(1)));
    benchmark::DoNotOptimize(r.ci.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SolveSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveParallel)
    ->Args({1000, 0})
    ->Args({10000, 0})
    ->Args({10000, 1})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
