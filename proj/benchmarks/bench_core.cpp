#include "mfg/discrepancy.hpp"
#include "mfg/dynamics.hpp"
#include "mfg/environments.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/rng.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace mfg;

namespace {

// Experiment-scale linear class, shared by all benchmarks.
const ModelClass& linear_class(int models) {
  static std::map<int, ModelClass> cache;
  auto it = cache.find(models);
  if (it == cache.end()) {
    LinearSpec spec;
    spec.models = models;
    spec.seed = 1;
    it = cache.emplace(models, gen_linear_class(spec)).first;
  }
  return it->second;
}

void BM_FreezeAlong(benchmark::State& state) {
  const ModelClass& models = linear_class(4);
  Rng rng(1);
  const Policy ref = random_policy(models.shape(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(freeze_along(models[0], ref));
}
BENCHMARK(BM_FreezeAlong)->Unit(benchmark::kMicrosecond);

void BM_Optimize(benchmark::State& state) {
  const ModelClass& models = linear_class(4);
  Rng rng(2);
  const FrozenDynamics dyn = freeze_along(models[0], random_policy(models.shape(), rng));
  for (auto _ : state) benchmark::DoNotOptimize(optimize(dyn));
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMicrosecond);

void BM_DiscrepancyTable(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ModelClass& models = linear_class(k);
  Rng rng(3);
  const Policy ref = random_policy(models.shape(), rng);
  std::vector<Policy> candidates{ref};
  for (int i = 0; i < 4; ++i) candidates.push_back(random_policy(models.shape(), rng));
  for (auto _ : state) {
    const ConditionedClass cc(models, ref);
    const DiscrepancyTable table(cc, all_indices(k), candidates);
    benchmark::DoNotOptimize(table.max_over(all_indices(k)));
  }
}
BENCHMARK(BM_DiscrepancyTable)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SolveNe(benchmark::State& state) {
  const ModelClass& models = linear_class(4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ne(models[0], NESolveConfig{}));
}
BENCHMARK(BM_SolveNe)->Unit(benchmark::kMillisecond);

void BM_TabularNeSmall(benchmark::State& state) {
  const ModelClass models = gen_tabular_class(3, 5, 4, 1, 0.8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ne(models[0], NESolveConfig{0.05, 1e-4, 5000}));
}
BENCHMARK(BM_TabularNeSmall)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
