#include "stratflow/diagnostics.hpp"
#include "stratflow/geometry.hpp"
#include "stratflow/methods.hpp"
#include "stratflow/minnorm.hpp"
#include "stratflow/objectives.hpp"
#include "stratflow/reductions.hpp"
#include "stratflow/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace stratflow;

std::vector<Vec> random_walk(std::size_t n, Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed, Stream::noise);
  std::vector<Vec> out;
  Vec x = Vec::Zero(dim);
  for (std::size_t k = 0; k < n; ++k) {
    x += rng.normal_vec(dim) / static_cast<double>(k + 1);
    out.push_back(x);
  }
  return out;
}

void BM_Diameter(benchmark::State& state) {
  const auto pts = random_walk(static_cast<std::size_t>(state.range(0)), 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(diameter(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Diameter)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();

void BM_TailDiameters(benchmark::State& state) {
  auto pts = random_walk(static_cast<std::size_t>(state.range(0)), 2, 2);
  for (auto _ : state) {
    FarthestTree tree(pts);
    RunningDiameter running(tree, pts, 0);
    for (std::size_t k = 1; k < pts.size(); ++k) running.advance();
    benchmark::DoNotOptimize(running.value());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TailDiameters)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();

void BM_MinNormPoint(benchmark::State& state) {
  Rng rng(3, Stream::diagnostics);
  std::vector<Vec> gens;
  for (int i = 0; i < state.range(0); ++i) gens.push_back(rng.normal_vec(3) + Vec::Constant(3, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(min_norm_point(gens).distance);
}
BENCHMARK(BM_MinNormPoint)->Arg(4)->Arg(16)->Arg(64);

void BM_InexactRun(benchmark::State& state) {
  const auto f = find_function("ridge");
  InexactConfig cfg;
  const auto K = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(inexact_run(f, make_vec({0.8, 0.6}), StepSchedule::harmonic(1.0, 20), cfg, K, 1).x.back());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InexactRun)->Arg(10000)->Arg(100000);

void BM_CriterionResidual(benchmark::State& state) {
  const auto pts = random_walk(static_cast<std::size_t>(state.range(0)), 2, 4);
  const Potential zero = [](const Vec&) { return 0.0; };
  for (auto _ : state) benchmark::DoNotOptimize(criterion_residual(pts, zero, 1).max_tail);
}
BENCHMARK(BM_CriterionResidual)->Arg(10000)->Arg(100000);

void BM_WindowIndices(benchmark::State& state) {
  const auto s = StepSchedule::harmonic();
  const auto T = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(window_indices(s, 0.5, T).s.back());
}
BENCHMARK(BM_WindowIndices)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
