#include <benchmark/benchmark.h>

#include "ebpois/experiments.hpp"
#include "ebpois/finite_diff.hpp"
#include "ebpois/moment_match.hpp"
#include "ebpois/npmle.hpp"
#include "ebpois/priors.hpp"

using namespace ebpois;

namespace {

const ResolvedPrior& heavy_tail() {
  static const ResolvedPrior r = resolve(parse_prior_spec("family=heavy_tail p=2"), 2.0);
  return r;
}

CountHistogram sample(std::int64_t n) {
  Rng rng = make_stream(1, {static_cast<std::uint64_t>(n)});
  std::vector<std::int64_t> ys(static_cast<std::size_t>(n));
  for (auto& y : ys) y = sample_poisson(rng, heavy_tail().sample(rng));
  return CountHistogram::from_observations(ys);
}

}  // namespace

static void BM_PmfTable(benchmark::State& state) {
  const auto& g = heavy_tail().discretization;
  for (auto _ : state) benchmark::DoNotOptimize(pmf_table(g, 1e-11));
}
BENCHMARK(BM_PmfTable)->Unit(benchmark::kMillisecond);

static void BM_FitNpmle(benchmark::State& state) {
  const auto h = sample(state.range(0));
  const auto grid = grid_spec(h, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fit_npmle(h, grid));
}
BENCHMARK(BM_FitNpmle)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_AkSequence(benchmark::State& state) {
  const DiscretePrior a({1.0, 7.0, 20.0}, {0.3, 0.3, 0.4});
  const DiscretePrior b({2.0, 9.0}, {0.5, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(ak_sequence(a, b, 1e-6, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_AkSequence)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_Charlier(benchmark::State& state) {
  std::int64_t y = 0;
  for (auto _ : state) benchmark::DoNotOptimize(charlier(static_cast<int>(state.range(0)), y++ % 50, 7.5));
}
BENCHMARK(BM_Charlier)->Arg(8)->Arg(30);

static void BM_LocalMomentMatch(benchmark::State& state) {
  const auto& g = heavy_tail().discretization;
  for (auto _ : state)
    benchmark::DoNotOptimize(local_moment_match(g, static_cast<double>(state.range(0)), 1e-3));
}
BENCHMARK(BM_LocalMomentMatch)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_RegretTrial(benchmark::State& state) {
  static const Truth truth = make_truth(heavy_tail());
  const auto method = resolve_method(parse_method("robbins-trunc"), state.range(0), 2.0, 1.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(individual_regret_trial(truth, state.range(0), method, seed++));
}
BENCHMARK(BM_RegretTrial)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
