// Microbenchmarks for the SPD geometry kernels at paper scale (D = 19).

#include <benchmark/benchmark.h>

#include <vector>

#include "gassa/datagen.hpp"
#include "gassa/random.hpp"
#include "gassa/spd.hpp"

namespace {

using gassa::spd::MetricKind;
using gassa::spd::SymPosDef;

std::vector<SymPosDef> random_set(int n, int dim, std::uint64_t seed) {
  std::vector<SymPosDef> covs;
  covs.reserve(n);
  for (int i = 0; i < n; ++i)
    covs.push_back(gassa::datagen::gen_random_spd(
        dim, gassa::derive_seed(seed, static_cast<std::uint64_t>(i))));
  return covs;
}

void BM_AirmDist2(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  auto covs = random_set(2, dim, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(gassa::spd::airm_dist2(covs[0], covs[1]));
}
BENCHMARK(BM_AirmDist2)->Arg(6)->Arg(19);

void BM_SteinDiv(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  auto covs = random_set(2, dim, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(gassa::spd::stein_div(covs[0], covs[1]));
}
BENCHMARK(BM_SteinDiv)->Arg(6)->Arg(19);

void BM_KarcherMean(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto covs = random_set(n, 19, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(gassa::spd::karcher_mean(covs));
}
BENCHMARK(BM_KarcherMean)->Arg(10)->Arg(50);

void BM_SteinMean(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto covs = random_set(n, 19, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(gassa::spd::stein_mean(covs));
}
BENCHMARK(BM_SteinMean)->Arg(10)->Arg(50);

void BM_WhitenSet(benchmark::State& state) {
  auto covs = random_set(50, 19, 13);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gassa::spd::whiten_set(covs, MetricKind::kAirm));
}
BENCHMARK(BM_WhitenSet);

}  // namespace
