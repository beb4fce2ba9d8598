// Benchmarks for the gaSSA cost/gradient kernels and a small end-to-end fit.

#include <benchmark/benchmark.h>

#include <vector>

#include "gassa/datagen.hpp"
#include "gassa/gassa.hpp"
#include "gassa/manifold.hpp"
#include "gassa/random.hpp"
#include "gassa/spd.hpp"
#include "gassa/ssa.hpp"

namespace {

using gassa::spd::MetricKind;
using gassa::spd::SymPosDef;

struct Problem {
  std::vector<SymPosDef> covs;
  SymPosDef anchor = SymPosDef::identity(1);
  Eigen::MatrixXd q;
};

Problem paper_scale_problem(MetricKind metric) {
  Problem p;
  p.covs.reserve(50);
  for (int i = 0; i < 50; ++i)
    p.covs.push_back(gassa::datagen::gen_random_spd(
        19, gassa::derive_seed(3, static_cast<std::uint64_t>(i))));
  p.anchor = gassa::spd::mean(metric, p.covs);
  p.q = gassa::manifold::random_subspace(19, 12, 123).basis();
  return p;
}

void BM_GassaCostAirm(benchmark::State& state) {
  Problem p = paper_scale_problem(MetricKind::kAirm);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gassa::cost(p.q, p.covs, p.anchor, MetricKind::kAirm));
}
BENCHMARK(BM_GassaCostAirm);

void BM_GassaCostStein(benchmark::State& state) {
  Problem p = paper_scale_problem(MetricKind::kStein);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gassa::cost(p.q, p.covs, p.anchor, MetricKind::kStein));
}
BENCHMARK(BM_GassaCostStein);

void BM_GassaEgradAirm(benchmark::State& state) {
  Problem p = paper_scale_problem(MetricKind::kAirm);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gassa::euclidean_gradient(p.q, p.covs, p.anchor, MetricKind::kAirm));
}
BENCHMARK(BM_GassaEgradAirm);

void BM_GassaEgradStein(benchmark::State& state) {
  Problem p = paper_scale_problem(MetricKind::kStein);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        gassa::euclidean_gradient(p.q, p.covs, p.anchor, MetricKind::kStein));
}
BENCHMARK(BM_GassaEgradStein);

void BM_GassaFitSmall(benchmark::State& state) {
  gassa::datagen::GenScales scales;
  scales.orthogonal_mixing = true;
  scales.c_scale = 0.0;
  gassa::datagen::MixingModel model =
      gassa::datagen::make_model(6, 3, 10, 100, 5, scales);
  std::vector<SymPosDef> covs;
  for (int i = 0; i < model.epochs; ++i)
    covs.push_back(gassa::datagen::mixed_cov(model, i));
  gassa::GassaConfig config;
  config.m = 3;
  config.restarts = 1;
  config.seed = 9;
  for (auto _ : state)
    benchmark::DoNotOptimize(gassa::fit(covs, config));
}
BENCHMARK(BM_GassaFitSmall);

}  // namespace
