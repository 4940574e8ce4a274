#include <benchmark/benchmark.h>

#include "qpr/bounds.hpp"
#include "qpr/designs.hpp"
#include "qpr/estimate.hpp"
#include "qpr/forward.hpp"
#include "qpr/multiscale.hpp"
#include "qpr/rng.hpp"

using namespace qpr;

static void BM_Intensities(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto design = random_group_design(n, 5, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(intensities(design, x));
  state.SetItemsProcessed(state.iterations() * design.m_rows());
}
BENCHMARK(BM_Intensities)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_LossAndGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto design = random_group_design(n, 5, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  const auto counts = sample_counts(intensities(design, x), 3).counts_as_real();
  const auto probe = random_field(n, 1e4, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        loss_and_gradient(design, counts, probe, LossKind::kPoissonNll));
}
BENCHMARK(BM_LossAndGradient)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_Reconstruct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto design = random_group_design(n, 5, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  const auto counts = sample_counts(intensities(design, x), 3).counts_as_real();
  OptimizerConfig cfg;
  cfg.max_iters = 200;
  cfg.restarts = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(reconstruct(design, counts, cfg, 5));
}
BENCHMARK(BM_Reconstruct)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Fisher(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto design = random_group_design(n, 5, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fisher(design, x));
}
BENCHMARK(BM_Fisher)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SampleCounts(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto design = random_group_design(n, 5, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  const RVec intens = intensities(design, x);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_counts(intens, ++seed));
  state.SetItemsProcessed(state.iterations() * intens.size());
}
BENCHMARK(BM_SampleCounts)->Arg(1024)->Arg(4096);

static void BM_Stitch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto plan = build_plan(n, 5, 1);
  const auto x = random_field(n, 1e4, 2);
  std::vector<ComplexField> blocks(plan.n_blocks);
  const double amp = std::sqrt(plan.intra_energy_fraction());
  for (int b = 0; b < plan.n_blocks; ++b)
    blocks[b].values =
        amp * x.values.segment(plan.block_begin(b), plan.block_size);
  ComplexField scaled;
  scaled.values = std::sqrt(plan.level_energy_fraction()) * x.values;
  std::vector<RVec> counts;
  for (const auto& d : plan.cross_designs)
    counts.push_back(intensities(d, scaled));
  for (auto _ : state)
    benchmark::DoNotOptimize(stitch(plan, blocks, counts));
}
BENCHMARK(BM_Stitch)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
