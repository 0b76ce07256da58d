#include <needlets/filter_bank.hpp>
#include <needlets/harmonics.hpp>
#include <needlets/needlet_transform.hpp>
#include <needlets/random_field.hpp>
#include <needlets/sphere_geom.hpp>

#include <benchmark/benchmark.h>

using namespace needlets;

namespace {

const FilterProfile& profile() {
  static const FilterProfile p = build_profile(2.0);
  return p;
}

void BM_Synthesize(benchmark::State& state) {
  const int l_max = static_cast<int>(state.range(0));
  const auto alm = sample_alm(power_law_spectrum(3.0, 1.0, l_max), 1);
  const auto grid = build_grid(2 * l_max);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(alm, grid));
  state.counters["points"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_Synthesize)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Analyze(benchmark::State& state) {
  const int l_max = static_cast<int>(state.range(0));
  const auto grid = build_grid(2 * l_max);
  const auto field = synthesize(sample_alm(power_law_spectrum(3.0, 1.0, l_max), 2), grid);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(field, grid, l_max));
}
BENCHMARK(BM_Analyze)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_NeedletCoeffs(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  const auto alm = sample_alm(power_law_spectrum(3.0, 1.0, window_top_degree(profile(), j)), 3);
  const auto grid = grid_for_scale(j, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(needlet_coeffs(alm, profile(), j, grid));
  state.counters["points"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_NeedletCoeffs)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

void BM_GammaPowerSums(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  const auto spectrum = power_law_spectrum(3.0, 1.0, window_top_degree(profile(), j));
  const auto grid = grid_for_scale(j, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(gamma_power_sums(spectrum, profile(), j, grid, 4));
}
BENCHMARK(BM_GammaPowerSums)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
