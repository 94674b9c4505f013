#include <benchmark/benchmark.h>

#include "dalab/conditions.hpp"
#include "dalab/cones.hpp"
#include "dalab/hyperbolicity.hpp"
#include "dalab/manifolds.hpp"
#include "dalab/measures.hpp"
#include "dalab/scenarios.hpp"

using namespace dalab;

namespace {

const DeformedMap& deformed() {
  static const DeformedMap m = build_example(4, 0.05, 0.1, {0.066});
  return m;
}

TorusPoint inside_point() {
  const auto& s = deformed().sites()[1];
  return wrap(Vec(s.center.coords() + 0.75 * s.radius * s.plane.col(0)));
}

}  // namespace

static void BM_ApplyOutside(benchmark::State& st) {
  TorusPoint x = wrap({0.123, 0.456, 0.789, 0.321});
  for (auto _ : st) {
    x = deformed().apply(x);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_ApplyOutside);

static void BM_ApplyWithJacobianInside(benchmark::State& st) {
  const TorusPoint x = inside_point();
  Mat j;
  for (auto _ : st) benchmark::DoNotOptimize(deformed().apply(x, j));
}
BENCHMARK(BM_ApplyWithJacobianInside);

static void BM_InverseInside(benchmark::State& st) {
  const TorusPoint x = inside_point();
  for (auto _ : st) benchmark::DoNotOptimize(deformed().apply_inverse(x));
}
BENCHMARK(BM_InverseInside);

static void BM_Splitting(benchmark::State& st) {
  const TorusPoint x = inside_point();
  for (auto _ : st) benchmark::DoNotOptimize(estimate_invariant_splitting(deformed(), x, 30));
}
BENCHMARK(BM_Splitting);

static void BM_LyapunovSpectrum(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(lyapunov_spectrum(deformed(), wrap({0.1, 0.2, 0.3, 0.4}), st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_LyapunovSpectrum)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_OrbitStats(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(orbit_stats(deformed(), wrap({0.1, 0.2, 0.3, 0.4}), st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_OrbitStats)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_ConditionSamples(benchmark::State& st) {
  ConditionOptions o;
  o.samples = static_cast<int>(st.range(0));
  o.boundary_samples = 100;
  for (auto _ : st) benchmark::DoNotOptimize(verify_map_conditions(deformed(), o));
}
BENCHMARK(BM_ConditionSamples)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_LocalStableManifold(benchmark::State& st) {
  const TorusPoint x = inside_point();
  for (auto _ : st) benchmark::DoNotOptimize(local_stable_manifold(deformed(), x, 0.01, 12));
}
BENCHMARK(BM_LocalStableManifold)->Unit(benchmark::kMillisecond);

static void BM_Pushforward(benchmark::State& st) {
  const CuDisk d = make_cu_disk(MapView::forward(deformed()), inside_point(), 0.02);
  const ObservableSet obs = ObservableSet::standard(deformed(), 8);
  for (auto _ : st) benchmark::DoNotOptimize(pushforward_average(deformed(), d, 100, 100, 1, obs));
  st.SetItemsProcessed(st.iterations() * 100 * 100);
}
BENCHMARK(BM_Pushforward)->Unit(benchmark::kMillisecond);

static void BM_HolonomyPatch(benchmark::State& st) {
  const HolonomySetup s = holonomy_setup(deformed());
  const auto params = grid_source(s.source, 0.004);
  for (auto _ : st) benchmark::DoNotOptimize(stable_holonomy(deformed(), s.source, params, s.target));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(params.size()));
}
BENCHMARK(BM_HolonomyPatch)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
