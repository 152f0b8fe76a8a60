#include <benchmark/benchmark.h>

#include "hlsim/boundary_layer.hpp"

using namespace hlsim;

namespace {

// A mid-run state so the kernel sees realistic positions and vorticity.
ParticleGrid sample_state(std::size_t n, double& D) {
  const InitialData init;
  ParticleGrid g = build_grid(init, n, n);
  GlobalQuantities gq;
  for (int i = 0; i < 20; ++i) {
    auto next = step(g, gq, init, 5e-3);
    g = std::move(next.grid);
    gq = next.gq;
  }
  D = gq.D;
  return g;
}

void BM_compute_J_serial(benchmark::State& state) {
  double D = 1.0;
  const ParticleGrid g = sample_state(static_cast<std::size_t>(state.range(0)), D);
  for (auto _ : state) benchmark::DoNotOptimize(compute_J_serial(g, D));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

void BM_compute_J_openmp(benchmark::State& state) {
  double D = 1.0;
  const ParticleGrid g = sample_state(static_cast<std::size_t>(state.range(0)), D);
  for (auto _ : state) benchmark::DoNotOptimize(compute_J(g, D));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

}  // namespace

BENCHMARK(BM_compute_J_serial)->Arg(128)->Arg(256)->Arg(512)->UseRealTime();
BENCHMARK(BM_compute_J_openmp)->Arg(128)->Arg(256)->Arg(512)->UseRealTime();

BENCHMARK_MAIN();
