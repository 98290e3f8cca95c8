#include <benchmark/benchmark.h>

#include "nvqhl/config.hpp"
#include "nvqhl/pipeline.hpp"

using namespace nvqhl;

namespace {

struct Fixture {
  ExperimentConfig cfg;
  WindowModel model;
  LocalParticleSet local;
  GlobalParticleSet global;
  std::vector<CandidateSpec> candidates;

  explicit Fixture(int m)
      : cfg([m] {
          ExperimentConfig c = desk_config();
          c.window_size = m;
          c.n_local = 32;
          c.n_global = 16;
          return c;
        }()),
        model(cfg.window_config(draw_strain(cfg))),
        local(initial_local_set(cfg, 0)),
        global(initial_global_set(cfg)) {
    candidates = candidate_set(cfg, Phase::B, m);
    const auto j = candidate_set(cfg, Phase::J, m);
    candidates.insert(candidates.end(), j.begin(), j.end());
  }
};

void BM_TablesReference(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(probability_tables_reference(f.model, f.local.particles, f.global.particles, f.candidates));
  state.SetItemsProcessed(state.iterations() * f.local.size() * f.global.size());
}

void BM_TablesParallel(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  apply_thread_setting();
  for (auto _ : state)
    benchmark::DoNotOptimize(probability_tables(f.model, f.local.particles, f.global.particles, f.candidates));
  state.SetItemsProcessed(state.iterations() * f.local.size() * f.global.size());
}

}  // namespace

BENCHMARK(BM_TablesReference)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TablesParallel)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
