#include <benchmark/benchmark.h>

#include "forgevqe/forge.hpp"

using namespace fvqe;

static void BM_EdefIteration(benchmark::State& state) {
  auto model = build_fh({4, 1.0, 1.0, 1.0});
  EngineOptions opt;
  opt.cuts = int(state.range(0));
  opt.max_iterations = 1000000;  // never the binding stop inside the loop body
  for (auto _ : state) {
    state.PauseTiming();
    Engine engine(model, fh_sector(2, 2), opt);
    state.ResumeTiming();
    engine.step();
    benchmark::DoNotOptimize(engine.current_energy());
  }
}
BENCHMARK(BM_EdefIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_CandidateScan(benchmark::State& state) {
  auto model = build_fh({4, 1.0, 1.0, 1.0});
  EngineOptions opt;
  opt.cuts = 0;
  Engine engine(model, fh_sector(2, 2), opt);
  engine.step();
  const auto pool = engine.circuit(0).pool;
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& gen : pool) acc += engine.candidate_gradient(0, gen);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * pool.size());
}
BENCHMARK(BM_CandidateScan);
