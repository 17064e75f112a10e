#include <benchmark/benchmark.h>

#include "forgevqe/fermion.hpp"
#include "forgevqe/oracle.hpp"
#include "forgevqe/schmidt.hpp"

using namespace fvqe;

static void BM_ApplyExcitation(benchmark::State& state) {
  const int n = int(state.range(0));
  Statevector psi(n);
  psi.amps[1] = 1.0;
  const auto gen = ExcitationGenerator::two_body(0, 1, n - 2, n - 1);
  for (auto _ : state) {
    apply_excitation_inplace(psi, gen, 0.01);
    benchmark::DoNotOptimize(psi.amps.data());
  }
  state.SetItemsProcessed(state.iterations() * (std::int64_t(1) << n));
}
BENCHMARK(BM_ApplyExcitation)->DenseRange(8, 20, 4);

static void BM_ApplyHamiltonianFH(benchmark::State& state) {
  const int sites = int(state.range(0));
  auto model = build_fh({sites, 1.0, 1.0, 2.0});
  Statevector psi(2 * sites);
  psi.amps[3] = 1.0;
  for (auto _ : state) {
    auto out = apply_hamiltonian(model.h, psi);
    benchmark::DoNotOptimize(out.amps.data());
  }
}
BENCHMARK(BM_ApplyHamiltonianFH)->Arg(4)->Arg(6)->Arg(8);

static void BM_SchmidtDecompose(benchmark::State& state) {
  auto model = build_fh({4, 1.0, 1.0, 1.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  auto [energy, psi] = ground_state_register(model.h, basis);
  benchmark::DoNotOptimize(energy);
  Bipartition cut;
  for (int i = 0; i < 4; ++i) cut.block_a.push_back(i);
  for (int i = 4; i < 8; ++i) cut.block_b.push_back(i);
  for (auto _ : state) {
    auto sd = decompose(psi, cut);
    benchmark::DoNotOptimize(sd.values.data());
  }
}
BENCHMARK(BM_SchmidtDecompose);

static void BM_OracleGroundState(benchmark::State& state) {
  auto model = build_fh({4, 1.0, 1.0, 2.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  for (auto _ : state) {
    auto gs = ground_state(model.h, basis);
    benchmark::DoNotOptimize(gs.energy);
  }
}
BENCHMARK(BM_OracleGroundState);
