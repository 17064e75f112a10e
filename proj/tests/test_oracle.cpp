#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forgevqe/oracle.hpp"

using namespace fvqe;

TEST_CASE("sector dimensions") {
  auto model = build_fh({4, 1.0, 1.0, 1.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  CHECK(basis.dim() == 36);  // C(4,2)^2 at half filling

  // One particle in one mode.
  ModeTable tiny;
  tiny.modes.push_back({1, 1, -1, 0.0, "m", 0, 0});
  auto b1 = sector_basis(tiny, {{{1, 1}}, {}});
  CHECK(b1.dim() == 1);

  CHECK_THROWS(sector_basis(tiny, SectorConstraints{{{1, 2}}, {}}));
}

TEST_CASE("sd-shell-sized species sector") {
  // 12 proton modes, 12 neutron modes; choose 2 and 10.
  ModeTable table;
  for (int i = 0; i < 12; ++i) table.modes.push_back({5, 0, -1, 0.0, "p", 0, 0});
  for (int i = 0; i < 12; ++i) table.modes.push_back({5, 0, 1, 0.0, "n", 1, 0});
  auto basis = sector_basis(table, species_sector(table, {{-1, 2}, {1, 10}}));
  CHECK(basis.dim() == 66u * 66u);
}

TEST_CASE("Hubbard dimer oracle energy") {
  auto model = build_fh({2, 1.0, 1.0, 1.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 2}}, 0));
  auto gs = ground_state(model.h, basis);
  const double exact = (1.0 - std::sqrt(17.0)) / 2.0;
  CHECK(gs.energy == doctest::Approx(exact).epsilon(1e-10));
  CHECK(gs.residual < 1e-9);
}

TEST_CASE("free-fermion chain oracle energy and embedded state") {
  auto model = build_fh({4, 1.0, 1.0, 0.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  auto [energy, state] = ground_state_register(model.h, basis);
  CHECK(energy == doctest::Approx(-2.0 * std::sqrt(5.0)).epsilon(1e-10));
  CHECK(state.norm() == doctest::Approx(1.0));
  // No amplitude outside the sector.
  for (std::uint64_t det = 0; det < state.dim(); ++det) {
    if (std::abs(state.amps[det]) < 1e-14) continue;
    int up = 0, down = 0;
    for (int i = 0; i < 8; ++i)
      if (det >> i & 1) ((i % 2 == 0) ? up : down) += 1;
    CHECK(up == 2);
    CHECK(down == 2);
  }
  // Eigen-residual in the full register.
  auto hpsi = apply_hamiltonian(model.h, state);
  double res = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i) res += std::norm(hpsi.amps[i] - energy * state.amps[i]);
  CHECK(std::sqrt(res) < 1e-9);
}

TEST_CASE("Lanczos path agrees with dense on a mid-sized sector") {
  auto model = build_fh({4, 1.0, 0.6, 2.0});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  OracleOptions dense_opts;
  auto dense = ground_state(model.h, basis, dense_opts);
  OracleOptions kry_opts;
  kry_opts.dense_cutoff = 1;  // force the iterative path
  auto krylov = ground_state(model.h, basis, kry_opts);
  CHECK(krylov.energy == doctest::Approx(dense.energy).epsilon(1e-11));
  CHECK(krylov.residual < 1e-9);
  // Same state up to a global sign.
  double overlap = 0.0;
  for (std::size_t i = 0; i < basis.dim(); ++i) overlap += dense.coeffs[i] * krylov.coeffs[i];
  CHECK(std::abs(overlap) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate ground states are flagged") {
  // Two modes, no coupling: the one-particle spectrum is doubly degenerate.
  ModeTable table;
  table.modes.push_back({1, 1, -1, -1.0, "a", 0, 0});
  table.modes.push_back({1, -1, -1, -1.0, "a", 0, 0});
  Hamiltonian h;
  h.modes = table;
  h.one_body = {{0, 0, -1.0}, {1, 1, -1.0}};
  auto basis = sector_basis(table, {{{0b11, 1}}, {}});
  auto gs = ground_state(h, basis);
  CHECK(gs.degenerate);
  CHECK(gs.degenerate_space.size() == 2);
}

TEST_CASE("deterministic coefficients across repeated runs") {
  auto model = build_fh({4, 1.0, 1.3, 1.7});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  auto a = ground_state(model.h, basis);
  auto b = ground_state(model.h, basis);
  REQUIRE(a.coeffs.size() == b.coeffs.size());
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) CHECK(a.coeffs[i] == b.coeffs[i]);
}
