#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "forgevqe/oracle.hpp"
#include "forgevqe/schmidt.hpp"

using namespace fvqe;

namespace {

Bipartition half_cut(int n) {
  Bipartition c;
  for (int i = 0; i < n / 2; ++i) c.block_a.push_back(i);
  for (int i = n / 2; i < n; ++i) c.block_b.push_back(i);
  return c;
}

Statevector fh_ground(double t_m, double u, SectorBasis* basis_out = nullptr) {
  auto model = build_fh({4, 1.0, t_m, u});
  auto basis = sector_basis(model.h.modes, species_sector(model.h.modes, {{0, 4}}, 0));
  auto [energy, state] = ground_state_register(model.h, basis);
  (void)energy;
  if (basis_out) *basis_out = basis;
  return state;
}

}  // namespace

TEST_CASE("product state has a single unit singular value") {
  auto s = from_slater({0, 3}, 4);
  auto sd = decompose(s, half_cut(4));
  CHECK(sd.values[0] == doctest::Approx(1.0));
  CHECK(sd.rank() == 1);
  CHECK(entropy(sd) == doctest::Approx(0.0));
  CHECK(truncation_infidelity(sd, 1) == doctest::Approx(0.0));
}

TEST_CASE("Bell state carries one bit") {
  Statevector bell(2);
  bell.amps[0] = std::sqrt(0.5);
  bell.amps[3] = std::sqrt(0.5);
  auto sd = decompose(bell, {{0}, {1}});
  CHECK(sd.values[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(sd.values[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK(entropy(sd) == doctest::Approx(1.0));
}

TEST_CASE("reconstruction from factors") {
  std::mt19937 rng(21);
  std::normal_distribution<double> dist(0.0, 1.0);
  Statevector psi(6);
  for (auto& a : psi.amps) a = {dist(rng), dist(rng)};
  psi.normalize();
  auto sd = decompose(psi, half_cut(6));

  double sum_sq = 0.0;
  for (double v : sd.values) sum_sq += v * v;
  CHECK(sum_sq == doctest::Approx(1.0).epsilon(1e-10));

  // Orthonormal factor families.
  for (std::size_t i = 0; i < sd.left.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double expected = (i == j) ? 1.0 : 0.0;
      CHECK(std::abs(inner(sd.left[i], sd.left[j]) - cdouble{expected, 0.0}) < 1e-10);
      CHECK(std::abs(inner(sd.right[i], sd.right[j]) - cdouble{expected, 0.0}) < 1e-10);
    }

  // Sum of lambda_i |u_i> x |v_i> reproduces the state (amplitudes multiplied
  // directly; generic random states have no fixed particle number).
  Statevector rec(6);
  for (std::size_t i = 0; i < sd.values.size(); ++i)
    for (std::uint64_t a = 0; a < 8; ++a)
      for (std::uint64_t b = 0; b < 8; ++b)
        rec.amps[a | (b << 3)] += sd.values[i] * sd.left[i].amps[a] * sd.right[i].amps[b];
  for (std::size_t g = 0; g < rec.dim(); ++g) CHECK(std::abs(rec.amps[g] - psi.amps[g]) < 1e-10);

  // Entropy bound: 2^S <= rank.
  CHECK(std::pow(2.0, entropy(sd)) <= sd.rank(1e-12) + 1e-9);
}

TEST_CASE("truncation infidelity is monotone") {
  auto psi = fh_ground(1.0, 1.0);
  auto sd = decompose(psi, half_cut(8));
  for (int n = 1; n + 1 <= int(sd.values.size()); ++n)
    CHECK(truncation_infidelity(sd, n) >= truncation_infidelity(sd, n + 1) - 1e-15);
}

TEST_CASE("FH singular-value degeneracy across the central cut") {
  for (double u : {1.0, 3.0}) {
    for (double tm : {0.25, 1.0, 2.0}) {
      auto sd = decompose(fh_ground(tm, u), half_cut(8));
      // lambda_2..lambda_5 pairwise equal.
      for (int i = 2; i <= 4; ++i)
        CHECK(std::abs(sd.values[i] - sd.values[1]) < 1e-8);
      // and well separated from lambda_6.
      CHECK(sd.values[5] < sd.values[4] - 1e-6);
    }
  }
}

TEST_CASE("zero-entropy chain at t_m = 0") {
  auto sd = decompose(fh_ground(0.0, 1.0), half_cut(8));
  CHECK(entropy(sd) < 1e-10);
  CHECK(truncation_infidelity(sd, 1) < 1e-12);
}

TEST_CASE("degeneracy clustering") {
  std::vector<double> vals = {0.9, 0.3, 0.3 - 1e-9, 0.3 - 2e-9, 1e-4, 1e-14};
  auto clusters = degeneracy_clusters(vals);
  REQUIRE(clusters.size() == 3);
  CHECK(clusters[0] == std::pair<int, int>{0, 1});
  CHECK(clusters[1] == std::pair<int, int>{1, 4});
  CHECK(clusters[2] == std::pair<int, int>{4, 5});
}

TEST_CASE("sector decomposition agrees with the dense route") {
  SectorBasis basis;
  auto psi = fh_ground(1.3, 2.1, &basis);
  auto sd = decompose(psi, half_cut(8));

  auto model = build_fh({4, 1.0, 1.3, 2.1});
  auto gs = ground_state(model.h, basis);
  auto terms = decompose_in_sector(model.h.modes, basis, gs.coeffs, 4);

  REQUIRE(terms.size() <= sd.values.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    CHECK(terms[i].value == doctest::Approx(sd.values[i]).epsilon(1e-9));

  // Reconstruction through the sector route.
  double total = 0.0;
  for (const auto& t : terms) total += t.value * t.value;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  for (const auto& t : terms) {
    // Factor support stays inside the advertised sector and is normalized.
    double na = 0.0, nb = 0.0;
    for (double x : t.vec_a) na += x * x;
    for (double x : t.vec_b) nb += x * x;
    CHECK(na == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(nb == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("non-normalized input is rejected") {
  Statevector s(2);
  s.amps[0] = 2.0;
  CHECK_THROWS_AS(decompose(s, {{0}, {1}}), std::invalid_argument);
}
