#include "forgevqe/resources.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <utility>

namespace fvqe {

namespace {

using cdouble = std::complex<double>;

// Pauli string as coeff * X^x Z^z with the product rule
// (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}.
using StringMap = std::map<std::pair<std::uint64_t, std::uint64_t>, cdouble>;

StringMap multiply(const StringMap& a, const StringMap& b) {
  StringMap out;
  for (const auto& [pa, ca] : a) {
    for (const auto& [pb, cb] : b) {
      const auto [xa, za] = pa;
      const auto [xb, zb] = pb;
      cdouble c = ca * cb;
      if (std::popcount(za & xb) & 1) c = -c;
      out[{xa ^ xb, za ^ zb}] += c;
    }
  }
  return out;
}

inline std::uint64_t below(int i) { return (std::uint64_t(1) << i) - 1; }

// a+_j = Z_{<j} (X_j - iY_j)/2 = Z_{<j} (X_j + X_j Z_j)/2
// a_j  = Z_{<j} (X_j + iY_j)/2 = Z_{<j} (X_j - X_j Z_j)/2
StringMap ladder(int j, bool dagger) {
  const std::uint64_t xb = std::uint64_t(1) << j;
  StringMap m;
  m[{xb, below(j)}] = 0.5;
  m[{xb, below(j) | xb}] = dagger ? 0.5 : -0.5;
  return m;
}

StringMap monomial(const std::vector<std::pair<int, bool>>& ops) {
  StringMap acc;
  acc[{0, 0}] = 1.0;
  for (const auto& [j, dagger] : ops) acc = multiply(acc, ladder(j, dagger));
  return acc;
}

}  // namespace

int generator_cnots(const ExcitationGenerator& gen) {
  StringMap x;
  if (gen.kind == ExcitationGenerator::Kind::OneBody)
    x = monomial({{gen.idx[0], true}, {gen.idx[1], false}});
  else
    x = monomial({{gen.idx[0], true}, {gen.idx[1], true}, {gen.idx[3], false}, {gen.idx[2], false}});

  // T = i X + (i X)^dagger; the adjoint of c X^x Z^z is conj(c) (-1)^{|x&z|} X^x Z^z.
  StringMap t;
  for (const auto& [p, c] : x) {
    const cdouble ic = cdouble{0.0, 1.0} * c;
    t[p] += ic;
    cdouble adj = std::conj(ic);
    if (std::popcount(p.first & p.second) & 1) adj = -adj;
    t[p] += adj;
  }

  int cost = 0;
  for (const auto& [p, c] : t) {
    if (std::abs(c) < 1e-12) continue;
    const int w = std::popcount(p.first | p.second);
    if (w >= 2) cost += 2 * (w - 1);
  }
  return cost;
}

int CnotModel::count(const ExcitationGenerator& gen) const {
  auto it = cache_.find(gen);
  if (it != cache_.end()) return it->second;
  const int c = generator_cnots(gen);
  cache_.emplace(gen, c);
  return c;
}

long circuit_cnots(const std::vector<ExcitationGenerator>& ops) {
  long total = 0;
  for (const auto& g : ops) total += generator_cnots(g);
  return total;
}

}  // namespace fvqe
