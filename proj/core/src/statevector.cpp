#include "forgevqe/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fvqe {

namespace {

inline std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

inline int parity(std::uint64_t mask) { return (std::popcount(mask) & 1) ? -1 : 1; }

// Occupied modes of `det` strictly below mode i.
inline std::uint64_t below_mask(int i) { return bit(i) - 1; }

}  // namespace

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amps) s += std::norm(a);
  return std::sqrt(s);
}

void Statevector::normalize() {
  double n = norm();
  if (n == 0.0) throw std::runtime_error("cannot normalize zero statevector");
  for (auto& a : amps) a /= n;
}

ModePermutation ModePermutation::identity(int n_modes) {
  ModePermutation p;
  p.target.resize(n_modes);
  std::iota(p.target.begin(), p.target.end(), 0);
  p.phase.assign(n_modes, cdouble{1.0, 0.0});
  return p;
}

ExcitationGenerator ExcitationGenerator::one_body(int r, int s) {
  if (r == s) throw std::invalid_argument("one-body generator needs distinct modes");
  if (r > s) std::swap(r, s);
  ExcitationGenerator g;
  g.kind = Kind::OneBody;
  g.idx = {r, s, -1, -1};
  return g;
}

ExcitationGenerator ExcitationGenerator::two_body(int p0, int p1, int q0, int q1) {
  if (p0 == p1 || q0 == q1)
    throw std::invalid_argument("two-body generator repeats a creation or annihilation index");
  if (p0 > p1) std::swap(p0, p1);
  if (q0 > q1) std::swap(q0, q1);
  if (p0 == q0 && p1 == q1)
    throw std::invalid_argument("two-body generator with equal index pairs vanishes");
  ExcitationGenerator g;
  g.kind = Kind::TwoBody;
  if (std::pair{p0, p1} < std::pair{q0, q1})
    g.idx = {p0, p1, q0, q1};
  else
    g.idx = {q0, q1, p0, p1};
  return g;
}

int ExcitationGenerator::max_index() const {
  return kind == Kind::OneBody ? idx[1] : std::max(idx[1], idx[3]);
}

std::string ExcitationGenerator::to_string() const {
  if (kind == Kind::OneBody)
    return "T1(" + std::to_string(idx[0]) + "," + std::to_string(idx[1]) + ")";
  return "T2(" + std::to_string(idx[0]) + "," + std::to_string(idx[1]) + ";" +
         std::to_string(idx[2]) + "," + std::to_string(idx[3]) + ")";
}

Statevector from_slater(const std::vector<int>& occupied, int n_qubits) {
  Statevector s(n_qubits);
  std::uint64_t det = 0;
  for (int m : occupied) {
    if (m < 0 || m >= n_qubits) throw std::invalid_argument("mode index out of range");
    if (det & bit(m)) throw std::invalid_argument("duplicate mode in Slater determinant");
    det |= bit(m);
  }
  s.amps[det] = 1.0;
  return s;
}

cdouble inner(const Statevector& a, const Statevector& b) {
  if (a.n_qubits != b.n_qubits) throw std::invalid_argument("inner: dimension mismatch");
  cdouble acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.amps.size(); ++i) acc += std::conj(a.amps[i]) * b.amps[i];
  return acc;
}

namespace detail {

int jw_between_sign(std::uint64_t det, int r, int s) {
  const std::uint64_t between = below_mask(s) & ~below_mask(r + 1);
  return parity(det & between);
}

int jw_two_body_sign(std::uint64_t det, int p0, int p1, int q0, int q1) {
  // Operator string a+_p0 a+_p1 a_q1 a_q0: the rightmost a_q0 acts first.
  int sign = 1;
  sign *= parity(det & below_mask(q0));
  det &= ~bit(q0);
  sign *= parity(det & below_mask(q1));
  det &= ~bit(q1);
  sign *= parity(det & below_mask(p1));
  det |= bit(p1);
  sign *= parity(det & below_mask(p0));
  return sign;
}

std::pair<std::uint64_t, cdouble> permute_det(std::uint64_t det, const ModePermutation& perm) {
  std::uint64_t out = 0;
  cdouble factor{1.0, 0.0};
  // Collect images of occupied modes in ascending source order and count the
  // inversions of that image sequence: that is the reordering parity.
  int images[64];
  int n = 0;
  for (int i = 0; i < perm.size(); ++i) {
    if (!(det & bit(i))) continue;
    images[n++] = perm.target[i];
    factor *= perm.phase[i];
    out |= bit(perm.target[i]);
  }
  int inv = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (images[a] > images[b]) ++inv;
  if (inv & 1) factor = -factor;
  return {out, factor};
}

}  // namespace detail

void apply_excitation_inplace(Statevector& state, const ExcitationGenerator& gen, double theta) {
  if (gen.max_index() >= state.n_qubits)
    throw std::invalid_argument("generator mode index out of range for state");
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const std::uint64_t dim = state.dim();
  if (gen.kind == ExcitationGenerator::Kind::OneBody) {
    const int r = gen.idx[0], s = gen.idx[1];
    const std::uint64_t flip = bit(r) | bit(s);
    for (std::uint64_t m = 0; m < dim; ++m) {
      if (!(m & bit(s)) || (m & bit(r))) continue;
      const std::uint64_t m2 = m ^ flip;
      const double sg = detail::jw_between_sign(m, r, s);
      const cdouble am = state.amps[m], an = state.amps[m2];
      state.amps[m] = c * am + sg * sn * an;
      state.amps[m2] = -sg * sn * am + c * an;
    }
  } else {
    const int p0 = gen.idx[0], p1 = gen.idx[1], q0 = gen.idx[2], q1 = gen.idx[3];
    const std::uint64_t maskP = bit(p0) | bit(p1);
    const std::uint64_t maskQ = bit(q0) | bit(q1);
    for (std::uint64_t m = 0; m < dim; ++m) {
      if ((m & maskQ) != maskQ || ((m & ~maskQ) & maskP)) continue;
      const std::uint64_t m2 = (m & ~maskQ) | maskP;
      const double sg = detail::jw_two_body_sign(m, p0, p1, q0, q1);
      const cdouble am = state.amps[m], an = state.amps[m2];
      state.amps[m] = c * am + sg * sn * an;
      state.amps[m2] = -sg * sn * am + c * an;
    }
  }
}

Statevector apply_excitation(const Statevector& state, const ExcitationGenerator& gen,
                             double theta) {
  Statevector out = state;
  apply_excitation_inplace(out, gen, theta);
  return out;
}

Statevector apply_generator(const Statevector& state, const ExcitationGenerator& gen) {
  if (gen.max_index() >= state.n_qubits)
    throw std::invalid_argument("generator mode index out of range for state");
  Statevector out(state.n_qubits);
  const cdouble iu{0.0, 1.0};
  const std::uint64_t dim = state.dim();
  if (gen.kind == ExcitationGenerator::Kind::OneBody) {
    const int r = gen.idx[0], s = gen.idx[1];
    const std::uint64_t flip = bit(r) | bit(s);
    for (std::uint64_t m = 0; m < dim; ++m) {
      if (!(m & bit(s)) || (m & bit(r))) continue;
      const std::uint64_t m2 = m ^ flip;
      const double sg = detail::jw_between_sign(m, r, s);
      out.amps[m2] += iu * sg * state.amps[m];   // T|m>  = +i sg |m2>
      out.amps[m] -= iu * sg * state.amps[m2];   // T|m2> = -i sg |m>
    }
  } else {
    const int p0 = gen.idx[0], p1 = gen.idx[1], q0 = gen.idx[2], q1 = gen.idx[3];
    const std::uint64_t maskP = bit(p0) | bit(p1);
    const std::uint64_t maskQ = bit(q0) | bit(q1);
    for (std::uint64_t m = 0; m < dim; ++m) {
      if ((m & maskQ) != maskQ || ((m & ~maskQ) & maskP)) continue;
      const std::uint64_t m2 = (m & ~maskQ) | maskP;
      const double sg = detail::jw_two_body_sign(m, p0, p1, q0, q1);
      out.amps[m2] += iu * sg * state.amps[m];
      out.amps[m] -= iu * sg * state.amps[m2];
    }
  }
  return out;
}

Statevector tensor_embed(const std::vector<std::pair<const Statevector*, ModeRange>>& factors) {
  int expected = 0;
  for (const auto& [sv, range] : factors) {
    if (range.begin != expected)
      throw std::invalid_argument("tensor_embed: blocks must be ascending and contiguous");
    if (range.width() != sv->n_qubits)
      throw std::invalid_argument("tensor_embed: factor size does not match its block");
    expected = range.end;
    // Fixed particle number check: support confined to one Hamming weight.
    int weight = -1;
    for (std::uint64_t d = 0; d < sv->dim(); ++d) {
      if (std::abs(sv->amps[d]) < 1e-14) continue;
      const int w = std::popcount(d);
      if (weight < 0)
        weight = w;
      else if (w != weight)
        throw std::invalid_argument("tensor_embed: factor mixes particle-number sectors");
    }
  }
  const int n = expected;
  Statevector out(n);
  const std::uint64_t dim = out.dim();
  for (std::uint64_t g = 0; g < dim; ++g) {
    cdouble a{1.0, 0.0};
    for (const auto& [sv, range] : factors) {
      const std::uint64_t local = (g >> range.begin) & ((std::uint64_t(1) << range.width()) - 1);
      a *= sv->amps[local];
      if (a == cdouble{0.0, 0.0}) break;
    }
    out.amps[g] = a;
  }
  return out;
}

Statevector permute_modes(const Statevector& state, const ModePermutation& perm) {
  if (perm.size() != state.n_qubits)
    throw std::invalid_argument("permute_modes: permutation size mismatch");
  std::vector<char> seen(perm.size(), 0);
  for (int t : perm.target) {
    if (t < 0 || t >= perm.size() || seen[t])
      throw std::invalid_argument("permute_modes: target is not a bijection");
    seen[t] = 1;
  }
  Statevector out(state.n_qubits);
  for (std::uint64_t m = 0; m < state.dim(); ++m) {
    if (state.amps[m] == cdouble{0.0, 0.0}) continue;
    auto [m2, f] = detail::permute_det(m, perm);
    out.amps[m2] += f * state.amps[m];
  }
  return out;
}

}  // namespace fvqe
