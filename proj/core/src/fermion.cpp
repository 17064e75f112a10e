#include "forgevqe/fermion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fvqe {

namespace {

inline std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

}  // namespace

std::uint64_t ModeTable::mask_tz(int twice_tz) const {
  std::uint64_t m = 0;
  for (int i = 0; i < size(); ++i)
    if (modes[i].twice_tz == twice_tz) m |= bit(i);
  return m;
}

std::vector<int> ModeTable::distinct_tz() const {
  std::set<int> s;
  for (const auto& m : modes) s.insert(m.twice_tz);
  return {s.begin(), s.end()};
}

int ModeTable::det_twice_jz(std::uint64_t det) const {
  int jz = 0;
  for (int i = 0; i < size(); ++i)
    if (det & bit(i)) jz += modes[i].twice_m;
  return jz;
}

namespace {

ModeRange contiguous_range(const std::vector<int>& members, const char* what) {
  if (members.empty()) throw std::runtime_error(std::string(what) + ": empty block");
  for (std::size_t i = 1; i < members.size(); ++i)
    if (members[i] != members[i - 1] + 1)
      throw std::runtime_error(std::string(what) + ": block is not a contiguous mode range");
  return ModeRange{members.front(), members.back() + 1};
}

}  // namespace

std::pair<ModeRange, ModeRange> ModeTable::layer1_blocks() const {
  std::vector<int> a, b;
  for (int i = 0; i < size(); ++i) (modes[i].layer1 == 0 ? a : b).push_back(i);
  auto ra = contiguous_range(a, "layer-1 A");
  auto rb = contiguous_range(b, "layer-1 B");
  if (ra.begin != 0 || rb.begin != ra.end || rb.end != size())
    throw std::runtime_error("layer-1 blocks must partition the register as [A | B]");
  return {ra, rb};
}

std::pair<ModeRange, ModeRange> ModeTable::layer2_blocks(const ModeRange& block) const {
  std::vector<int> a, b;
  for (int i = block.begin; i < block.end; ++i) (modes[i].layer2 == 0 ? a : b).push_back(i);
  auto ra = contiguous_range(a, "layer-2 bottom");
  auto rb = contiguous_range(b, "layer-2 top");
  if (ra.begin != block.begin || rb.begin != ra.end || rb.end != block.end)
    throw std::runtime_error("layer-2 blocks must split their layer-1 block as [bottom | top]");
  return {ra, rb};
}

ModeTable ModeTable::slice(const ModeRange& range) const {
  ModeTable out;
  out.modes.assign(modes.begin() + range.begin, modes.begin() + range.end);
  return out;
}

Model build_fh(const FermiHubbardParams& p) {
  if (p.n_sites < 2 || p.n_sites % 2 != 0)
    throw std::invalid_argument("build_fh: n_sites must be even and at least 2");
  const int ns = p.n_sites;
  Model model;
  model.kind = "fh";
  model.pool_includes_one_body = true;

  ModeTable table;
  for (int s = 0; s < ns; ++s) {
    for (int spin = 0; spin < 2; ++spin) {
      Mode m;
      m.twice_j = 1;
      m.twice_m = (spin == 0) ? +1 : -1;  // up then down within each site
      m.twice_tz = 0;
      m.spe = 0.0;
      m.label = "site" + std::to_string(s);
      m.layer1 = (s < ns / 2) ? 0 : 1;
      m.layer2 = 0;
      table.modes.push_back(m);
    }
  }

  Hamiltonian h;
  h.modes = table;
  auto up = [](int s) { return 2 * s; };
  auto dn = [](int s) { return 2 * s + 1; };
  for (int s = 0; s + 1 < ns; ++s) {
    const double hop = (s == ns / 2 - 1) ? -p.t_m : -p.t;
    h.one_body.push_back({up(s), up(s + 1), hop});
    h.one_body.push_back({dn(s), dn(s + 1), hop});
  }
  for (int s = 0; s < ns; ++s)
    h.two_body.push_back({up(s), dn(s), up(s), dn(s), p.u});
  model.h = std::move(h);

  // Spin exchange, site mirror, and their composition; all with unit phases.
  const int n = 2 * ns;
  ModePermutation spinex = ModePermutation::identity(n);
  ModePermutation mirror = ModePermutation::identity(n);
  ModePermutation both = ModePermutation::identity(n);
  for (int s = 0; s < ns; ++s) {
    spinex.target[up(s)] = dn(s);
    spinex.target[dn(s)] = up(s);
    mirror.target[up(s)] = up(ns - 1 - s);
    mirror.target[dn(s)] = dn(ns - 1 - s);
    both.target[up(s)] = dn(ns - 1 - s);
    both.target[dn(s)] = up(ns - 1 - s);
  }
  model.symmetries.push_back({"spin_exchange", spinex});
  model.symmetries.push_back({"mirror", mirror});
  model.symmetries.push_back({"spin_exchange_mirror", both});
  return model;
}

Statevector apply_hamiltonian(const Hamiltonian& h, const Statevector& state) {
  if (h.n_modes() != state.n_qubits)
    throw std::invalid_argument("apply_hamiltonian: dimension mismatch");
  Statevector out(state.n_qubits);
  const std::uint64_t dim = state.dim();

  for (const auto& t : h.one_body) {
    if (t.p == t.q) {
      for (std::uint64_t m = 0; m < dim; ++m)
        if (m & bit(t.p)) out.amps[m] += t.value * state.amps[m];
    } else {
      const std::uint64_t flip = bit(t.p) | bit(t.q);
      for (std::uint64_t m = 0; m < dim; ++m) {
        if (!(m & bit(t.q)) || (m & bit(t.p))) continue;
        const std::uint64_t m2 = m ^ flip;
        const double sg = detail::jw_between_sign(m, t.p, t.q);
        out.amps[m2] += t.value * sg * state.amps[m];
        out.amps[m] += t.value * sg * state.amps[m2];
      }
    }
  }

  for (const auto& t : h.two_body) {
    const std::uint64_t maskP = bit(t.i) | bit(t.j);
    const std::uint64_t maskQ = bit(t.k) | bit(t.l);
    if (maskP == maskQ) {
      for (std::uint64_t m = 0; m < dim; ++m)
        if ((m & maskQ) == maskQ) out.amps[m] += t.value * state.amps[m];
      continue;
    }
    for (std::uint64_t m = 0; m < dim; ++m) {
      if ((m & maskQ) != maskQ || ((m & ~maskQ) & maskP)) continue;
      const std::uint64_t m2 = (m & ~maskQ) | maskP;
      const double sg = detail::jw_two_body_sign(m, t.i, t.j, t.k, t.l);
      out.amps[m2] += t.value * sg * state.amps[m];
      out.amps[m] += t.value * sg * state.amps[m2];
    }
  }
  return out;
}

double expectation(const Hamiltonian& h, const Statevector& state) {
  const double n2 = state.norm();
  if (n2 == 0.0) throw std::invalid_argument("expectation: zero-norm state");
  const Statevector hs = apply_hamiltonian(h, state);
  const cdouble val = inner(state, hs);
  return val.real() / (n2 * n2);
}

double diagonal_energy(const Hamiltonian& h, std::uint64_t det) {
  double e = 0.0;
  for (const auto& t : h.one_body)
    if (t.p == t.q && (det & bit(t.p))) e += t.value;
  for (const auto& t : h.two_body) {
    const std::uint64_t maskP = bit(t.i) | bit(t.j);
    const std::uint64_t maskQ = bit(t.k) | bit(t.l);
    if (maskP == maskQ && (det & maskQ) == maskQ) e += t.value;
  }
  return e;
}

std::vector<ExcitationGenerator> build_pool(const ModeTable& table, bool include_one_body,
                                            std::optional<std::uint64_t> allowed_modes) {
  const std::uint64_t allowed = allowed_modes.value_or(table.mask_all());
  if (allowed == 0) throw std::invalid_argument("build_pool: empty allowed mode set");
  std::vector<int> modes;
  for (int i = 0; i < table.size(); ++i)
    if (allowed & bit(i)) modes.push_back(i);

  auto conserves = [&](const std::array<int, 4>& created, const std::array<int, 4>& destroyed,
                       int n_each) {
    int d_jz = 0;
    std::int64_t d_tz_counts = 0;  // packed per-species balance; offsets keep species apart
    for (int a = 0; a < n_each; ++a) {
      const Mode& mc = table.modes[created[a]];
      const Mode& md = table.modes[destroyed[a]];
      d_jz += mc.twice_m - md.twice_m;
      d_tz_counts += (std::int64_t(1) << (8 * (mc.twice_tz + 2)));
      d_tz_counts -= (std::int64_t(1) << (8 * (md.twice_tz + 2)));
    }
    return d_jz == 0 && d_tz_counts == 0;
  };

  std::vector<ExcitationGenerator> pool;
  if (include_one_body) {
    for (std::size_t a = 0; a < modes.size(); ++a)
      for (std::size_t b = a + 1; b < modes.size(); ++b)
        if (conserves({modes[b], 0, 0, 0}, {modes[a], 0, 0, 0}, 1))
          pool.push_back(ExcitationGenerator::one_body(modes[a], modes[b]));
  }

  // Unordered pairs in lexicographic order, then pairs-of-pairs with P < Q.
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a + 1; b < modes.size(); ++b) pairs.emplace_back(modes[a], modes[b]);
  for (std::size_t x = 0; x < pairs.size(); ++x) {
    for (std::size_t y = x + 1; y < pairs.size(); ++y) {
      const auto [p0, p1] = pairs[x];
      const auto [q0, q1] = pairs[y];
      if (!conserves({p0, p1, 0, 0}, {q0, q1, 0, 0}, 2)) continue;
      pool.push_back(ExcitationGenerator::two_body(p0, p1, q0, q1));
    }
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

}  // namespace fvqe
