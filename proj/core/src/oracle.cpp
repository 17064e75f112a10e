#include "forgevqe/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "forgevqe/numerics.hpp"
#include "sector_matrix.hpp"

namespace fvqe {

namespace {

inline std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

void enumerate_group(const std::vector<std::uint64_t>& group_dets, std::size_t gi,
                     const std::vector<std::vector<std::uint64_t>>& per_group, std::uint64_t acc,
                     std::vector<std::uint64_t>& out) {
  if (gi == per_group.size()) {
    out.push_back(acc);
    return;
  }
  for (std::uint64_t d : per_group[gi]) enumerate_group(group_dets, gi + 1, per_group, acc | d, out);
}

std::vector<std::uint64_t> combinations_of_mask(std::uint64_t mask, int count) {
  std::vector<int> members;
  for (int i = 0; i < 64; ++i)
    if (mask & bit(i)) members.push_back(i);
  const int n = int(members.size());
  std::vector<std::uint64_t> out;
  if (count < 0 || count > n) return out;
  std::vector<int> pick(count);
  for (int i = 0; i < count; ++i) pick[i] = i;
  while (true) {
    std::uint64_t d = 0;
    for (int i : pick) d |= bit(members[i]);
    out.push_back(d);
    int k = count - 1;
    while (k >= 0 && pick[k] == n - count + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int j = k + 1; j < count; ++j) pick[j] = pick[j - 1] + 1;
  }
  if (count == 0) out = {0};
  return out;
}

}  // namespace

std::ptrdiff_t SectorBasis::index_of(std::uint64_t det) const {
  auto it = std::lower_bound(dets.begin(), dets.end(), det);
  if (it == dets.end() || *it != det) return -1;
  return it - dets.begin();
}

SectorConstraints species_sector(const ModeTable& table,
                                 const std::vector<std::pair<int, int>>& tz_counts,
                                 std::optional<int> twice_jz) {
  SectorConstraints c;
  for (auto [tz, count] : tz_counts) c.group_counts.push_back({table.mask_tz(tz), count});
  c.twice_jz = twice_jz;
  return c;
}

SectorBasis sector_basis(const ModeTable& table, const SectorConstraints& constraints) {
  std::uint64_t covered = 0;
  for (const auto& [mask, count] : constraints.group_counts) {
    if (mask & covered) throw std::invalid_argument("sector_basis: overlapping constraint groups");
    covered |= mask;
    if (count < 0 || count > std::popcount(mask))
      throw std::invalid_argument("sector_basis: unsatisfiable group count");
  }
  std::vector<std::vector<std::uint64_t>> per_group;
  for (const auto& [mask, count] : constraints.group_counts)
    per_group.push_back(combinations_of_mask(mask, count));

  std::vector<std::uint64_t> dets;
  enumerate_group({}, 0, per_group, 0, dets);
  if (constraints.twice_jz) {
    std::vector<std::uint64_t> kept;
    for (std::uint64_t d : dets)
      if (table.det_twice_jz(d) == *constraints.twice_jz) kept.push_back(d);
    dets = std::move(kept);
  }
  if (dets.empty()) throw std::runtime_error("sector_basis: empty sector");
  std::sort(dets.begin(), dets.end());

  SectorBasis b;
  b.n_modes = table.size();
  b.constraints = constraints;
  b.dets = std::move(dets);
  return b;
}

namespace detail {

Eigen::SparseMatrix<double> build_sector_matrix(const Hamiltonian& h, const SectorBasis& basis) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> trips;
  const auto dim = std::ptrdiff_t(basis.dim());
  for (std::ptrdiff_t col = 0; col < dim; ++col) {
    const std::uint64_t m = basis.dets[col];
    double diag = 0.0;
    for (const auto& t : h.one_body) {
      if (t.p == t.q) {
        if (m & bit(t.p)) diag += t.value;
        continue;
      }
      if ((m & bit(t.q)) && !(m & bit(t.p))) {
        const std::uint64_t m2 = m ^ (bit(t.p) | bit(t.q));
        const auto row = basis.index_of(m2);
        if (row >= 0) {
          const double v = t.value * fvqe::detail::jw_between_sign(m, t.p, t.q);
          trips.emplace_back(row, col, v);
          trips.emplace_back(col, row, v);
        }
      }
    }
    for (const auto& t : h.two_body) {
      const std::uint64_t maskP = bit(t.i) | bit(t.j);
      const std::uint64_t maskQ = bit(t.k) | bit(t.l);
      if (maskP == maskQ) {
        if ((m & maskQ) == maskQ) diag += t.value;
        continue;
      }
      if ((m & maskQ) == maskQ && !((m & ~maskQ) & maskP)) {
        const std::uint64_t m2 = (m & ~maskQ) | maskP;
        const auto row = basis.index_of(m2);
        if (row >= 0) {
          const double v = t.value * fvqe::detail::jw_two_body_sign(m, t.i, t.j, t.k, t.l);
          trips.emplace_back(row, col, v);
          trips.emplace_back(col, row, v);
        }
      }
    }
    if (diag != 0.0) trips.emplace_back(col, col, diag);
  }
  Eigen::SparseMatrix<double> mat(dim, dim);
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

void sector_apply_excitation(std::vector<cdouble>& coeffs, const SectorBasis& basis,
                             const ExcitationGenerator& gen, double theta) {
  const double c = std::cos(theta), sn = std::sin(theta);
  const auto dim = std::ptrdiff_t(basis.dim());
  if (gen.kind == ExcitationGenerator::Kind::OneBody) {
    const int r = gen.idx[0], s = gen.idx[1];
    const std::uint64_t flip = bit(r) | bit(s);
    for (std::ptrdiff_t i = 0; i < dim; ++i) {
      const std::uint64_t m = basis.dets[i];
      if (!(m & bit(s)) || (m & bit(r))) continue;
      const auto j = basis.index_of(m ^ flip);
      if (j < 0) throw std::runtime_error("sector_apply_excitation: generator leaves the sector");
      const double sg = fvqe::detail::jw_between_sign(m, r, s);
      const cdouble am = coeffs[i], an = coeffs[j];
      coeffs[i] = c * am + sg * sn * an;
      coeffs[j] = -sg * sn * am + c * an;
    }
  } else {
    const int p0 = gen.idx[0], p1 = gen.idx[1], q0 = gen.idx[2], q1 = gen.idx[3];
    const std::uint64_t maskP = bit(p0) | bit(p1);
    const std::uint64_t maskQ = bit(q0) | bit(q1);
    for (std::ptrdiff_t i = 0; i < dim; ++i) {
      const std::uint64_t m = basis.dets[i];
      if ((m & maskQ) != maskQ || ((m & ~maskQ) & maskP)) continue;
      const auto j = basis.index_of((m & ~maskQ) | maskP);
      if (j < 0) throw std::runtime_error("sector_apply_excitation: generator leaves the sector");
      const double sg = fvqe::detail::jw_two_body_sign(m, p0, p1, q0, q1);
      const cdouble am = coeffs[i], an = coeffs[j];
      coeffs[i] = c * am + sg * sn * an;
      coeffs[j] = -sg * sn * am + c * an;
    }
  }
}

std::vector<cdouble> sector_apply_generator(const std::vector<cdouble>& coeffs,
                                            const SectorBasis& basis,
                                            const ExcitationGenerator& gen) {
  std::vector<cdouble> out(coeffs.size(), cdouble{0.0, 0.0});
  const cdouble iu{0.0, 1.0};
  const auto dim = std::ptrdiff_t(basis.dim());
  if (gen.kind == ExcitationGenerator::Kind::OneBody) {
    const int r = gen.idx[0], s = gen.idx[1];
    const std::uint64_t flip = bit(r) | bit(s);
    for (std::ptrdiff_t i = 0; i < dim; ++i) {
      const std::uint64_t m = basis.dets[i];
      if (!(m & bit(s)) || (m & bit(r))) continue;
      const auto j = basis.index_of(m ^ flip);
      if (j < 0) throw std::runtime_error("sector_apply_generator: generator leaves the sector");
      const double sg = fvqe::detail::jw_between_sign(m, r, s);
      out[j] += iu * sg * coeffs[i];
      out[i] -= iu * sg * coeffs[j];
    }
  } else {
    const int p0 = gen.idx[0], p1 = gen.idx[1], q0 = gen.idx[2], q1 = gen.idx[3];
    const std::uint64_t maskP = bit(p0) | bit(p1);
    const std::uint64_t maskQ = bit(q0) | bit(q1);
    for (std::ptrdiff_t i = 0; i < dim; ++i) {
      const std::uint64_t m = basis.dets[i];
      if ((m & maskQ) != maskQ || ((m & ~maskQ) & maskP)) continue;
      const auto j = basis.index_of((m & ~maskQ) | maskP);
      if (j < 0) throw std::runtime_error("sector_apply_generator: generator leaves the sector");
      const double sg = fvqe::detail::jw_two_body_sign(m, p0, p1, q0, q1);
      out[j] += iu * sg * coeffs[i];
      out[i] -= iu * sg * coeffs[j];
    }
  }
  return out;
}

cdouble sector_inner(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  cdouble acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double sector_norm(const std::vector<cdouble>& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}

}  // namespace detail

namespace {

struct LowPair {
  double e0, e1;
  Eigen::VectorXd v0;
  std::vector<Eigen::VectorXd> degenerate;
};

LowPair dense_lowest(const Eigen::SparseMatrix<double>& mat) {
  Eigen::MatrixXd dense(mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  LowPair out;
  out.e0 = solver.eigenvalues()(0);
  out.e1 = dense.rows() > 1 ? solver.eigenvalues()(1) : out.e0 + 1.0;
  out.v0 = solver.eigenvectors().col(0);
  for (int k = 0; k < dense.rows(); ++k) {
    if (solver.eigenvalues()(k) - out.e0 < tol::degeneracy_gap)
      out.degenerate.push_back(solver.eigenvectors().col(k));
    else
      break;
  }
  return out;
}

// Lanczos with full reorthogonalization and thick restarts from the Ritz
// vector. The start vector is fixed and deterministic.
LowPair lanczos_lowest(const Eigen::SparseMatrix<double>& mat, const OracleOptions& opt) {
  const auto dim = mat.rows();
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = 1.0 + 0.5 * std::sin(1.37 * double(i));
  v.normalize();

  const int block = int(std::min<std::ptrdiff_t>(dim, 220));
  int used = 0;
  double e0 = 0.0, e1 = 0.0;
  while (used < opt.lanczos_max_iterations) {
    std::vector<Eigen::VectorXd> basis;
    basis.reserve(block);
    Eigen::VectorXd alpha(block), beta(block);
    Eigen::VectorXd w;
    basis.push_back(v);
    int m = 0;
    for (; m < block && used < opt.lanczos_max_iterations; ++m, ++used) {
      w = mat * basis[m];
      alpha(m) = basis[m].dot(w);
      w -= alpha(m) * basis[m];
      if (m > 0) w -= beta(m - 1) * basis[m - 1];
      for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
      beta(m) = w.norm();
      if (beta(m) < 1e-14) {
        ++m;
        break;
      }
      if (m + 1 < block) basis.push_back(w / beta(m));
    }
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      tri(i, i) = alpha(i);
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
    e0 = solver.eigenvalues()(0);
    e1 = m > 1 ? solver.eigenvalues()(1) : e0 + 1.0;
    Eigen::VectorXd ritz = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < int(basis.size()); ++i) ritz += solver.eigenvectors()(i, 0) * basis[i];
    ritz.normalize();
    const double res = (mat * ritz - e0 * ritz).norm();
    v = ritz;
    if (res < opt.lanczos_tolerance || beta(std::max(0, m - 1)) < 1e-14) break;
  }
  if (used >= opt.lanczos_max_iterations) {
    const double res = (mat * v - e0 * v).norm();
    if (res > tol::eigen_residual)
      throw std::runtime_error("Lanczos did not converge within " +
                               std::to_string(opt.lanczos_max_iterations) + " iterations");
  }
  LowPair out;
  out.e0 = e0;
  out.e1 = e1;
  out.v0 = v;
  out.degenerate.push_back(v);
  return out;
}

}  // namespace

GroundStateResult ground_state(const Hamiltonian& h, const SectorBasis& basis,
                               const OracleOptions& options) {
  if (basis.dim() == 0) throw std::invalid_argument("ground_state: empty basis");
  const auto mat = detail::build_sector_matrix(h, basis);
  LowPair low = (basis.dim() <= options.dense_cutoff) ? dense_lowest(mat)
                                                      : lanczos_lowest(mat, options);

  GroundStateResult res;
  res.energy = low.e0;
  res.gap = low.e1 - low.e0;
  res.degenerate = basis.dim() > 1 && res.gap < tol::degeneracy_gap;
  res.coeffs.assign(low.v0.data(), low.v0.data() + low.v0.size());
  res.residual = (mat * low.v0 - low.e0 * low.v0).norm();
  if (res.residual > tol::eigen_residual)
    throw std::runtime_error("ground_state: eigenpair residual " + std::to_string(res.residual) +
                             " exceeds tolerance");
  if (res.degenerate)
    for (const auto& vec : low.degenerate)
      res.degenerate_space.emplace_back(vec.data(), vec.data() + vec.size());
  return res;
}

Statevector embed_in_register(const SectorBasis& basis, std::span<const double> coeffs) {
  if (coeffs.size() != basis.dim()) throw std::invalid_argument("embed: size mismatch");
  if (basis.n_modes > 26) throw std::invalid_argument("embed: register too large to materialize");
  Statevector s(basis.n_modes);
  for (std::size_t i = 0; i < coeffs.size(); ++i) s.amps[basis.dets[i]] = coeffs[i];
  return s;
}

Statevector embed_in_register(const SectorBasis& basis, std::span<const cdouble> coeffs) {
  if (coeffs.size() != basis.dim()) throw std::invalid_argument("embed: size mismatch");
  if (basis.n_modes > 26) throw std::invalid_argument("embed: register too large to materialize");
  Statevector s(basis.n_modes);
  for (std::size_t i = 0; i < coeffs.size(); ++i) s.amps[basis.dets[i]] = coeffs[i];
  return s;
}

std::pair<double, Statevector> ground_state_register(const Hamiltonian& h, const SectorBasis& basis,
                                                     const OracleOptions& options) {
  auto res = ground_state(h, basis, options);
  return {res.energy, embed_in_register(basis, res.coeffs)};
}

}  // namespace fvqe
