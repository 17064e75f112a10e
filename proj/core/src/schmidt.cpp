#include "forgevqe/schmidt.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fvqe {

namespace {

inline std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

}  // namespace

int SchmidtDecomposition::rank(double threshold) const {
  int r = 0;
  for (double v : values)
    if (v > threshold) ++r;
  return r;
}

SchmidtDecomposition decompose(const Statevector& state, const Bipartition& cut) {
  const int n = state.n_qubits;
  std::vector<char> seen(n, 0);
  for (int q : cut.block_a) {
    if (q < 0 || q >= n || seen[q]) throw std::invalid_argument("decompose: bad bipartition");
    seen[q] = 1;
  }
  for (int q : cut.block_b) {
    if (q < 0 || q >= n || seen[q]) throw std::invalid_argument("decompose: bad bipartition");
    seen[q] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) != n)
    throw std::invalid_argument("decompose: bipartition must cover the register");
  if (std::abs(state.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("decompose: state is not normalized");

  const int na = int(cut.block_a.size()), nb = int(cut.block_b.size());
  Eigen::MatrixXcd m(std::ptrdiff_t(1) << na, std::ptrdiff_t(1) << nb);
  for (std::uint64_t a = 0; a < (std::uint64_t(1) << na); ++a) {
    for (std::uint64_t b = 0; b < (std::uint64_t(1) << nb); ++b) {
      std::uint64_t g = 0;
      for (int k = 0; k < na; ++k)
        if (a & bit(k)) g |= bit(cut.block_a[k]);
      for (int k = 0; k < nb; ++k)
        if (b & bit(k)) g |= bit(cut.block_b[k]);
      m(a, b) = state.amps[g];
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtDecomposition sd;
  sd.cut = cut;
  const auto& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    sd.values.push_back(sv(i));
    Statevector u(na), v(nb);
    for (Eigen::Index r = 0; r < svd.matrixU().rows(); ++r) u.amps[r] = svd.matrixU()(r, i);
    for (Eigen::Index r = 0; r < svd.matrixV().rows(); ++r)
      v.amps[r] = std::conj(svd.matrixV()(r, i));
    sd.left.push_back(std::move(u));
    sd.right.push_back(std::move(v));
  }
  return sd;
}

double entropy(const SchmidtDecomposition& sd) {
  double s = 0.0;
  for (double v : sd.values) {
    const double p = v * v;
    if (p > 0.0) s -= p * std::log2(p);
  }
  return s;
}

double truncation_infidelity(const SchmidtDecomposition& sd, int n) {
  if (n < 1) throw std::invalid_argument("truncation_infidelity: n must be at least 1");
  double kept = 0.0;
  for (int i = 0; i < n && i < int(sd.values.size()); ++i) kept += sd.values[i] * sd.values[i];
  return 1.0 - kept;
}

std::vector<std::pair<int, int>> degeneracy_clusters(std::span<const double> values, double rel_gap,
                                                     double floor) {
  std::vector<std::pair<int, int>> clusters;
  int start = -1;
  for (int i = 0; i < int(values.size()); ++i) {
    if (values[i] < floor) break;
    if (start < 0) {
      start = i;
      continue;
    }
    if ((values[i - 1] - values[i]) / values[start] > rel_gap) {
      clusters.push_back({start, i});
      start = i;
    }
  }
  if (start >= 0) {
    int end = int(values.size());
    while (end > start && values[end - 1] < floor) --end;
    clusters.push_back({start, end});
  }
  return clusters;
}

std::vector<SectorSchmidtTerm> decompose_in_sector(const ModeTable& table,
                                                   const SectorBasis& basis,
                                                   std::span<const double> coeffs, int cut_mode) {
  if (coeffs.size() != basis.dim()) throw std::invalid_argument("decompose_in_sector: size mismatch");
  if (cut_mode <= 0 || cut_mode >= basis.n_modes)
    throw std::invalid_argument("decompose_in_sector: cut must be interior");
  const std::uint64_t a_mask = bit(cut_mode) - 1;
  const ModeTable table_a = table.slice({0, cut_mode});
  const ModeTable table_b = table.slice({cut_mode, basis.n_modes});

  auto local_sector = [](const ModeTable& t, std::uint64_t det) {
    SectorConstraints c;
    for (int tz : t.distinct_tz()) {
      const std::uint64_t mask = t.mask_tz(tz);
      c.group_counts.push_back({mask, std::popcount(det & mask)});
    }
    c.twice_jz = t.det_twice_jz(det);
    return c;
  };
  auto sector_tag = [&](std::uint64_t a_det) {
    // Packed (counts per species, jz); deterministic group ordering.
    std::uint64_t tag = 0;
    for (int tz : table_a.distinct_tz())
      tag = tag * 64 + std::popcount(a_det & table_a.mask_tz(tz));
    return tag * 4096 + std::uint64_t(table_a.det_twice_jz(a_det) + 2048);
  };

  // The amplitude matrix is block diagonal over block-A sectors (the global
  // state has fixed quantum numbers, so an A sector pairs with exactly one
  // complementary B sector). SVD each block separately; degenerate singular
  // values across blocks then keep exact sector labels.
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < basis.dim(); ++i)
    groups[sector_tag(basis.dets[i] & a_mask)].push_back(i);

  std::vector<SectorSchmidtTerm> out;
  for (const auto& [tag, members] : groups) {
    (void)tag;
    std::vector<std::uint64_t> ua, ub;
    for (std::size_t i : members) {
      ua.push_back(basis.dets[i] & a_mask);
      ub.push_back(basis.dets[i] >> cut_mode);
    }
    std::sort(ua.begin(), ua.end());
    ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
    std::sort(ub.begin(), ub.end());
    ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
    auto index_in = [](const std::vector<std::uint64_t>& v, std::uint64_t d) {
      return std::ptrdiff_t(std::lower_bound(v.begin(), v.end(), d) - v.begin());
    };
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(std::ptrdiff_t(ua.size()), std::ptrdiff_t(ub.size()));
    for (std::size_t i : members)
      m(index_in(ua, basis.dets[i] & a_mask), index_in(ub, basis.dets[i] >> cut_mode)) += coeffs[i];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const SectorBasis block_basis_a = sector_basis(table_a, local_sector(table_a, ua[0]));
    const SectorBasis block_basis_b = sector_basis(table_b, local_sector(table_b, ub[0]));
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      const double lam = svd.singularValues()(i);
      if (lam < 1e-12) break;
      SectorSchmidtTerm term;
      term.value = lam;
      term.basis_a = block_basis_a;
      term.basis_b = block_basis_b;
      term.vec_a.assign(block_basis_a.dim(), 0.0);
      term.vec_b.assign(block_basis_b.dim(), 0.0);
      for (std::size_t r = 0; r < ua.size(); ++r) {
        const auto k = block_basis_a.index_of(ua[r]);
        if (k < 0) throw std::runtime_error("decompose_in_sector: determinant outside its sector");
        term.vec_a[k] = svd.matrixU()(std::ptrdiff_t(r), i);
      }
      for (std::size_t r = 0; r < ub.size(); ++r) {
        const auto k = block_basis_b.index_of(ub[r]);
        if (k < 0) throw std::runtime_error("decompose_in_sector: determinant outside its sector");
        term.vec_b[k] = svd.matrixV()(std::ptrdiff_t(r), i);
      }
      out.push_back(std::move(term));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SectorSchmidtTerm& x, const SectorSchmidtTerm& y) {
                     return x.value > y.value;
                   });
  return out;
}

}  // namespace fvqe
