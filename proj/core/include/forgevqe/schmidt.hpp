#pragma once

#include <span>
#include <vector>

#include "forgevqe/oracle.hpp"
#include "forgevqe/statevector.hpp"

namespace fvqe {

/// Qubit bipartition; the two lists must be disjoint and cover the register.
struct Bipartition {
  std::vector<int> block_a;
  std::vector<int> block_b;
};

/// Singular values (descending) with the matching left/right factor states on
/// the local |A| and |B| qubit registers. For a normalized input the squared
/// values sum to one within 1e-10 and either family is orthonormal.
struct SchmidtDecomposition {
  Bipartition cut;
  std::vector<double> values;
  std::vector<Statevector> left;
  std::vector<Statevector> right;

  int rank(double threshold = 1e-12) const;
};

/// SVD of the amplitude matrix reshaped to 2^|A| x 2^|B| (A-major, bit order
/// within each block following global qubit order).
SchmidtDecomposition decompose(const Statevector& state, const Bipartition& cut);

/// Von Neumann entropy in bits: -sum lambda_i^2 log2 lambda_i^2.
double entropy(const SchmidtDecomposition& sd);

/// I_n = 1 - sum_{i<=n} lambda_i^2, the best infidelity of an n-term forging.
double truncation_infidelity(const SchmidtDecomposition& sd, int n);

/// Cluster boundaries [first, last) of singular values separated by relative
/// gaps above `rel_gap`. Values below `floor` are dropped entirely.
std::vector<std::pair<int, int>> degeneracy_clusters(std::span<const double> values,
                                                     double rel_gap = 1e-6, double floor = 1e-12);

/// One Schmidt term of a sector-supported state: the factor states are kept as
/// coefficient vectors over block-local sector bases instead of dense
/// registers, which keeps large systems tractable.
struct SectorSchmidtTerm {
  double value = 0.0;
  SectorBasis basis_a;
  SectorBasis basis_b;
  std::vector<double> vec_a;
  std::vector<double> vec_b;
};

/// Schmidt decomposition across the cut [0, cut_mode) | [cut_mode, n) of a
/// state given in sector coordinates. Agrees with `decompose` on the embedded
/// register state; terms come back sorted by descending singular value.
std::vector<SectorSchmidtTerm> decompose_in_sector(const ModeTable& table,
                                                   const SectorBasis& basis,
                                                   std::span<const double> coeffs, int cut_mode);

}  // namespace fvqe
