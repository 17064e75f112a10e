#pragma once

// Internal: sparse sector-restricted Hamiltonian and Jordan-Wigner kernels on
// sector coordinate vectors. Shared by the oracle and the variational engines.

#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "forgevqe/oracle.hpp"

namespace fvqe::detail {

Eigen::SparseMatrix<double> build_sector_matrix(const Hamiltonian& h, const SectorBasis& basis);

/// exp(i theta T) applied in place to sector coordinates. Every determinant
/// pair coupled by T must stay inside the basis (the pool construction
/// guarantees this); a missing partner throws.
void sector_apply_excitation(std::vector<cdouble>& coeffs, const SectorBasis& basis,
                             const ExcitationGenerator& gen, double theta);

/// T|psi> in sector coordinates.
std::vector<cdouble> sector_apply_generator(const std::vector<cdouble>& coeffs,
                                            const SectorBasis& basis,
                                            const ExcitationGenerator& gen);

cdouble sector_inner(const std::vector<cdouble>& a, const std::vector<cdouble>& b);
double sector_norm(const std::vector<cdouble>& a);

}  // namespace fvqe::detail
