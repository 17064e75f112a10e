#pragma once

namespace fvqe::tol {

// Central tolerance constants. Keep these in one place: several modules cross-check
// each other against them and tests pin the same values.
inline constexpr double norm = 1e-12;              // norm preservation after unitary ops
inline constexpr double oracle_equivalence = 1e-10; // matrix-free vs dense reference
inline constexpr double eigen_residual = 1e-9;      // ||H psi - E psi|| for ground states
inline constexpr double degeneracy_gap = 1e-9;      // eigenvalue gap treated as degenerate
inline constexpr double schmidt_rank = 1e-12;        // singular values above this count toward rank
inline constexpr double schmidt_cluster_rel_gap = 1e-6; // relative gap that separates clusters
inline constexpr double term_orthogonality = 1e-8;   // max overlap between distinct forged terms
inline constexpr double assembled_norm_hard = 1e-6;  // assembled norm deviation treated as an error

}  // namespace fvqe::tol
