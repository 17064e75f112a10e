#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forgevqe/fermion.hpp"

namespace fvqe {

/// Occupation constraints defining a symmetry sector: a fixed particle count
/// per disjoint mode group (modes outside every group stay empty) and an
/// optional total angular-momentum projection (sum of twice_m).
struct SectorConstraints {
  std::vector<std::pair<std::uint64_t, int>> group_counts;
  std::optional<int> twice_jz;
};

/// Complete, deterministically ordered enumeration of the determinants in a sector.
struct SectorBasis {
  int n_modes = 0;
  SectorConstraints constraints;
  std::vector<std::uint64_t> dets;  // ascending bitmasks

  std::size_t dim() const { return dets.size(); }
  /// Index of a determinant, or -1 when it lies outside the sector.
  std::ptrdiff_t index_of(std::uint64_t det) const;
};

SectorBasis sector_basis(const ModeTable& table, const SectorConstraints& constraints);

/// Constraints for a particle-number sector: one group per distinct twice_tz value.
SectorConstraints species_sector(const ModeTable& table, const std::vector<std::pair<int, int>>& tz_counts,
                                 std::optional<int> twice_jz = {});

struct OracleOptions {
  std::size_t dense_cutoff = 4096;  // dense diagonalization up to this dimension
  int lanczos_max_iterations = 2000;
  double lanczos_tolerance = 1e-11;
};

struct GroundStateResult {
  double energy = 0.0;
  std::vector<double> coeffs;  // over the basis; the Hamiltonian is real symmetric
  double residual = 0.0;       // ||H psi - E psi||
  double gap = 0.0;            // distance to the next eigenvalue
  bool degenerate = false;
  /// Orthonormal vectors spanning the (near-)degenerate lowest eigenspace,
  /// including `coeffs` itself; empty when the ground state is unique.
  std::vector<std::vector<double>> degenerate_space;
};

/// Lowest eigenpair of H restricted to the sector. Dense below the cutoff,
/// Lanczos (fixed deterministic start vector, full reorthogonalization) above.
GroundStateResult ground_state(const Hamiltonian& h, const SectorBasis& basis,
                               const OracleOptions& options = {});

/// Scatter sector coefficients back into the full 2^n register.
Statevector embed_in_register(const SectorBasis& basis, std::span<const double> coeffs);
Statevector embed_in_register(const SectorBasis& basis, std::span<const cdouble> coeffs);

/// Convenience wrapper returning (energy, full-register state).
std::pair<double, Statevector> ground_state_register(const Hamiltonian& h, const SectorBasis& basis,
                                                     const OracleOptions& options = {});

}  // namespace fvqe
