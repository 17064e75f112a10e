#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "forgevqe/excitation.hpp"

namespace fvqe {

using cdouble = std::complex<double>;

/// Dense amplitude vector over the 2^n Jordan-Wigner computational basis.
///
/// Basis index is the occupation bitmask of the determinant: mode i maps to
/// bit i (little endian). A determinant |m> is the ascending product of
/// creation operators over its set bits applied to the vacuum, which fixes
/// every fermionic sign convention used below.
struct Statevector {
  int n_qubits = 0;
  std::vector<cdouble> amps;

  Statevector() = default;
  explicit Statevector(int n) : n_qubits(n), amps(std::size_t(1) << n, cdouble{0.0, 0.0}) {}

  std::size_t dim() const { return amps.size(); }
  double norm() const;
  void normalize();
};

/// Mode relabeling with per-mode phases. `target` must be a bijection; the
/// phase attached to a source mode multiplies every determinant occupying it.
struct ModePermutation {
  std::vector<int> target;
  std::vector<cdouble> phase;

  static ModePermutation identity(int n_modes);
  int size() const { return int(target.size()); }
};

/// Contiguous mode range [begin, end) of the global register.
struct ModeRange {
  int begin = 0;
  int end = 0;
  int width() const { return end - begin; }
};

/// Slater determinant with the given modes occupied (amplitude one).
Statevector from_slater(const std::vector<int>& occupied, int n_qubits);

/// <a|b> with conjugation on `a`.
cdouble inner(const Statevector& a, const Statevector& b);

/// exp(i theta T)|state>, applied matrix-free as 2x2 rotations on the
/// determinant pairs coupled by T, with Jordan-Wigner parity signs.
Statevector apply_excitation(const Statevector& state, const ExcitationGenerator& gen,
                             double theta);
void apply_excitation_inplace(Statevector& state, const ExcitationGenerator& gen, double theta);

/// T|state> (the Hermitian generator itself, not its exponential).
Statevector apply_generator(const Statevector& state, const ExcitationGenerator& gen);

/// Tensor product of factors over block-contiguous mode ranges. Blocks must be
/// disjoint, ascending, and cover [0, n). Each factor must have definite
/// particle number (support in a single Hamming-weight sector); with that and
/// the block-contiguous ordering no cross-block fermionic sign arises.
Statevector tensor_embed(const std::vector<std::pair<const Statevector*, ModeRange>>& factors);

/// Relabel modes. Each determinant maps to the permuted determinant times the
/// fermionic reordering parity of the permutation restricted to its occupied
/// modes and the product of per-mode phases over occupied modes.
Statevector permute_modes(const Statevector& state, const ModePermutation& perm);

// Determinant-level helpers shared by the sector-basis code paths.
namespace detail {
/// Parity (+1/-1) of occupied modes of `det` strictly between r and s (r < s).
int jw_between_sign(std::uint64_t det, int r, int s);
/// Sign of a+_p0 a+_p1 a_q0 a_q1 |det> for a determinant containing q0,q1 whose
/// remainder avoids p0,p1; the image determinant is (det \ Q) u P.
int jw_two_body_sign(std::uint64_t det, int p0, int p1, int q0, int q1);
/// Image determinant and amplitude factor of a mode permutation on one determinant.
std::pair<std::uint64_t, cdouble> permute_det(std::uint64_t det, const ModePermutation& perm);
}  // namespace detail

}  // namespace fvqe
