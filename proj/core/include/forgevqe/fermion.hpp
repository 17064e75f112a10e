#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forgevqe/statevector.hpp"

namespace fvqe {

/// Single-particle mode metadata. Quantum numbers are stored doubled so they
/// stay integral: twice_j, twice_m, twice_tz. The same fields cover both
/// models: a Fermi-Hubbard mode is a spin-1/2 state (twice_j = 1, twice_m = +1
/// for spin-up, -1 for spin-down, twice_tz = 0) and a shell-model mode carries
/// its orbital quantum numbers with twice_tz = -1 for protons and +1 for
/// neutrons, so T_z = (N - Z) / 2.
struct Mode {
  int twice_j = 0;
  int twice_m = 0;
  int twice_tz = 0;
  double spe = 0.0;   // single-particle energy (t units for FH, MeV for NSM)
  std::string label;  // orbital name or "site<k>"
  int layer1 = 0;     // first-cut membership: 0 = A, 1 = B
  int layer2 = 0;     // second-cut membership within the layer-1 block
};

struct ModeTable {
  std::vector<Mode> modes;

  int size() const { return int(modes.size()); }
  std::uint64_t mask_all() const { return (std::uint64_t(1) << size()) - 1; }
  /// Modes with the given twice_tz value.
  std::uint64_t mask_tz(int twice_tz) const;
  std::vector<int> distinct_tz() const;
  /// Sum of twice_m over the occupied modes of a determinant.
  int det_twice_jz(std::uint64_t det) const;

  /// Layer-1 blocks as contiguous ranges [A, B]; throws if not contiguous.
  std::pair<ModeRange, ModeRange> layer1_blocks() const;
  /// Layer-2 sub-blocks of a layer-1 block, again contiguous [bottom, top].
  std::pair<ModeRange, ModeRange> layer2_blocks(const ModeRange& layer1_block) const;

  /// Table restricted to a contiguous range, reindexed from zero.
  ModeTable slice(const ModeRange& range) const;
};

struct OneBodyTerm {
  int p = 0, q = 0;  // p <= q; the Hermitian partner q->p is implied
  double value = 0.0;
};

/// Antisymmetrized two-body matrix element v(i j; k l) attached to the
/// normal-ordered quartet a+_i a+_j a_l a_k, stored canonically with
/// i < j, k < l and (i,j) <= (k,l); the Hermitian partner is implied.
struct TwoBodyTerm {
  int i = 0, j = 0, k = 0, l = 0;
  double value = 0.0;
};

struct Hamiltonian {
  ModeTable modes;
  std::vector<OneBodyTerm> one_body;
  std::vector<TwoBodyTerm> two_body;

  int n_modes() const { return modes.size(); }
};

/// A mode relabeling that commutes with the Hamiltonian, usable to derive
/// forged terms from simulated ones.
struct NamedTransform {
  std::string name;
  ModePermutation perm;
};

struct Model {
  Hamiltonian h;
  std::string kind;  // "fh" or "nsm"
  bool pool_includes_one_body = false;
  std::vector<NamedTransform> symmetries;
};

struct FermiHubbardParams {
  int n_sites = 4;
  double t = 1.0;
  double t_m = 1.0;
  double u = 0.0;
};

/// 1D open chain with hopping -t, a tunable central bond -t_m, and on-site
/// repulsion U. Mode layout: site s (0-based) has its spin-up mode at 2s and
/// spin-down at 2s+1; the layer-1 cut separates the left and right half chains.
Model build_fh(const FermiHubbardParams& p);

/// Shell-model Hamiltonian from the interaction file grammar (MODE / SPE /
/// TBME / PARTITION directives, '#' comments). TBMEs are antisymmetrized
/// m-scheme matrix elements feeding the 1/4 sum convention above.
Model build_nsm(const std::string& interaction_text);
Model build_nsm_file(const std::string& path);

/// H|state> on the full register.
Statevector apply_hamiltonian(const Hamiltonian& h, const Statevector& state);

/// <state|H|state> / <state|state>.
double expectation(const Hamiltonian& h, const Statevector& state);

/// Closed-form diagonal matrix element <det|H|det>.
double diagonal_energy(const Hamiltonian& h, std::uint64_t det);

/// Symmetry-conserving pool over `allowed_modes` (defaults to every mode).
/// Generators conserve the particle count of every twice_tz species and the
/// total twice_m; the list is deduplicated and canonically ordered. One-body
/// generators are included only when the model asks for them.
std::vector<ExcitationGenerator> build_pool(const ModeTable& table, bool include_one_body,
                                            std::optional<std::uint64_t> allowed_modes = {});

}  // namespace fvqe
