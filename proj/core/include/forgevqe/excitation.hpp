#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace fvqe {

/// Hermitian hopping generator from the operator pool.
///
/// One-body:  T = i (a+_r a_s - a+_s a_r)                 with r < s
/// Two-body:  T = i (a+_p0 a+_p1 a_q1 a_q0 - h.c.)        with p0 < p1, q0 < q1
///            and (p0,p1) lexicographically below (q0,q1).
///
/// Indices refer to Jordan-Wigner modes of whatever register the generator is
/// applied to (global register for plain runs, block-local for forged subcircuits).
struct ExcitationGenerator {
  enum class Kind { OneBody, TwoBody };

  Kind kind = Kind::OneBody;
  std::array<int, 4> idx{-1, -1, -1, -1};

  static ExcitationGenerator one_body(int r, int s);
  static ExcitationGenerator two_body(int p0, int p1, int q0, int q1);

  int max_index() const;
  std::string to_string() const;

  friend auto operator<=>(const ExcitationGenerator&, const ExcitationGenerator&) = default;
};

}  // namespace fvqe
