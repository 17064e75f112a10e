#pragma once

#include <map>
#include <vector>

#include "forgevqe/excitation.hpp"

namespace fvqe {

/// CNOT cost convention: Jordan-Wigner-expand the generator into Pauli
/// strings; realizing exp of a weight-w string as a CNOT staircase costs
/// 2(w-1) CNOTs, and the generator costs the sum over its strings. One-body
/// generators expand into 2 strings and two-body generators with four
/// distinct indices into 8; generators with a shared index reduce to fewer,
/// shorter strings and are counted from their actual expansion. Absolute
/// numbers are convention-bound; only relative comparisons are meaningful.
int generator_cnots(const ExcitationGenerator& gen);

/// Same convention with a per-generator cache.
class CnotModel {
 public:
  int count(const ExcitationGenerator& gen) const;

 private:
  mutable std::map<ExcitationGenerator, int> cache_;
};

/// Sum of generator costs over an operator list (reference-state preparation
/// uses one-qubit gates only and contributes nothing).
long circuit_cnots(const std::vector<ExcitationGenerator>& ops);

}  // namespace fvqe
