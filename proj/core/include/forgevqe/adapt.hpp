#pragma once

#include <cstdint>
#include <vector>

#include "forgevqe/fermion.hpp"
#include "forgevqe/optimizer.hpp"

namespace fvqe {

/// Plain ansatz on the full register: exp(i theta_k T_k) ... exp(i theta_1 T_1)
/// applied to a reference determinant, newest operator acting last.
struct AnsatzCircuit {
  int n_qubits = 0;
  std::uint64_t reference = 0;
  std::vector<ExcitationGenerator> ops;
  std::vector<double> thetas;
};

Statevector evaluate(const AnsatzCircuit& circuit);

/// d/d theta <psi(theta)|H|psi(theta)> at theta = 0 for a candidate generator,
/// i.e. i <psi|[H, T]|psi> evaluated as -2 Im <H psi | T psi>.
double candidate_gradient(const Statevector& psi, const Hamiltonian& h,
                          const ExcitationGenerator& gen);

/// Analytic gradient of the circuit energy with respect to every parameter
/// (reverse sweep; one generator application per parameter).
std::vector<double> ansatz_gradient(const AnsatzCircuit& circuit, const Hamiltonian& h);

/// Quasi-Newton minimization of the circuit energy over all parameters,
/// warm-started from the thetas already stored in the circuit.
MinimizeResult optimize_parameters(AnsatzCircuit& circuit, const Hamiltonian& h,
                                   const MinimizeOptions& options = {});

}  // namespace fvqe
