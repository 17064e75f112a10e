#include "forgevqe/adapt.hpp"

#include <cmath>
#include <stdexcept>

namespace fvqe {

Statevector evaluate(const AnsatzCircuit& circuit) {
  if (circuit.ops.size() != circuit.thetas.size())
    throw std::invalid_argument("evaluate: operator/parameter count mismatch");
  Statevector psi(circuit.n_qubits);
  psi.amps[circuit.reference] = 1.0;
  for (std::size_t k = 0; k < circuit.ops.size(); ++k)
    apply_excitation_inplace(psi, circuit.ops[k], circuit.thetas[k]);
  return psi;
}

double candidate_gradient(const Statevector& psi, const Hamiltonian& h,
                          const ExcitationGenerator& gen) {
  const Statevector hpsi = apply_hamiltonian(h, psi);
  const Statevector tpsi = apply_generator(psi, gen);
  return -2.0 * inner(hpsi, tpsi).imag();
}

std::vector<double> ansatz_gradient(const AnsatzCircuit& circuit, const Hamiltonian& h) {
  const int k = int(circuit.ops.size());
  std::vector<double> grad(k, 0.0);
  Statevector f = evaluate(circuit);
  Statevector b = apply_hamiltonian(h, f);
  const cdouble iu{0.0, 1.0};
  for (int j = k - 1; j >= 0; --j) {
    const Statevector tf = apply_generator(f, circuit.ops[j]);
    grad[j] = 2.0 * (iu * inner(b, tf)).real();
    apply_excitation_inplace(f, circuit.ops[j], -circuit.thetas[j]);
    apply_excitation_inplace(b, circuit.ops[j], -circuit.thetas[j]);
  }
  return grad;
}

MinimizeResult optimize_parameters(AnsatzCircuit& circuit, const Hamiltonian& h,
                                   const MinimizeOptions& options) {
  if (circuit.ops.empty()) throw std::invalid_argument("optimize_parameters: no parameters");
  AnsatzCircuit work = circuit;
  auto objective = [&](const std::vector<double>& x, std::vector<double>& g) {
    work.thetas = x;
    const Statevector psi = evaluate(work);
    g = ansatz_gradient(work, h);
    return expectation(h, psi);
  };
  auto result = minimize_bfgs(objective, circuit.thetas, options);
  circuit.thetas = result.x;
  return result;
}

}  // namespace fvqe
