#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forgevqe/fermion.hpp"
#include "forgevqe/optimizer.hpp"
#include "forgevqe/oracle.hpp"
#include "forgevqe/schmidt.hpp"

namespace fvqe {

struct GlobalSector {
  std::vector<std::pair<int, int>> tz_counts;  // (twice_tz, particle count)
  std::optional<int> twice_jz;
};

GlobalSector fh_sector(int n_up, int n_down);
GlobalSector nsm_sector(int z_valence, int n_valence, std::optional<int> twice_jz = {});

struct EngineOptions {
  int cuts = 0;  // 0 = plain loop, 1 = layer-1 forging, 2 = layered forging
  int max_iterations = 100;
  double grad_stop = 1e-6;
  double infidelity_stop = 1e-5;  // plain-run convergence threshold
  double bound_tolerance = 0.05;  // forged runs stop at I <= (1 + tol) * I_bound
  int chi_cut = 0;                // 0: keep the leading cluster pair from the spectrum
  bool lambda_variational = false;
  int lazy_full_update_interval = 1;  // l: full parameter update every l iterations
  int circuit_exclusion_period = 0;   // phi: skip the deepest circuit every phi-th iteration
  int threads = 1;
  MinimizeOptions inner;
  OracleOptions oracle;
};

struct IterationRecord {
  int iter = 0;
  double energy = 0.0;
  double eps_e = 0.0;
  double infidelity = 0.0;
  double max_gradient = 0.0;
  int circuit_id = -1;
  int generator_id = -1;  // index into the chosen circuit's pool
  long cnot_max = 0;
  std::vector<long> cnot_per_circuit;
  long wall_ms = 0;
};

/// Convergence-rate proxy: the per-state infidelity decay -ln(I) divided by
/// the number of states along the trace, the reference state included.
double convergence_rate(double infidelity, int n_iterations);

struct RunMetrics {
  double infidelity = 0.0;
  double eps_e = 0.0;
  double rate = 0.0;
};

/// I = 1 - |<exact|state>|^2 (projector overlap across a degenerate lowest
/// eigenspace), eps_E = |E - E_exact| / |E_exact|, and the rate above. The
/// state is given in the oracle's sector coordinates.
RunMetrics compute_metrics(const std::vector<cdouble>& state, double energy,
                           const GroundStateResult& oracle, int n_iterations);

/// One component of a second-layer expansion: a particle distribution over
/// the (bottom, top) sub-blocks and its angle-parameterized coefficient. The
/// two components of an expansion satisfy sqrt(b1^2 + b2^2) = sqrt(lambda).
struct SecondLayerTerm {
  std::pair<int, int> distribution;
  double coefficient = 0.0;
};

std::vector<SecondLayerTerm> expand_second_layer(double lambda,
                                                 const std::pair<int, int>& first_distribution,
                                                 const std::pair<int, int>& second_distribution,
                                                 double alpha);

/// One simulated subcircuit: a leaf block, a block-restricted pool, a shared
/// operator list, and one initial determinant per slot. Slots share every
/// parameter; same-sector forged terms stay orthogonal because their slots
/// start from orthogonal determinants and evolve under the same unitaries.
struct SubcircuitView {
  int leaf = 0;
  ModeRange range;
  std::vector<ExcitationGenerator> pool;
  std::vector<ExcitationGenerator> ops;
  std::vector<int> param_index;
  std::vector<std::uint64_t> init_dets;
};

struct ForgedTermView {
  int cluster = 0;
  double lambda = 0.0;
  int calibration_sign = 1;
  bool derived = false;
  int transform = -1;  // index into Model.symmetries for derived terms
};

struct EngineSnapshot {
  struct CircuitOps {
    std::vector<ExcitationGenerator> ops;
    std::vector<int> param_index;
    std::vector<std::uint64_t> init_dets;  // stored for validation on restore
  };
  std::vector<CircuitOps> circuits;
  std::vector<double> thetas;
  std::vector<double> alphas;
  std::optional<double> beta;
  std::vector<double> cluster_lambdas;
  std::vector<int> calibration_signs;
  std::vector<IterationRecord> records;
  std::string stop_reason;
};

/// The adaptive loop over a forged (or plain, cuts = 0) state. All runtime
/// state lives in symmetry-sector coordinates; the reference structure is
/// built once from the oracle Schmidt spectrum and stays fixed afterwards.
class Engine {
 public:
  Engine(const Model& model, const GlobalSector& sector, const EngineOptions& options);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;
  ~Engine();

  /// One adaptive iteration: scan candidate gradients, append the winner,
  /// optimize, record. Returns false once a stopping rule fired.
  bool step();
  void run();

  const std::vector<IterationRecord>& records() const;
  bool stopped() const;
  const std::string& stop_reason() const;

  double current_energy() const;
  double current_infidelity() const;
  double current_eps_e() const;
  double schmidt_bound() const;  // I_chi for forged runs, 0 for plain runs
  double oracle_energy() const;
  const GroundStateResult& oracle_result() const;
  const SectorBasis& global_basis() const;

  int n_circuits() const;
  SubcircuitView circuit(int id) const;
  std::vector<ForgedTermView> terms() const;
  long max_circuit_cnots() const;
  std::vector<long> per_circuit_cnots() const;

  /// Assembled state in global sector coordinates (normalized).
  std::vector<cdouble> assembled() const;
  /// Assembled state on the full register; small systems only.
  Statevector assembled_register() const;

  /// Directional derivative of the energy when exp(i theta gen) is appended to
  /// every slot of the given circuit (theta = 0), derived terms included.
  double candidate_gradient(int circuit_id, const ExcitationGenerator& gen) const;

  /// Pairwise absolute overlaps between distinct forged terms (upper bound).
  double max_term_overlap() const;

  /// Replace every slot state with its oracle Schmidt factor and recalibrate
  /// the derived-term signs; the assembled state then reproduces the truncated
  /// Schmidt expansion exactly. Schmidt-reconstruction checks use this.
  void set_factors_from_oracle();

  EngineSnapshot snapshot() const;
  void restore(const EngineSnapshot& snap);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RunResult {
  std::vector<IterationRecord> records;
  std::string stop_reason;
  double final_energy = 0.0;
  double final_infidelity = 0.0;
  double final_eps_e = 0.0;
  double oracle_energy = 0.0;
  double schmidt_bound = 0.0;
  double rate = 0.0;
  int n_qubits_per_circuit = 0;
};

RunResult run_adapt(const Model& model, const GlobalSector& sector, EngineOptions options);
RunResult run_edef(const Model& model, int cuts, const GlobalSector& sector, EngineOptions options);
RunResult summarize(const Engine& engine);

}  // namespace fvqe
