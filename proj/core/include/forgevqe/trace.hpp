#pragma once

#include <string>
#include <vector>

#include "forgevqe/forge.hpp"

namespace fvqe {

/// Fixed trace schema:
/// iter,energy,eps_E,infidelity,max_gradient,circuit_id,generator_id,cnot_max,cnot_per_circuit,wall_ms
/// Floats carry 12 significant digits; cnot_per_circuit is a quoted
/// "id:count;..." field.
std::string trace_csv(const std::vector<IterationRecord>& records);
void write_trace(const std::vector<IterationRecord>& records, const std::string& path);
std::vector<IterationRecord> parse_trace_csv(const std::string& text);

/// %.12g formatting used throughout the CSV outputs.
std::string format_float(double value);

/// Table-style summary row: cuts,n_qubits,n_it,eps_E,I_conv,rate,stop_reason.
std::string summary_csv(const RunResult& result, int cuts);

}  // namespace fvqe
