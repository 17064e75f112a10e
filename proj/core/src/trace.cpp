#include "forgevqe/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fvqe {

std::string format_float(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string trace_csv(const std::vector<IterationRecord>& records) {
  if (records.empty()) throw std::invalid_argument("trace_csv: no records");
  std::ostringstream out;
  out << "iter,energy,eps_E,infidelity,max_gradient,circuit_id,generator_id,cnot_max,"
         "cnot_per_circuit,wall_ms\n";
  for (const auto& r : records) {
    out << r.iter << ',' << format_float(r.energy) << ',' << format_float(r.eps_e) << ','
        << format_float(r.infidelity) << ',' << format_float(r.max_gradient) << ','
        << r.circuit_id << ',' << r.generator_id << ',' << r.cnot_max << ",\"";
    for (std::size_t i = 0; i < r.cnot_per_circuit.size(); ++i) {
      if (i) out << ';';
      out << i << ':' << r.cnot_per_circuit[i];
    }
    out << "\"," << r.wall_ms << '\n';
  }
  return out.str();
}

void write_trace(const std::vector<IterationRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace file for writing: " + path);
  f << trace_csv(records);
  if (!f) throw std::runtime_error("failed writing trace file: " + path);
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<IterationRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("parse_trace_csv: empty input");
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_row(line);
    if (f.size() != 10) throw std::runtime_error("parse_trace_csv: malformed row: " + line);
    IterationRecord r;
    r.iter = std::stoi(f[0]);
    r.energy = std::stod(f[1]);
    r.eps_e = std::stod(f[2]);
    r.infidelity = std::stod(f[3]);
    r.max_gradient = std::stod(f[4]);
    r.circuit_id = std::stoi(f[5]);
    r.generator_id = std::stoi(f[6]);
    r.cnot_max = std::stol(f[7]);
    if (!f[8].empty()) {
      std::istringstream cs(f[8]);
      std::string item;
      while (std::getline(cs, item, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error("parse_trace_csv: malformed cnot field");
        r.cnot_per_circuit.push_back(std::stol(item.substr(colon + 1)));
      }
    }
    r.wall_ms = std::stol(f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string summary_csv(const RunResult& result, int cuts) {
  std::ostringstream out;
  out << "cuts,n_qubits,n_it,eps_E,I_conv,rate,stop_reason\n";
  out << cuts << ',' << result.n_qubits_per_circuit << ',' << (result.records.size() - 1) << ','
      << format_float(result.final_eps_e) << ',' << format_float(result.final_infidelity) << ','
      << format_float(result.rate) << ',' << result.stop_reason << '\n';
  return out.str();
}

}  // namespace fvqe
