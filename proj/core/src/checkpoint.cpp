#include "forgevqe/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fvqe {

namespace {

constexpr int kFormatVersion = 1;

using json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json generator_to_json(const ExcitationGenerator& g) {
  json j = json::array();
  j.push_back(g.kind == ExcitationGenerator::Kind::OneBody ? 1 : 2);
  for (int i : g.idx) j.push_back(i);
  return j;
}

ExcitationGenerator generator_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw std::runtime_error("checkpoint: malformed generator");
  if (j[0].get<int>() == 1) return ExcitationGenerator::one_body(j[1], j[2]);
  return ExcitationGenerator::two_body(j[1], j[2], j[3], j[4]);
}

json record_to_json(const IterationRecord& r) {
  json j;
  j["iter"] = r.iter;
  j["energy"] = r.energy;
  j["eps_e"] = r.eps_e;
  j["infidelity"] = r.infidelity;
  j["max_gradient"] = r.max_gradient;
  j["circuit_id"] = r.circuit_id;
  j["generator_id"] = r.generator_id;
  j["cnot_max"] = r.cnot_max;
  j["cnot_per_circuit"] = r.cnot_per_circuit;
  j["wall_ms"] = r.wall_ms;
  return j;
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.iter = j.at("iter");
  r.energy = j.at("energy");
  r.eps_e = j.at("eps_e");
  r.infidelity = j.at("infidelity");
  r.max_gradient = j.at("max_gradient");
  r.circuit_id = j.at("circuit_id");
  r.generator_id = j.at("generator_id");
  r.cnot_max = j.at("cnot_max");
  r.cnot_per_circuit = j.at("cnot_per_circuit").get<std::vector<long>>();
  r.wall_ms = j.at("wall_ms");
  return r;
}

json state_to_json(const EngineSnapshot& s) {
  json state;
  json circuits = json::array();
  for (const auto& c : s.circuits) {
    json jc;
    json ops = json::array();
    for (const auto& op : c.ops) ops.push_back(generator_to_json(op));
    jc["ops"] = ops;
    jc["param_index"] = c.param_index;
    jc["init_dets"] = c.init_dets;
    circuits.push_back(jc);
  }
  state["circuits"] = circuits;
  state["thetas"] = s.thetas;
  state["alphas"] = s.alphas;
  state["cluster_lambdas"] = s.cluster_lambdas;
  if (s.beta)
    state["beta"] = *s.beta;
  else
    state["beta"] = nullptr;
  state["calibration_signs"] = s.calibration_signs;
  json records = json::array();
  for (const auto& r : s.records) records.push_back(record_to_json(r));
  state["records"] = records;
  state["stop_reason"] = s.stop_reason;
  return state;
}

}  // namespace

std::string checkpoint_json(const EngineSnapshot& snapshot) {
  json state = state_to_json(snapshot);
  const std::string payload = state.dump();
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["checksum"] = fnv1a(payload);
  doc["state"] = std::move(state);
  return doc.dump(2) + "\n";
}

void save_checkpoint(const EngineSnapshot& snapshot, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f << checkpoint_json(snapshot);
  if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

EngineSnapshot parse_checkpoint(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint: unparseable JSON: ") + e.what());
  }
  if (!doc.contains("format_version") || doc["format_version"].get<int>() != kFormatVersion)
    throw std::runtime_error("checkpoint: format version mismatch");
  if (!doc.contains("state") || !doc.contains("checksum"))
    throw std::runtime_error("checkpoint: missing state or checksum");
  const std::string payload = doc["state"].dump();
  if (fnv1a(payload) != doc["checksum"].get<std::uint64_t>())
    throw std::runtime_error("checkpoint: checksum mismatch, refusing partial load");

  const json& state = doc["state"];
  EngineSnapshot s;
  for (const auto& jc : state.at("circuits")) {
    EngineSnapshot::CircuitOps c;
    for (const auto& op : jc.at("ops")) c.ops.push_back(generator_from_json(op));
    c.param_index = jc.at("param_index").get<std::vector<int>>();
    c.init_dets = jc.at("init_dets").get<std::vector<std::uint64_t>>();
    s.circuits.push_back(std::move(c));
  }
  s.thetas = state.at("thetas").get<std::vector<double>>();
  s.alphas = state.at("alphas").get<std::vector<double>>();
  s.cluster_lambdas = state.at("cluster_lambdas").get<std::vector<double>>();
  if (!state.at("beta").is_null()) s.beta = state.at("beta").get<double>();
  s.calibration_signs = state.at("calibration_signs").get<std::vector<int>>();
  for (const auto& jr : state.at("records")) s.records.push_back(record_from_json(jr));
  s.stop_reason = state.at("stop_reason").get<std::string>();
  return s;
}

EngineSnapshot load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace fvqe
