#include "forgevqe/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "forgevqe/checkpoint.hpp"
#include "forgevqe/schmidt.hpp"
#include "forgevqe/trace.hpp"

namespace fvqe {

namespace {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << content;
  if (!f) throw std::runtime_error("failed writing output file: " + path);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

// Oracle ground state plus the layer-1 Schmidt spectrum.
struct OracleView {
  Model model;
  SectorBasis basis;
  GroundStateResult gs;
  std::vector<double> schmidt_values;
};

OracleView make_oracle(const ExperimentConfig& cfg) {
  OracleView v{build_model(cfg), {}, {}, {}};
  const auto sector = config_sector(cfg);
  v.basis = sector_basis(v.model.h.modes, species_sector(v.model.h.modes, sector.tz_counts,
                                                         sector.twice_jz));
  v.gs = ground_state(v.model.h, v.basis, cfg.engine.oracle);
  const auto [ra, rb] = v.model.h.modes.layer1_blocks();
  (void)rb;
  const auto terms = decompose_in_sector(v.model.h.modes, v.basis, v.gs.coeffs, ra.end);
  for (const auto& t : terms) v.schmidt_values.push_back(t.value);
  return v;
}

int cmd_oracle(const ExperimentConfig& cfg) {
  const auto v = make_oracle(cfg);
  std::ostringstream out;
  out << "energy,dimension,residual,gap,degenerate\n";
  out << format_float(v.gs.energy) << ',' << v.basis.dim() << ',' << format_float(v.gs.residual)
      << ',' << format_float(v.gs.gap) << ',' << (v.gs.degenerate ? 1 : 0) << '\n';
  write_file(out_path(cfg, "oracle.csv"), out.str());
  std::cout << "oracle energy " << format_float(v.gs.energy) << " (dimension " << v.basis.dim()
            << ", residual " << format_float(v.gs.residual) << ")\n";
  return 0;
}

int cmd_schmidt(const ExperimentConfig& cfg) {
  const auto v = make_oracle(cfg);
  double entropy_bits = 0.0;
  for (double lam : v.schmidt_values) {
    const double p = lam * lam;
    if (p > 0.0) entropy_bits -= p * std::log2(p);
  }
  std::ostringstream out;
  out << "index,lambda,lambda_sq,I_n\n";
  double kept = 0.0;
  for (std::size_t i = 0; i < v.schmidt_values.size(); ++i) {
    kept += v.schmidt_values[i] * v.schmidt_values[i];
    out << (i + 1) << ',' << format_float(v.schmidt_values[i]) << ','
        << format_float(v.schmidt_values[i] * v.schmidt_values[i]) << ','
        << format_float(1.0 - kept) << '\n';
  }
  write_file(out_path(cfg, "schmidt.csv"), out.str());
  std::cout << "entropy " << format_float(entropy_bits) << " bits over "
            << v.schmidt_values.size() << " singular values\n";
  return 0;
}

int cmd_scan(const ExperimentConfig& cfg) {
  if (cfg.model_type != "fh")
    throw std::invalid_argument("scan sweeps the central hopping and needs a fh model");
  if (cfg.t_m_values.empty())
    throw std::invalid_argument("scan needs [sweep] t_m_values");
  std::ostringstream out;
  out << "t_m,entropy,entropy_norm";
  for (int n = 1; n <= 8; ++n) out << ",I_" << n;
  out << '\n';
  const double s_max = double(cfg.fh.n_sites);
  for (double tm : cfg.t_m_values) {
    ExperimentConfig point = cfg;
    point.fh.t_m = tm;
    const auto v = make_oracle(point);
    double entropy_bits = 0.0, cum = 0.0;
    for (double lam : v.schmidt_values) {
      const double p = lam * lam;
      if (p > 0.0) entropy_bits -= p * std::log2(p);
    }
    out << format_float(tm) << ',' << format_float(entropy_bits) << ','
        << format_float(entropy_bits / s_max);
    for (int n = 1; n <= 8; ++n) {
      if (n <= int(v.schmidt_values.size()))
        cum += v.schmidt_values[n - 1] * v.schmidt_values[n - 1];
      out << ',' << format_float(1.0 - cum);
    }
    out << '\n';
  }
  write_file(out_path(cfg, "scan.csv"), out.str());
  return 0;
}

int run_engine_command(const ExperimentConfig& cfg, int cuts, const std::string& resume,
                       bool resources_breakdown) {
  ExperimentConfig run_cfg = cfg;
  run_cfg.engine.cuts = cuts;
  const Model model = build_model(run_cfg);
  Engine engine(model, config_sector(run_cfg), run_cfg.engine);

  if (!resume.empty()) engine.restore(load_checkpoint(resume));

  int since_checkpoint = 0;
  while (engine.step()) {
    ++since_checkpoint;
    if (!run_cfg.checkpoint_path.empty() && run_cfg.checkpoint_every > 0 &&
        since_checkpoint >= run_cfg.checkpoint_every) {
      save_checkpoint(engine.snapshot(), run_cfg.checkpoint_path);
      since_checkpoint = 0;
    }
  }
  if (!run_cfg.checkpoint_path.empty()) save_checkpoint(engine.snapshot(), run_cfg.checkpoint_path);

  const RunResult result = summarize(engine);
  write_trace(result.records, out_path(run_cfg, "trace.csv"));
  write_file(out_path(run_cfg, "summary.csv"), summary_csv(result, cuts));

  if (resources_breakdown) {
    std::ostringstream out;
    out << "iter,cnot_max";
    for (int c = 0; c < engine.n_circuits(); ++c) out << ",circuit_" << c;
    out << '\n';
    for (const auto& r : result.records) {
      out << r.iter << ',' << r.cnot_max;
      for (int c = 0; c < engine.n_circuits(); ++c)
        out << ',' << (c < int(r.cnot_per_circuit.size()) ? r.cnot_per_circuit[c] : 0);
      out << '\n';
    }
    write_file(out_path(run_cfg, "resources.csv"), out.str());
  }

  std::cout << "cuts=" << cuts << " n_qubits=" << result.n_qubits_per_circuit
            << " n_it=" << (result.records.size() - 1) << " eps_E=" << format_float(result.final_eps_e)
            << " I_conv=" << format_float(result.final_infidelity)
            << " r=" << format_float(result.rate) << " stop=" << result.stop_reason << '\n';
  return 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::string& subcommand,
                   const std::string& resume_checkpoint) {
  if (subcommand == "oracle") return cmd_oracle(config);
  if (subcommand == "schmidt") return cmd_schmidt(config);
  if (subcommand == "scan") return cmd_scan(config);
  if (subcommand == "adapt")
    return run_engine_command(config, 0, resume_checkpoint, false);
  if (subcommand == "edef") {
    const int cuts = config.engine.cuts >= 1 ? config.engine.cuts : 1;
    return run_engine_command(config, cuts, resume_checkpoint, false);
  }
  if (subcommand == "resources")
    return run_engine_command(config, config.engine.cuts, resume_checkpoint, true);
  throw std::invalid_argument("unknown subcommand: " + subcommand);
}

}  // namespace fvqe
