#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forgevqe/fermion.hpp"
#include "forgevqe/forge.hpp"

namespace fvqe {

/// Experiment description parsed from the line-oriented `key = value` config
/// format with [model] / [engine] / [sweep] / [output] sections. Configs are
/// fully validated before any compute; a rejected config produces no output.
struct ExperimentConfig {
  // [model]
  std::string model_type;  // "fh" or "nsm"
  FermiHubbardParams fh;
  int fh_n_up = 0;
  int fh_n_down = 0;
  std::string nsm_interaction_file;
  int nsm_z_valence = 0;
  int nsm_n_valence = 0;
  std::optional<int> twice_jz;

  // [engine]
  EngineOptions engine;

  // [sweep]
  std::vector<double> t_m_values;

  // [output]
  std::string output_dir = ".";
  std::string checkpoint_path;
  int checkpoint_every = 0;  // iterations between checkpoint writes; 0 = final only
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

Model build_model(const ExperimentConfig& config);
GlobalSector config_sector(const ExperimentConfig& config);

}  // namespace fvqe
