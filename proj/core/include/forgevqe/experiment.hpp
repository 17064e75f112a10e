#pragma once

#include <string>

#include "forgevqe/config.hpp"

namespace fvqe {

/// Run one subcommand (scan | schmidt | adapt | edef | oracle | resources)
/// against a parsed config, writing CSV artifacts into the output directory.
/// Returns 0 on success and throws on compute failure; config problems throw
/// std::invalid_argument (the CLI maps these to exit codes 1 and 2).
int run_experiment(const ExperimentConfig& config, const std::string& subcommand,
                   const std::string& resume_checkpoint = {});

}  // namespace fvqe
