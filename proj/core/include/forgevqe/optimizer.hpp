#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fvqe {

struct MinimizeOptions {
  int max_iterations = 200;
  double grad_tolerance = 1e-8;        // infinity norm
  double energy_rel_tolerance = 1e-12; // relative change between accepted steps
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string stop_reason;
};

/// Deterministic dense BFGS with a strong-Wolfe line search. The objective
/// must fill `grad` (same size as x) and return the value.
MinimizeResult minimize_bfgs(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& objective,
    std::vector<double> x0, const MinimizeOptions& options = {});

}  // namespace fvqe
