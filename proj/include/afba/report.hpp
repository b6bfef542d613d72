#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "afba/linops.hpp"

namespace afba {

enum class SolveStatus {
  kConverged,
  kIterBudget,      // ran out of iterations before hitting tolerance
  kNumericFailure,  // non-finite quantity encountered
};

// Outcome of an iterative run plus per-iteration traces. Histories are
// recorded only when requested; they are what the CSV trace and the
// convergence-rate monitors consume.
struct SolveReport {
  SolveStatus status = SolveStatus::kIterBudget;
  std::size_t iters = 0;
  Vec z;  // final iterate

  std::vector<double> lambda_hist;
  std::vector<double> alpha_hist;
  std::vector<double> res_hist;  // ||zbar_n - z_n||_P per iteration
  std::vector<Vec> z_hist;       // iterates z_0..z_n (optional, heavier)
  std::vector<Vec> zbar_hist;    // inner points zbar_n (optional, heavier)

  std::string message;  // diagnostic detail on failure
};

struct RunOptions {
  std::size_t max_iters = 10000;
  double tol_rel = 1e-8;
  double tol_abs = 1e-10;
  bool record_history = true;
  bool record_iterates = false;
};

}  // namespace afba
