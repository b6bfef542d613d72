#pragma once

// Convergence monitors and rate certificates evaluated on recorded
// trajectories: monotonicity of the step-metric distance to a solution,
// monotonicity and O(1/n) decay of the corrector-metric residual, fitted
// geometric rates, and the degenerate-metric rate through the projection
// onto the range of P.

#include <cstddef>
#include <vector>

#include "afba/linops.hpp"

namespace afba {

// Extremal generalized eigenvalues of the pencil (D, P): the tightest
// constants with c1 P <= D <= c2 P (in the semidefinite order).
struct SandwichConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};
SandwichConstants sandwich_constants(const SymMetric& p, const SymMetric& d);

struct MonitorResult {
  std::vector<double> values;
  bool nonincreasing = false;
  double worst_violation = 0.0;  // largest positive jump between entries
};

// ||z_n - z_star||_S along the trajectory; checks monotone decrease up to
// the slack.
MonitorResult monitor_fejer(const SymMetric& s, const std::vector<Vec>& iterates,
                            const Vec& z_star, double slack = 1e-10);

// ||ztilde_n||_D^2 for the recorded inner residuals; checks monotone
// decrease up to the slack.
MonitorResult monitor_dnorm(const SymMetric& d, const std::vector<Vec>& ztilde,
                            double slack = 1e-10);

// Heuristic o(1/(n+1)) detector: (n+1) * series_n over the last half of the
// trajectory must drop by at least `drop` from its overall maximum.
bool little_o_trend(const std::vector<double>& series, double drop = 10.0);

// Least-squares fit of log(residual_n) = log(c) + n log(rate). Entries at
// or below floor are ignored.
struct LinearRateFit {
  double rate = 1.0;
  double r2 = 0.0;
  std::size_t used = 0;
};
LinearRateFit linear_rate_fit(const std::vector<double>& residuals,
                              double floor = 1e-14);

// Orthogonal projection onto the range of a positive semidefinite P, with
// eigenvalues below rel_cutoff * ||P|| treated as zero, plus the companion
// metric R = P + Id - Q (which restricts to P on ran(P) and to the identity
// on its complement).
class RanPProjection {
 public:
  explicit RanPProjection(const SymMetric& p, double rel_cutoff = 1e-10);

  Vec project(const Vec& z) const;       // Q z
  Vec apply_r(const Vec& z) const;       // (P + Id - Q) z
  double r_norm_sq(const Vec& z) const;  // <z, R z>
  std::size_t rank() const { return rank_; }

 private:
  DenseMatrix q_;
  DenseMatrix p_;
  std::size_t rank_ = 0;
};

// O(1/(n+1)) certificate for the corrector-metric residual:
//   ||ztilde_n||_D^2 <= c2^2 / (tau (n+1)) * ||z0 - z_star||_S^2
// with tau = inf_n lambda_n (delta - lambda_n) and c2 from the sandwich.
struct RateBundle {
  SandwichConstants sandwich;
  double tau_lower = 0.0;
  double s_dist0_sq = 0.0;
  std::vector<double> dnorm_sq;
  std::vector<double> bound;
  bool bound_holds = false;
  double worst_margin = 0.0;  // max over n of dnorm_sq - bound
};
RateBundle rate_bundle(const SymMetric& s, const SymMetric& p,
                       const SymMetric& d, const std::vector<Vec>& ztilde,
                       const Vec& z0, const Vec& z_star,
                       const std::vector<double>& lambda_hist, double delta,
                       double slack = 1e-9);

// Degenerate-metric rate: for relaxations in [eps, 2 - eps],
//   ||P z_{n+1} - P z_n||^2 <= ||P|| / (tau (n+1)) * ||Q(z0 - z_star)||_R^2
// with tau = eps^2 / (2 - eps)^2.
struct RanPRate {
  std::vector<double> step_sq;
  std::vector<double> bound;
  bool holds = false;
  double worst_margin = 0.0;
};
RanPRate ran_p_rate(const SymMetric& p, const std::vector<Vec>& iterates,
                    const Vec& z_star, double eps, double slack = 1e-9);

}  // namespace afba
