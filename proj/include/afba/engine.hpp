#pragma once

// Core splitting iteration for the monotone inclusion
//
//   0 in A z + M z + C z
//
// with A maximally monotone and block-separable, M a monotone linear map,
// and C cocoercive. One step computes
//
//   zbar = (H + A)^{-1} (H - M - C) z          (block forward-backward)
//   ztilde = zbar - z
//   alpha = lambda * ||ztilde||_P^2 / ||(H + M*) ztilde||_{S^{-1}}^2
//   z+ = z + alpha * S^{-1} (H + M*) ztilde
//
// where H = P + K with P symmetric strongly positive and K skew-adjoint,
// and S is a symmetric strongly positive step metric. The resolvent of
// H + A is evaluated by forward substitution over the blocks of A, which
// requires the block pattern of H to be lower triangular.

#include <functional>
#include <limits>

#include "afba/atoms.hpp"
#include "afba/linops.hpp"
#include "afba/report.hpp"

namespace afba {

// H, P, K, S with H = P + K. s_inv, when set, supplies a fast action of
// S^{-1}; otherwise solves against the dense factorization of S.
struct PreconditionerTriple {
  LinOp h;
  SymMetric p;
  LinOp k;
  SymMetric s;
  std::function<Vec(const Vec&)> s_inv;

  Vec apply_s_inv(const Vec& w) const { return s_inv ? s_inv(w) : s.solve(w); }
};

// Checks H = P + K, K skew-adjoint, and strong positivity of P and S.
// Throws std::invalid_argument on violation.
void validate_preconditioner(const PreconditionerTriple& pre,
                             double tol = 1e-9);

struct LambdaSchedule {
  enum class Kind {
    kConstant,
    kAdaptiveForwardReflect,  // lambda_n = 1 + (gamma ||M ztilde|| / ||ztilde||)^2
    kTable,
  };
  Kind kind = Kind::kConstant;
  double value = 1.0;
  double gamma = 0.0;  // adaptive rule
  std::vector<double> table;

  static LambdaSchedule constant(double v);
  static LambdaSchedule adaptive_forward_reflect(double gamma);
  static LambdaSchedule from_table(std::vector<double> values);
};

// Admissible relaxation upper bound: delta = 2 - 1/(2 beta_p) where beta_p
// is the cocoercivity of C in the P-norm (delta = 2 when C == 0, i.e.
// beta_p = +inf). Requires beta_p > 1/4.
double compute_delta(double beta_p);

// Relaxation that makes the corrected step collapse to a forward-reflected
// update of length gamma.
double fbfs_lambda(double gamma, double m_ztilde_norm, double ztilde_norm);

struct AfbaProblem {
  BlockAtom a;
  LinOp m;                             // null means M = 0
  std::function<Vec(const Vec&)> c;    // null means C = 0
  double beta_p = std::numeric_limits<double>::infinity();
};

// Forward substitution for zbar = (H + A)^{-1} rhs with H given densely and
// A block separable:
//   zbar_i = (H_ii + A_i)^{-1} (rhs_i - sum_{j<i} H_ij zbar_j)
// Diagonal blocks that are (numerically) c*I use the scalar resolvent; other
// symmetric diagonal blocks require the atom to support metric resolvents.
// Strictly upper-triangular blocks of H must vanish.
Vec resolvent_block_triangular(const DenseMatrix& h, const BlockAtom& a,
                               const Vec& rhs);

struct StepResult {
  Vec z_next;
  Vec zbar;
  double res_p = 0.0;    // ||ztilde||_P
  double alpha = 0.0;
  double lambda = 0.0;
};

// One iteration of the main scheme at the given relaxation.
StepResult afba_step(const AfbaProblem& prob, const PreconditionerTriple& pre,
                     const DenseMatrix& h_dense, const Vec& z, double lambda);

// Degenerate-metric path for C == 0, M skew-adjoint and folded into H
// (K = M, H = P + M, S = P with P only positive semidefinite):
//   zbar = (H + A)^{-1} P z,   z+ = z + lambda (zbar - z)
StepResult positive_p_step(const BlockAtom& a, const SymMetric& p,
                           const DenseMatrix& h_dense, const Vec& z,
                           double lambda);

struct EngineConfig {
  PreconditionerTriple pre;
  LambdaSchedule lambda;
  double delta = 2.0;          // relaxation ceiling; constant schedules are
                               // checked against [margin, delta - margin]
  bool positive_p_mode = false;
  double lambda_margin = 1e-6;
};

// Full solve loop. Stops when ||ztilde||_P <= tol_abs + tol_rel * ||z||_P.
SolveReport run(const AfbaProblem& prob, const EngineConfig& cfg, Vec z0,
                const RunOptions& opts);

}  // namespace afba
