#pragma once

// Saddle-point specialization of the splitting engine for
//
//   minimize  f(x) + h(x) + (g [inf-conv] l)(L x)
//
// with f, g proximable, h smooth with cocoercive gradient, and l either
// absent (indicator of {0}) or smooth through its conjugate. In the
// product space z = (x, y) the iteration reads
//
//   xbar = prox_{g1 f}(x - g1 L* y - g1 grad_h(x))
//   ybar = prox_{g2 g*}(y + g2 L((1-t) x + t xbar) - g2 grad_l*(y))
//   x+ = x + alpha (xt - mu g1 (2-t) L* yt)
//   y+ = y + alpha (g2 (1-mu) (2-t) L xt + yt)
//
// where (g1, g2) are the primal/dual step sizes, t the coupling parameter
// in [0,2], mu in [0,1] blends the two corrector metrics, xt = xbar - x,
// yt = ybar - y, and alpha is the exact steplength for the blended metric.

#include <functional>
#include <string>
#include <vector>

#include "afba/atoms.hpp"
#include "afba/engine.hpp"
#include "afba/linops.hpp"
#include "afba/report.hpp"

namespace afba {

struct SaddleProblem {
  ProxAtom f;            // proximable primal term, dim nx
  ProxAtom g;            // proximable coupling term, dim ny (enters via g*)
  LinOp l;               // coupling operator, ny x nx
  CocoMap smooth_primal; // grad h (kZero when h == 0)
  CocoMap smooth_dual;   // grad l* (kZero when l is the indicator of {0})

  std::size_t nx() const { return f.dim; }
  std::size_t ny() const { return g.dim; }
  bool has_smooth_primal() const {
    return smooth_primal.kind != CocoKind::kZero;
  }
  bool has_smooth_dual() const { return smooth_dual.kind != CocoKind::kZero; }
};

struct PDParams {
  double gamma1 = 1.0;  // primal step
  double gamma2 = 1.0;  // dual step
  double theta = 2.0;   // coupling parameter in [0, 2]
  double mu = 1.0;      // corrector metric blend in [0, 1]
};

// Strong-positivity modulus of the primal-dual metric P:
//   tau = 1/2 (1/g1 + 1/g2) - 1/2 sqrt(t^2 ||L||^2 + (1/g1 - 1/g2)^2)
double tau_of(const PDParams& par, double l_norm);

// Cocoercivity of the smooth part in the P-norm. Returns +inf when both
// smooth terms vanish.
double beta_of(const SaddleProblem& prob, const PDParams& par, double l_norm);

struct InequalityCheck {
  std::string name;   // stable identifier, e.g. "p_strongly_positive"
  double lhs = 0.0;
  double rhs = 0.0;   // requirement is lhs > rhs (or >= for weak checks)
  bool strict = true;
  bool satisfied = false;
  double margin = 0.0;  // lhs - rhs
};

struct ValidityCertificate {
  bool valid = false;
  int case_id = 0;            // 1..4, least restrictive applicable regime
  std::string case_name;
  double l_norm = 0.0;
  double tau = 0.0;
  double beta_p = 0.0;        // cocoercivity in the P-norm
  double delta = 0.0;         // admissible relaxation ceiling
  bool degenerate_metric = false;  // case 4: P only positive semidefinite
  std::vector<InequalityCheck> checks;
  std::string first_violation;     // name of the first failed check
};

// Parameter validation. Picks the least restrictive applicable regime:
//   1: general (both smooth parts present or smooth dual present)
//   2: smooth dual absent
//   3: both smooth parts absent
//   4: both absent, t == 2 (degenerate metric, relaxation in ]0,2[)
// and reports every inequality with its margin.
ValidityCertificate validate(const SaddleProblem& prob, const PDParams& par);

// Dense realizations of the product-space operators and metrics for the
// chosen parameters, plus the closed-form corrector action.
struct PdFamily {
  std::size_t nx = 0, ny = 0;
  LinOp h, k, m;
  SymMetric p, s, d;  // metric, step metric, corrector-induced metric
  // Closed-form z |-> S^{-1}(H + M*) z:
  //   primal: xt - mu g1 (2-t) L* yt, dual: g2 (1-mu)(2-t) L xt + yt
  std::function<Vec(const Vec&)> s_inv_hm;
  std::function<Vec(const Vec&)> s_inv;

  PreconditionerTriple preconditioner() const;
};

PdFamily build_S_family(const SaddleProblem& prob, const PDParams& par);

// Scalar quantities of one iteration, inputs to the steplength and to the
// adaptive relaxation rules of the named special cases.
struct PdQuantities {
  double xt2 = 0.0;    // ||xt||^2
  double yt2 = 0.0;    // ||yt||^2
  double lxt2 = 0.0;   // ||L xt||^2
  double ltyt2 = 0.0;  // ||L* yt||^2
  double cross = 0.0;  // <xt, L* yt> = <L xt, yt>
};

// Exact steplength for the blended corrector metric:
//   alpha = lambda (xt2/g1 + yt2/g2 - t cross) / V with
//   V = xt2/g1 + yt2/g2 + (1-mu) g2 (1-t)(2-t) lxt2 + mu g1 (2-t) ltyt2
//       + 2 ((1-mu)(1-t) - mu) cross
double alpha_pd(const PDParams& par, const PdQuantities& q, double lambda);

// Relaxation rule evaluated from the per-iteration quantities.
using PdLambdaRule = std::function<double(const PdQuantities&)>;

struct PdStepInfo {
  double lambda = 0.0;
  double alpha = 0.0;
  double res_p = 0.0;  // ||(xt, yt)||_P
  PdQuantities q;
  Vec xt, yt;  // inner residuals xbar - x, ybar - y
};

// One iteration in place. L x and L* y are recomputed from the current
// point each step so trajectories match straightforward transcriptions of
// the special cases bit for bit.
class PdIterator {
 public:
  PdIterator(SaddleProblem prob, PDParams par);

  PdStepInfo step(PrimalDualPoint& z, const PdLambdaRule& lambda_rule);

 private:
  SaddleProblem prob_;
  PDParams par_;
  Vec lx_, lty_;
  bool cache_ok_ = false;
};

// Full solve loop over the closed-form iteration.
SolveReport pd_run(const SaddleProblem& prob, const PDParams& par,
                   const PdLambdaRule& lambda_rule, PrimalDualPoint z0,
                   const RunOptions& opts);

// Primal objective f(x) + h(x) + g(L x); +inf when an indicator is violated.
double pd_objective(const SaddleProblem& prob, const Vec& x);

}  // namespace afba
