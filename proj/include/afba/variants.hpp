#pragma once

// Named algorithm configurations. Each builder freezes the coupling
// parameters (theta, mu) and relaxation policy of a known scheme, checks
// the scheme's admissibility conditions, and returns a ready-to-run
// solver. Builders throw std::invalid_argument naming the violated
// inequality when the parameters are out of range.

#include <functional>
#include <string>

#include "afba/primal_dual.hpp"
#include "afba/report.hpp"

namespace afba {

struct VariantSolver {
  std::string name;
  std::size_t dim = 0;  // iterate dimension expected by run()
  // Populated by the saddle-point builders; lets callers reconstruct the
  // underlying product-space operators for cross-checks.
  bool has_pd = false;
  SaddleProblem prob;
  PDParams params;
  ValidityCertificate cert;
  std::function<SolveReport(const Vec& z0, const RunOptions&)> run;
};

// theta = 2: fully implicit coupling; the corrector collapses to
// z+ = z + lambda (zbar - z) and alpha == lambda.
VariantSolver build_condat_vu(const SaddleProblem& prob, double gamma1,
                              double gamma2, double lambda);

// theta = 0, mu = 1/2 with the relaxation chosen so alpha == 1:
//   x+ = xbar - g1 L* yt,  y+ = ybar + g2 L xt
VariantSolver build_bac(const SaddleProblem& prob, double gamma1,
                        double gamma2);

// theta = 1, mu = 1 with the relaxation chosen so alpha == 1:
//   x+ = xbar - g1 L* (y+ - y)
VariantSolver build_dst(const SaddleProblem& prob, double gamma1,
                        double gamma2);

// mu = 0, smooth terms absent, relaxation chosen so alpha == 1:
//   x+ = prox_{g1 f}(x - g1 L* y),  y+ = ybar + g2 (2-t) L (x+ - x)
VariantSolver build_mu0(const SaddleProblem& prob, double gamma1,
                        double gamma2, double theta);

// Forward-backward: zbar = prox_{gamma A}(z - gamma C z), z+ = z + lambda zt.
// Admissible for gamma in ]0, 4 beta[ with relaxation ceiling
// 2 - gamma/(2 beta).
VariantSolver build_fbs(const BlockAtom& a, const CocoMap& c, double gamma,
                        double lambda);

// Proximal point: forward-backward without the smooth term.
VariantSolver build_ppa(const BlockAtom& a, double gamma, double lambda);

// Forward-backward-forward: skew linear part handled by an extra forward
// sweep, z+ = zbar - gamma M (zbar - z); realized through the adaptive
// relaxation that makes the corrected steplength equal gamma.
VariantSolver build_fbfs(const BlockAtom& a, LinOp m, double gamma,
                         const CocoMap& c);

// Douglas-Rachford-type scheme with a forward term:
//   xbar = prox_{gamma D}(s - gamma F x)
//   r = prox_{gamma E}(t xbar + (2-t) x - s)
//   s+ = s + rho (r - xbar),  x+ = x + rho (xbar - x)
// State is [x; s] stacked. eta is the cocoercivity constant of F.
VariantSolver build_dr_forward(const BlockAtom& d, const BlockAtom& e,
                               const CocoMap& f, double gamma, double theta,
                               double rho);

// Three-block linearly constrained quadratic program
//   min sum_i 1/2 x_i'Q_i x_i + q_i'x_i  s.t.  L1 x1 + L2 x2 + L3 x3 = b
// with Q1 strongly positive and L2, L3 of full column rank.
struct Admm3Problem {
  DenseMatrix q1, q2, q3;
  Vec lin1, lin2, lin3;
  DenseMatrix l1, l2, l3;
  Vec b;
};

// Multiplier method for Admm3Problem: the first block minimizes the plain
// Lagrangian at y_n, the other two the augmented Lagrangian at the
// extrapolated multiplier (t-1) y_n + (2-t) y_{n-1}; x1 and x2 use only
// previous-iteration data and may be updated in either order. State is
// [x1; x2; x3; y] with y_{-1} taken equal to the initial y.
VariantSolver build_admm3(const Admm3Problem& prob, double gamma,
                          double theta);

}  // namespace afba
