#pragma once

// Seeded random problem generators with self-verifying solution oracles.
// Every generator is a pure function of its arguments (same seed, same
// fixture) and checks its own oracle against first-order optimality before
// returning; a failed check throws std::runtime_error.

#include <cstdint>

#include "afba/primal_dual.hpp"
#include "afba/variants.hpp"

namespace afba {

// min 1/2 ||A x - b||^2 + reg ||x||_1 in saddle form with f = reg ||.||_1,
// g(u) = 1/2 ||u||^2 - <b, u> (so g composed with A carries the data term)
// and L = A. When reg > ||A' b||_inf the solution is exactly zero.
struct LassoFixture {
  SaddleProblem saddle;
  DenseMatrix a;
  Vec b;
  double reg = 0.0;
  Vec x_star;
  double opt_residual = 0.0;  // max-norm of the subgradient condition
};
LassoFixture gen_lasso(std::size_t m, std::size_t n, double reg,
                       std::uint64_t seed);

// Smooth strongly convex saddle fixture: f = 1/2 x'Qx + q'x with Q strongly
// positive, g = 1/2 u'Ru + r'u with R strongly positive, coupling L. The
// unique saddle point solves (Q + L'RL) x = -q - L'r, y = R L x + r.
struct QpFixture {
  SaddleProblem saddle;
  Vec x_star, y_star;
  double kkt_residual = 0.0;
};
QpFixture gen_strongly_convex_qp(std::size_t n, std::size_t m,
                                 std::uint64_t seed);

// Three-block equality-constrained quadratic fixture for the multiplier
// scheme; Q1 strongly positive, L2 and L3 full column rank. Oracle from
// the dense KKT system.
struct Admm3Fixture {
  Admm3Problem prob;
  Vec x1_star, x2_star, x3_star, y_star;
  double kkt_residual = 0.0;
};
Admm3Fixture gen_admm3(std::size_t n1, std::size_t n2, std::size_t n3,
                       std::size_t m, std::uint64_t seed);

// Pair of proximable terms plus an optional cocoercive forward term for
// the Douglas-Rachford-type scheme: minimize d(x) + e(x) + smooth(x) with
// d = w ||.||_1, e strongly convex quadratic. Oracle by a high-accuracy
// proximal-gradient reference cross-checked against the optimality
// residual.
struct DrPairFixture {
  BlockAtom d, e;
  CocoMap f;      // kZero when with_forward is false
  double eta = 0.0;  // cocoercivity of f (+inf when absent)
  Vec x_star;
  double opt_residual = 0.0;
};
DrPairFixture gen_dr_pair(std::size_t n, bool with_forward,
                          std::uint64_t seed);

}  // namespace afba
