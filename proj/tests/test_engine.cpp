#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "afba/engine.hpp"

using namespace afba;

namespace {

Vec randv(std::size_t n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  Vec v(n);
  for (auto& e : v) e = nd(rng);
  return v;
}

DenseMatrix scaled_identity(std::size_t n, double c) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = c;
  return m;
}

// H = P = c*Id, K = 0, S = Id: the metric used by the basic
// forward-backward instantiation.
PreconditionerTriple simple_pre(std::size_t n, double c) {
  LinOp h = scaling_op(n, c);
  return PreconditionerTriple{h, SymMetric(h), zero_op(n, n),
                              SymMetric(identity_op(n)),
                              [](const Vec& w) { return w; }};
}

}  // namespace

TEST_CASE("preconditioner validation catches each structural defect") {
  const std::size_t n = 3;
  CHECK_NOTHROW(validate_preconditioner(simple_pre(n, 2.0)));

  // H != P + K
  {
    auto pre = simple_pre(n, 2.0);
    pre.h = scaling_op(n, 2.5);
    CHECK_THROWS_AS(validate_preconditioner(pre), std::invalid_argument);
  }
  // K not skew
  {
    auto pre = simple_pre(n, 2.0);
    DenseMatrix k(n, n);
    k(0, 1) = 1.0;  // missing the -1 mirror entry
    pre.k = dense_op(k);
    pre.h = sum_op(scaling_op(n, 2.0), pre.k);
    CHECK_THROWS_AS(validate_preconditioner(pre), std::invalid_argument);
  }
  // P indefinite
  {
    DenseMatrix p = scaled_identity(n, 1.0);
    p(2, 2) = -0.5;
    LinOp pop = dense_op(p);
    PreconditionerTriple pre{pop, SymMetric(pop), zero_op(n, n),
                             SymMetric(identity_op(n)), nullptr};
    CHECK_THROWS_AS(validate_preconditioner(pre), std::invalid_argument);
  }
  // S only semidefinite
  {
    DenseMatrix s = scaled_identity(n, 1.0);
    s(1, 1) = 0.0;
    LinOp h = scaling_op(n, 2.0);
    PreconditionerTriple pre{h, SymMetric(h), zero_op(n, n),
                             SymMetric(dense_op(s)), nullptr};
    CHECK_THROWS_AS(validate_preconditioner(pre), std::invalid_argument);
  }
}

TEST_CASE("block triangular resolvent matches a direct joint solve") {
  // Two quadratic blocks coupled by a lower-triangular H: the forward
  // substitution must agree with solving the stacked system (H + Q) z = rhs
  // when both atoms are quadratics.
  std::mt19937_64 rng(5);
  const std::size_t n1 = 2, n2 = 3, n = n1 + n2;

  DenseMatrix h(n, n);
  h(0, 0) = 2.0; h(1, 1) = 2.0;            // top block: 2*Id fast path
  h(2, 2) = 3.0; h(3, 3) = 2.5; h(4, 4) = 3.0;
  h(2, 3) = h(3, 2) = 0.3;                  // bottom block: general symmetric
  h(2, 0) = 0.7; h(3, 1) = -0.4; h(4, 0) = 0.2;  // strictly lower coupling

  DenseMatrix q1 = scaled_identity(n1, 0.8);
  DenseMatrix q2 = scaled_identity(n2, 0.5);
  q2(0, 1) = q2(1, 0) = 0.1;

  BlockAtom a;
  a.blocks.push_back(make_quad_atom(q1, Vec{0.1, -0.2}));
  a.blocks.push_back(make_quad_atom(q2, Vec{0.0, 0.3, -0.1}));

  Vec rhs = randv(n, rng);
  Vec z = resolvent_block_triangular(h, a, rhs);

  DenseMatrix sys(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sys(i, j) = h(i, j);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n1; ++j) sys(i, j) += q1(i, j);
  for (std::size_t i = 0; i < n2; ++i)
    for (std::size_t j = 0; j < n2; ++j) sys(n1 + i, n1 + j) += q2(i, j);
  Vec lin = {0.1, -0.2, 0.0, 0.3, -0.1};

  // residual of (H + Q) z - (rhs - q)
  Vec r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r[i] += sys(i, j) * z[j];
    r[i] -= rhs[i] - lin[i];
  }
  CHECK(vnorm(r) <= 1e-12);
}

TEST_CASE("block triangular resolvent rejects upper coupling and bad atoms") {
  BlockAtom a;
  a.blocks.push_back(make_zero_atom(2));
  a.blocks.push_back(make_zero_atom(2));
  DenseMatrix h = scaled_identity(4, 1.0);
  h(0, 3) = 0.5;  // upper-block entry
  CHECK_THROWS_AS(resolvent_block_triangular(h, a, Vec(4, 1.0)),
                  std::invalid_argument);

  // l1 on a non-scalar diagonal block has no metric resolvent
  BlockAtom b;
  b.blocks.push_back(make_l1_atom(2, 1.0));
  DenseMatrix h2 = scaled_identity(2, 1.0);
  h2(0, 1) = h2(1, 0) = 0.2;
  CHECK_THROWS_AS(resolvent_block_triangular(h2, b, Vec(2, 1.0)),
                  std::invalid_argument);
  // ...but works on the scalar fast path
  DenseMatrix h3 = scaled_identity(2, 2.0);
  Vec out = resolvent_block_triangular(h3, b, Vec{4.0, -0.5});
  // zbar = prox_{1/2 * |.|}(rhs / 2)
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("a step in the identity metric is a relaxed forward-backward step") {
  // With H = P = Id, S = Id, M = 0, C = 0 the correction direction is
  // ztilde itself and alpha = lambda, so z+ = z + lambda (zbar - z).
  std::mt19937_64 rng(9);
  const std::size_t n = 4;
  AfbaProblem prob;
  prob.a.blocks.push_back(make_l1_atom(n, 0.6));

  auto pre = simple_pre(n, 1.0);
  DenseMatrix h = scaled_identity(n, 1.0);
  Vec z = randv(n, rng, 2.0);
  const double lambda = 1.3;
  StepResult st = afba_step(prob, pre, h, z, lambda);

  CHECK(st.alpha == doctest::Approx(lambda).epsilon(1e-12));
  Vec expect = resolvent(prob.a, 1.0, z);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(st.zbar[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(st.z_next[i] ==
          doctest::Approx(z[i] + lambda * (expect[i] - z[i])).epsilon(1e-12));
  }
  CHECK(st.res_p == doctest::Approx(vnorm(vsub(expect, z))).epsilon(1e-12));
}

TEST_CASE("skew K shifts the resolvent input but not the correction metric") {
  // With K skew and M = K the scheme reduces to a proximal point iteration
  // in the H metric; verify alpha stays at lambda when S^{-1}(H + M*) acts
  // as the identity on ztilde, i.e. when S = P and M* cancels K.
  std::mt19937_64 rng(21);
  const std::size_t n = 2;
  // P carries the symmetric coupling, K the skew part; their sum is lower
  // triangular so forward substitution over two scalar blocks applies.
  DenseMatrix pd(n, n);
  pd(0, 0) = pd(1, 1) = 1.5;
  pd(0, 1) = pd(1, 0) = -0.4;
  DenseMatrix kd(n, n);
  kd(0, 1) = 0.4; kd(1, 0) = -0.4;
  LinOp p = dense_op(pd);
  LinOp k = dense_op(kd);
  LinOp h = sum_op(p, k);
  PreconditionerTriple pre{h, SymMetric(p), k, SymMetric(p), nullptr};
  CHECK_NOTHROW(validate_preconditioner(pre));

  AfbaProblem prob;
  prob.a.blocks.push_back(make_sq_l2_atom(1, 0.7));
  prob.a.blocks.push_back(make_sq_l2_atom(1, 0.7));
  prob.m = k;

  DenseMatrix hd(n, n);
  hd(0, 0) = hd(1, 1) = 1.5;
  hd(1, 0) = -0.8;

  Vec z = randv(n, rng);
  StepResult st = afba_step(prob, pre, hd, z, 1.0);
  // (H + M*) ztilde = (P + K - K) ztilde = P ztilde, and S = P, so the
  // correction is exactly ztilde and alpha = lambda * ||zt||_P^2 / ||zt||_P^2.
  CHECK(st.alpha == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < n; ++i)
    CHECK(st.z_next[i] == doctest::Approx(st.zbar[i]).epsilon(1e-12));
}

TEST_CASE("adaptive relaxation makes the step a forward-reflected update") {
  // fbfs_lambda is chosen so that z+ = zbar - gamma M ztilde exactly.
  std::mt19937_64 rng(33);
  const std::size_t n = 3;
  const double gamma = 0.4;
  DenseMatrix md(n, n);
  md(0, 1) = 1.2; md(1, 0) = -1.2; md(1, 2) = -0.5; md(2, 1) = 0.5;
  LinOp m = dense_op(md);

  AfbaProblem prob;
  prob.a.blocks.push_back(make_l1_atom(n, 0.2));
  prob.m = m;

  auto pre = simple_pre(n, 1.0 / gamma);
  DenseMatrix h = scaled_identity(n, 1.0 / gamma);

  Vec z = randv(n, rng);
  // zbar = prox_{gamma g}(z - gamma M z)
  Vec rhs = z;
  vaxpy(-gamma, m->apply(z), rhs);
  Vec zbar = resolvent(prob.a, gamma, rhs);
  Vec zt = vsub(zbar, z);
  const double lam = fbfs_lambda(gamma, vnorm(m->apply(zt)), vnorm(zt));
  StepResult st = afba_step(prob, pre, h, z, lam);

  CHECK(st.alpha == doctest::Approx(gamma).epsilon(1e-12));
  Vec expect = zbar;
  vaxpy(-gamma, m->apply(zt), expect);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(st.z_next[i] == doctest::Approx(expect[i]).epsilon(1e-11));
}

TEST_CASE("relaxation ceiling shrinks with the cocoercivity constant") {
  CHECK(compute_delta(std::numeric_limits<double>::infinity()) == 2.0);
  CHECK(compute_delta(1.0) == doctest::Approx(1.5));
  CHECK(compute_delta(0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_delta(0.25), std::invalid_argument);
  CHECK_THROWS_AS(compute_delta(0.1), std::invalid_argument);
}

TEST_CASE("solve loop converges on a smooth strongly convex toy problem") {
  // min 1/2 ||x - b||^2 via C(x) = x - b (beta = 1) and A = 0.
  const std::size_t n = 5;
  Vec b = {1.0, -2.0, 0.5, 3.0, -1.0};
  const double gamma = 1.0;  // in ]0, 4 beta[

  AfbaProblem prob;
  prob.a.blocks.push_back(make_zero_atom(n));
  prob.c = [&b](const Vec& z) { return vsub(z, b); };
  prob.beta_p = 1.0 / gamma;  // beta in the P = gamma^{-1} Id metric

  EngineConfig cfg{simple_pre(n, 1.0 / gamma), LambdaSchedule::constant(1.0),
                   compute_delta(1.0 / gamma), false, 1e-6};
  RunOptions opts;
  opts.tol_abs = 1e-12;
  opts.tol_rel = 0.0;
  SolveReport rep = run(prob, cfg, Vec(n, 0.0), opts);
  REQUIRE(rep.status == SolveStatus::kConverged);
  CHECK(vnorm(vsub(rep.z, b)) <= 1e-10);
  CHECK(rep.lambda_hist.size() == std::size_t(rep.iters));
  CHECK(rep.alpha_hist.size() == std::size_t(rep.iters));
  // residual history is nonincreasing-ish and ends below tolerance
  CHECK(rep.res_hist.back() <= 1e-12);
}

TEST_CASE("constant relaxation outside the admissible window is rejected") {
  const std::size_t n = 2;
  AfbaProblem prob;
  prob.a.blocks.push_back(make_zero_atom(n));
  RunOptions opts;

  EngineConfig cfg{simple_pre(n, 1.0), LambdaSchedule::constant(2.0), 2.0,
                   false, 1e-6};
  CHECK_THROWS_AS(run(prob, cfg, Vec(n, 1.0), opts), std::invalid_argument);
  cfg.lambda = LambdaSchedule::constant(0.0);
  CHECK_THROWS_AS(run(prob, cfg, Vec(n, 1.0), opts), std::invalid_argument);
  cfg.lambda = LambdaSchedule::constant(-0.5);
  CHECK_THROWS_AS(run(prob, cfg, Vec(n, 1.0), opts), std::invalid_argument);
  cfg.lambda = LambdaSchedule::from_table({1.0, 2.5});
  CHECK_THROWS_AS(run(prob, cfg, Vec(n, 1.0), opts), std::invalid_argument);
}

TEST_CASE("semidefinite metric path runs the relaxed resolvent iteration") {
  // P positive semidefinite with a kernel direction; the degenerate path
  // must still drive the iteration: z+ = z + lambda ((H+A)^{-1} P z - z).
  const std::size_t n = 2;
  DenseMatrix pd(n, n);
  pd(0, 0) = 1.0;  // rank one, kernel = e2
  DenseMatrix hd = pd;
  SymMetric p(dense_op(pd));

  BlockAtom a;
  a.blocks.push_back(make_sq_l2_atom(n, 1.0));  // A = Id (gradient of sq)

  Vec z = {2.0, 3.0};
  StepResult st = positive_p_step(a, p, hd, z, 0.5);
  // zbar solves (H + Id) zbar = P z => zbar = (z1/2, 0)
  CHECK(st.zbar[0] == doctest::Approx(1.0));
  CHECK(st.zbar[1] == doctest::Approx(0.0));
  CHECK(st.z_next[0] == doctest::Approx(2.0 + 0.5 * (1.0 - 2.0)));
  CHECK(st.z_next[1] == doctest::Approx(3.0 + 0.5 * (0.0 - 3.0)));
}
