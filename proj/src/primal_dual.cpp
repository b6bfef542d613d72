#include "afba/primal_dual.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace afba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return m;
}

DenseMatrix from_eigen(const Eigen::MatrixXd& m) {
  DenseMatrix a(static_cast<std::size_t>(m.rows()),
                static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      a(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return a;
}

void check_shapes(const SaddleProblem& prob) {
  if (!prob.l) throw std::invalid_argument("saddle problem: null coupling map");
  if (prob.l->cols() != prob.nx() || prob.l->rows() != prob.ny())
    throw std::invalid_argument("saddle problem: coupling shape mismatch");
  if (prob.smooth_primal.dim != prob.nx() &&
      prob.smooth_primal.kind != CocoKind::kZero)
    throw std::invalid_argument("saddle problem: smooth primal dim mismatch");
  if (prob.smooth_dual.dim != prob.ny() &&
      prob.smooth_dual.kind != CocoKind::kZero)
    throw std::invalid_argument("saddle problem: smooth dual dim mismatch");
}

// Assemble the 2x2 product-space matrix
//   [ a11 I + c11 B11 , c12 B12 ]
//   [ c21 B21         , a22 I + c22 B22 ]
// where the B blocks are supplied densely (or empty for zero).
DenseMatrix assemble(std::size_t nx, std::size_t ny, double a11,
                     const DenseMatrix& b11, double c11, const DenseMatrix& b12,
                     double c12, const DenseMatrix& b21, double c21, double a22,
                     const DenseMatrix& b22, double c22) {
  DenseMatrix m(nx + ny, nx + ny);
  for (std::size_t i = 0; i < nx; ++i) m(i, i) = a11;
  for (std::size_t i = 0; i < ny; ++i) m(nx + i, nx + i) = a22;
  if (c11 != 0.0)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nx; ++j) m(i, j) += c11 * b11(i, j);
  if (c12 != 0.0)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) m(i, nx + j) += c12 * b12(i, j);
  if (c21 != 0.0)
    for (std::size_t i = 0; i < ny; ++i)
      for (std::size_t j = 0; j < nx; ++j) m(nx + i, j) += c21 * b21(i, j);
  if (c22 != 0.0)
    for (std::size_t i = 0; i < ny; ++i)
      for (std::size_t j = 0; j < ny; ++j) m(nx + i, nx + j) += c22 * b22(i, j);
  return m;
}

}  // namespace

double tau_of(const PDParams& par, double l_norm) {
  const double ig1 = 1.0 / par.gamma1;
  const double ig2 = 1.0 / par.gamma2;
  const double t = par.theta;
  return 0.5 * (ig1 + ig2) -
         0.5 * std::sqrt(t * t * l_norm * l_norm + (ig1 - ig2) * (ig1 - ig2));
}

double beta_of(const SaddleProblem& prob, const PDParams& par, double l_norm) {
  const bool has_h = prob.has_smooth_primal();
  const bool has_l = prob.has_smooth_dual();
  if (!has_h && !has_l) return kInf;
  if (!has_l) {
    // Sharper bound available when only the primal smooth term is present.
    const double margin =
        1.0 / par.gamma1 -
        0.25 * par.gamma2 * par.theta * par.theta * l_norm * l_norm;
    return coco_beta(prob.smooth_primal) * margin;
  }
  const double bmin =
      std::min(has_h ? coco_beta(prob.smooth_primal) : kInf,
               coco_beta(prob.smooth_dual));
  return tau_of(par, l_norm) * bmin;
}

ValidityCertificate validate(const SaddleProblem& prob, const PDParams& par) {
  check_shapes(prob);
  ValidityCertificate cert;
  cert.l_norm = op_norm(*prob.l).value;
  cert.tau = tau_of(par, cert.l_norm);

  auto add = [&cert](const std::string& name, double lhs, double rhs,
                     bool strict) {
    InequalityCheck c;
    c.name = name;
    c.lhs = lhs;
    c.rhs = rhs;
    c.strict = strict;
    c.margin = lhs - rhs;
    c.satisfied = strict ? (lhs > rhs) : (lhs >= rhs);
    if (!c.satisfied && cert.first_violation.empty())
      cert.first_violation = name;
    cert.checks.push_back(c);
  };

  add("gamma1_positive", par.gamma1, 0.0, true);
  add("gamma2_positive", par.gamma2, 0.0, true);
  add("theta_lower", par.theta, 0.0, false);
  add("theta_upper", 2.0, par.theta, false);
  add("mu_lower", par.mu, 0.0, false);
  add("mu_upper", 1.0, par.mu, false);

  const bool params_ok = par.gamma1 > 0 && par.gamma2 > 0;
  const double g1 = par.gamma1, g2 = par.gamma2, t = par.theta;
  const double ln2 = cert.l_norm * cert.l_norm;
  const double p_margin =
      params_ok ? 1.0 / g1 - 0.25 * g2 * t * t * ln2 : -kInf;

  const bool has_h = prob.has_smooth_primal();
  const bool has_l = prob.has_smooth_dual();

  if (!has_h && !has_l && par.theta == 2.0) {
    cert.case_id = 4;
    cert.case_name = "degenerate_metric";
    cert.degenerate_metric = true;
    // P is allowed to lose strong positivity; only semidefiniteness is
    // needed, which for t = 2 reads 1/g1 - g2 ||L||^2 >= 0.
    add("p_positive", params_ok ? 1.0 / g1 - g2 * ln2 : -kInf, 0.0, false);
    cert.beta_p = kInf;
    cert.delta = 2.0;
  } else if (!has_h && !has_l) {
    cert.case_id = 3;
    cert.case_name = "prox_only";
    add("p_strongly_positive", p_margin, 0.0, true);
    cert.beta_p = kInf;
    cert.delta = 2.0;
  } else if (!has_l) {
    cert.case_id = 2;
    cert.case_name = "smooth_primal_only";
    add("p_strongly_positive", p_margin, 0.0, true);
    // Needs 1/g1 - (g2/4) t^2 ||L||^2 > (Lipschitz constant of grad h)/4.
    const double lip_h = 1.0 / coco_beta(prob.smooth_primal);
    add("cocoercivity_margin", p_margin, 0.25 * lip_h, true);
    if (p_margin > 0.25 * lip_h) {
      cert.beta_p = beta_of(prob, par, cert.l_norm);
      cert.delta = compute_delta(cert.beta_p);
    }
  } else {
    cert.case_id = 1;
    cert.case_name = "general";
    add("p_strongly_positive", p_margin, 0.0, true);
    const double bmin = std::min(
        has_h ? coco_beta(prob.smooth_primal) : kInf,
        coco_beta(prob.smooth_dual));
    // 4 tau min{beta} > 1, i.e. cocoercivity in the P-norm exceeds 1/4.
    add("cocoercivity_margin", 4.0 * cert.tau * bmin, 1.0, true);
    if (cert.tau > 0 && 4.0 * cert.tau * bmin > 1.0) {
      cert.beta_p = cert.tau * bmin;
      cert.delta = compute_delta(cert.beta_p);
    }
  }

  cert.valid = true;
  for (const auto& c : cert.checks) cert.valid = cert.valid && c.satisfied;
  return cert;
}

PreconditionerTriple PdFamily::preconditioner() const {
  return PreconditionerTriple{h, p, k, s, s_inv};
}

PdFamily build_S_family(const SaddleProblem& prob, const PDParams& par) {
  check_shapes(prob);
  const std::size_t nx = prob.nx(), ny = prob.ny();
  const double g1 = par.gamma1, g2 = par.gamma2;
  const double t = par.theta, mu = par.mu;
  if (!(g1 > 0 && g2 > 0))
    throw std::invalid_argument("build_S_family: step sizes must be positive");
  if (mu < 0 || mu > 1 || t < 0 || t > 2)
    throw std::invalid_argument("build_S_family: theta or mu out of range");

  const DenseMatrix ld = prob.l->to_dense();
  const DenseMatrix lt = transpose(ld);
  const DenseMatrix llt = matmul(ld, lt);  // L L*
  const DenseMatrix ltl = matmul(lt, ld);  // L* L
  const DenseMatrix none;

  PdFamily fam{
      nx,
      ny,
      // H = [[1/g1 I, 0], [-t L, 1/g2 I]]
      dense_op(assemble(nx, ny, 1.0 / g1, none, 0, none, 0, ld, -t, 1.0 / g2,
                        none, 0)),
      // K = [[0, t/2 L*], [-t/2 L, 0]]
      dense_op(assemble(nx, ny, 0, none, 0, lt, 0.5 * t, ld, -0.5 * t, 0, none,
                        0)),
      // M = [[0, L*], [-L, 0]]
      dense_op(assemble(nx, ny, 0, none, 0, lt, 1.0, ld, -1.0, 0, none, 0)),
      // P = H - K
      SymMetric(dense_op(assemble(nx, ny, 1.0 / g1, none, 0, lt, -0.5 * t, ld,
                                  -0.5 * t, 1.0 / g2, none, 0))),
      SymMetric(identity_op(nx + ny)),  // placeholder, replaced below
      SymMetric(identity_op(nx + ny)),  // placeholder, replaced below
      nullptr,
      nullptr,
  };

  // Step metrics: S1 matches the mu = 1 corrector, S2 the mu = 0 one; the
  // blend is the harmonic combination (mu S1^{-1} + (1-mu) S2^{-1})^{-1}.
  const DenseMatrix s1 =
      assemble(nx, ny, 1.0 / g1, none, 0, lt, 1.0 - t, ld, 1.0 - t, 1.0 / g2,
               llt, g1 * (1.0 - t) * (2.0 - t));
  const DenseMatrix s2 = assemble(nx, ny, 1.0 / g1, ltl, g2 * (2.0 - t), lt,
                                  -1.0, ld, -1.0, 1.0 / g2, none, 0);
  DenseMatrix s_dense;
  if (mu == 1.0) {
    s_dense = s1;
  } else if (mu == 0.0) {
    s_dense = s2;
  } else {
    const Eigen::MatrixXd e1 = to_eigen(s1), e2 = to_eigen(s2);
    const Eigen::MatrixXd blend =
        mu * e1.inverse() + (1.0 - mu) * e2.inverse();
    s_dense = from_eigen(blend.inverse());
  }
  fam.s = SymMetric(dense_op(s_dense));

  // D = (H + M*)* S^{-1} (H + M*) = mu D1 + (1 - mu) D2 in closed form.
  const DenseMatrix d1 = assemble(nx, ny, 1.0 / g1, none, 0, lt, -1.0, ld,
                                  -1.0, 1.0 / g2, llt, g1 * (2.0 - t));
  const DenseMatrix d2 =
      assemble(nx, ny, 1.0 / g1, ltl, g2 * (1.0 - t) * (2.0 - t), lt, 1.0 - t,
               ld, 1.0 - t, 1.0 / g2, none, 0);
  DenseMatrix d_dense(nx + ny, nx + ny);
  for (std::size_t i = 0; i < d_dense.data.size(); ++i)
    d_dense.data[i] = mu * d1.data[i] + (1.0 - mu) * d2.data[i];
  fam.d = SymMetric(dense_op(d_dense));

  SymMetric s_metric = fam.s;
  fam.s_inv = [s_metric](const Vec& w) { return s_metric.solve(w); };

  const LinOp lop = prob.l;
  fam.s_inv_hm = [lop, nx, ny, g1, g2, t, mu](const Vec& z) {
    PrimalDualPoint pd = pd_split(z, nx);
    Vec lty = lop->apply_adjoint(pd.y);
    Vec lx = lop->apply(pd.x);
    Vec out_x = pd.x;
    vaxpy(-mu * g1 * (2.0 - t), lty, out_x);
    Vec out_y = pd.y;
    vaxpy(g2 * (1.0 - mu) * (2.0 - t), lx, out_y);
    PrimalDualPoint out{std::move(out_x), std::move(out_y)};
    return pd_flatten(out);
  };
  return fam;
}

double alpha_pd(const PDParams& par, const PdQuantities& q, double lambda) {
  const double g1 = par.gamma1, g2 = par.gamma2;
  const double t = par.theta, mu = par.mu;
  const double num = q.xt2 / g1 + q.yt2 / g2 - t * q.cross;
  const double v = q.xt2 / g1 + q.yt2 / g2 +
                   (1.0 - mu) * g2 * (1.0 - t) * (2.0 - t) * q.lxt2 +
                   mu * g1 * (2.0 - t) * q.ltyt2 +
                   2.0 * ((1.0 - mu) * (1.0 - t) - mu) * q.cross;
  if (!(v > 0.0)) return 0.0;  // fixed point: nothing to correct
  return lambda * num / v;
}

PdIterator::PdIterator(SaddleProblem prob, PDParams par)
    : prob_(std::move(prob)), par_(par) {
  check_shapes(prob_);
}

PdStepInfo PdIterator::step(PrimalDualPoint& z, const PdLambdaRule& rule) {
  const double g1 = par_.gamma1, g2 = par_.gamma2;
  const double t = par_.theta, mu = par_.mu;

  // The four coupling products per iteration. Recomputing L x and L* y
  // from the current point (rather than updating them incrementally) keeps
  // the trajectory bit-identical to a straightforward transcription.
  lx_ = prob_.l->apply(z.x);
  lty_ = prob_.l->apply_adjoint(z.y);

  Vec vx = z.x;
  vaxpy(-g1, lty_, vx);
  if (prob_.has_smooth_primal())
    vaxpy(-g1, afba::apply(prob_.smooth_primal, z.x), vx);
  Vec xbar = resolvent(prob_.f, g1, vx);

  Vec lxbar = prob_.l->apply(xbar);
  Vec vy = z.y;
  vaxpy(g2 * (1.0 - t), lx_, vy);
  vaxpy(g2 * t, lxbar, vy);
  if (prob_.has_smooth_dual())
    vaxpy(-g2, afba::apply(prob_.smooth_dual, z.y), vy);
  Vec ybar = moreau_conjugate_prox(prob_.g, g2, vy);

  Vec xt = vsub(xbar, z.x);
  Vec yt = vsub(ybar, z.y);
  Vec lxt = vsub(lxbar, lx_);
  Vec ltyt = vsub(prob_.l->apply_adjoint(ybar), lty_);

  PdStepInfo info;
  info.q.xt2 = vnorm_sq(xt);
  info.q.yt2 = vnorm_sq(yt);
  info.q.lxt2 = vnorm_sq(lxt);
  info.q.ltyt2 = vnorm_sq(ltyt);
  info.q.cross = vdot(xt, ltyt);
  info.res_p = std::sqrt(std::max(
      info.q.xt2 / g1 + info.q.yt2 / g2 - t * info.q.cross, 0.0));
  info.lambda = rule(info.q);
  info.alpha = alpha_pd(par_, info.q, info.lambda);

  vaxpy(info.alpha, xt, z.x);
  if (mu * (2.0 - t) != 0.0) vaxpy(-info.alpha * mu * g1 * (2.0 - t), ltyt, z.x);
  vaxpy(info.alpha, yt, z.y);
  if ((1.0 - mu) * (2.0 - t) != 0.0)
    vaxpy(info.alpha * g2 * (1.0 - mu) * (2.0 - t), lxt, z.y);
  info.xt = std::move(xt);
  info.yt = std::move(yt);
  return info;
}

SolveReport pd_run(const SaddleProblem& prob, const PDParams& par,
                   const PdLambdaRule& rule, PrimalDualPoint z0,
                   const RunOptions& opts) {
  PdIterator it(prob, par);
  SolveReport rep;
  PrimalDualPoint z = std::move(z0);
  if (opts.record_iterates) rep.z_hist.push_back(pd_flatten(z));
  for (std::size_t n = 0; n < opts.max_iters; ++n) {
    PrimalDualPoint z_prev = opts.record_iterates ? z : PrimalDualPoint{};
    PdStepInfo info = it.step(z, rule);
    rep.iters = n + 1;
    if (opts.record_iterates) {
      vaxpy(1.0, info.xt, z_prev.x);
      vaxpy(1.0, info.yt, z_prev.y);
      rep.zbar_hist.push_back(pd_flatten(z_prev));
    }
    if (opts.record_history) {
      rep.lambda_hist.push_back(info.lambda);
      rep.alpha_hist.push_back(info.alpha);
      rep.res_hist.push_back(info.res_p);
    }
    if (!vfinite(z.x) || !vfinite(z.y) || !std::isfinite(info.res_p) ||
        !std::isfinite(info.alpha)) {
      rep.status = SolveStatus::kNumericFailure;
      rep.message = "non-finite iterate or step quantity";
      rep.z = pd_flatten(z);
      return rep;
    }
    if (opts.record_iterates) rep.z_hist.push_back(pd_flatten(z));
    // ||z||_P for the relative part of the stopping rule.
    Vec lx = prob.l->apply(z.x);
    const double zp = std::sqrt(std::max(
        vnorm_sq(z.x) / par.gamma1 + vnorm_sq(z.y) / par.gamma2 -
            par.theta * vdot(lx, z.y),
        0.0));
    if (info.res_p <= opts.tol_abs + opts.tol_rel * zp) {
      rep.status = SolveStatus::kConverged;
      rep.z = pd_flatten(z);
      return rep;
    }
  }
  rep.status = SolveStatus::kIterBudget;
  rep.z = pd_flatten(z);
  return rep;
}

double pd_objective(const SaddleProblem& prob, const Vec& x) {
  double v = eval(prob.f, x);
  if (prob.has_smooth_primal()) v += coco_value(prob.smooth_primal, x);
  Vec lx = prob.l->apply(x);
  return v + eval(prob.g, lx);
}

}  // namespace afba
