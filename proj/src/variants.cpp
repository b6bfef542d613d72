#include "afba/variants.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace afba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaMargin = 1e-6;

[[noreturn]] void reject(const std::string& builder, const std::string& name,
                         double lhs, double rhs) {
  std::ostringstream os;
  os << builder << ": violated " << name << " (" << lhs
     << " must exceed " << rhs << ")";
  throw std::invalid_argument(os.str());
}

void require_positive_steps(const std::string& builder, double g1, double g2) {
  if (!(g1 > 0)) reject(builder, "gamma1_positive", g1, 0.0);
  if (!(g2 > 0)) reject(builder, "gamma2_positive", g2, 0.0);
}

SolveReport run_pd_variant(const SaddleProblem& prob, const PDParams& par,
                           const PdLambdaRule& rule, const Vec& z0,
                           const RunOptions& opts) {
  if (z0.size() != prob.nx() + prob.ny())
    throw std::invalid_argument("variant run: initial point size mismatch");
  return pd_run(prob, par, rule, pd_split(z0, prob.nx()), opts);
}

}  // namespace

VariantSolver build_condat_vu(const SaddleProblem& prob, double gamma1,
                              double gamma2, double lambda) {
  VariantSolver v;
  v.name = "condat_vu";
  v.has_pd = true;
  v.prob = prob;
  v.params = {gamma1, gamma2, /*theta=*/2.0, /*mu=*/1.0};
  v.cert = validate(prob, v.params);
  if (!v.cert.valid)
    reject(v.name, v.cert.first_violation, 0.0, 0.0);
  if (v.cert.degenerate_metric) {
    if (!(lambda >= kLambdaMargin && lambda <= 2.0 - kLambdaMargin))
      reject(v.name, "lambda_range", lambda, kLambdaMargin);
  } else if (!(lambda >= kLambdaMargin &&
               lambda <= v.cert.delta - kLambdaMargin)) {
    reject(v.name, "lambda_range", v.cert.delta - kLambdaMargin, lambda);
  }
  v.dim = prob.nx() + prob.ny();
  const SaddleProblem p = prob;
  const PDParams par = v.params;
  v.run = [p, par, lambda](const Vec& z0, const RunOptions& opts) {
    return run_pd_variant(p, par, [lambda](const PdQuantities&) {
      return lambda;
    }, z0, opts);
  };
  return v;
}

VariantSolver build_bac(const SaddleProblem& prob, double gamma1,
                        double gamma2) {
  VariantSolver v;
  v.name = "bac";
  require_positive_steps(v.name, gamma1, gamma2);
  v.has_pd = true;
  v.prob = prob;
  v.params = {gamma1, gamma2, /*theta=*/0.0, /*mu=*/0.5};
  v.cert = validate(prob, v.params);

  const double l_norm = v.cert.l_norm;
  const double gap = 1.0 / gamma1 - gamma2 * l_norm * l_norm;
  const bool has_h = prob.has_smooth_primal();
  const bool has_l = prob.has_smooth_dual();
  if (has_l) {
    const double beta = beta_of(prob, v.params, l_norm);
    if (!(gap > 1.0 / (2.0 * beta * gamma1)))
      reject(v.name, "bac_step_bound", gap, 1.0 / (2.0 * beta * gamma1));
  } else if (has_h) {
    const double lip_h = 1.0 / coco_beta(prob.smooth_primal);
    if (!(gap > 0.5 * lip_h)) reject(v.name, "bac_step_bound", gap, 0.5 * lip_h);
  } else {
    if (!(gap > 0.0)) reject(v.name, "bac_step_bound", gap, 0.0);
  }

  v.dim = prob.nx() + prob.ny();
  const SaddleProblem p = prob;
  const PDParams par = v.params;
  const double g1 = gamma1, g2 = gamma2;
  // Relaxation that makes the corrected steplength exactly one.
  PdLambdaRule rule = [g1, g2](const PdQuantities& q) {
    const double base = q.xt2 / g1 + q.yt2 / g2;
    if (!(base > 0)) return 1.0;
    return 1.0 + (g2 * q.lxt2 + g1 * q.ltyt2) / base;
  };
  v.run = [p, par, rule](const Vec& z0, const RunOptions& opts) {
    return run_pd_variant(p, par, rule, z0, opts);
  };
  return v;
}

VariantSolver build_dst(const SaddleProblem& prob, double gamma1,
                        double gamma2) {
  VariantSolver v;
  v.name = "dst";
  require_positive_steps(v.name, gamma1, gamma2);
  v.has_pd = true;
  v.prob = prob;
  v.params = {gamma1, gamma2, /*theta=*/1.0, /*mu=*/1.0};
  v.cert = validate(prob, v.params);

  const double l_norm = v.cert.l_norm;
  const double ln2 = l_norm * l_norm;
  const bool has_h = prob.has_smooth_primal();
  const bool has_l = prob.has_smooth_dual();
  if (has_l) {
    const double beta = beta_of(prob, v.params, l_norm);
    if (!(2.0 * beta > 1.0)) reject(v.name, "dst_cocoercivity", 2.0 * beta, 1.0);
    const double c = 1.0 + 1.0 / (2.0 * (2.0 * beta - 1.0));
    const double bound = 1.0 / gamma1 - gamma2 * c * c * ln2;
    if (!(bound > 0.0)) reject(v.name, "dst_step_bound", bound, 0.0);
  } else if (has_h) {
    const double lip_h = 1.0 / coco_beta(prob.smooth_primal);
    const double prod = gamma1 * gamma2 * ln2;
    const double rhs = 2.0 - prod - std::sqrt(prod);
    if (!(lip_h * gamma1 < rhs))
      reject(v.name, "dst_step_bound", rhs, lip_h * gamma1);
  } else {
    const double gap = 1.0 / gamma1 - gamma2 * ln2;
    if (!(gap > 0.0)) reject(v.name, "dst_step_bound", gap, 0.0);
  }

  v.dim = prob.nx() + prob.ny();
  const SaddleProblem p = prob;
  const PDParams par = v.params;
  const double g1 = gamma1, g2 = gamma2;
  // lambda = 2 - (base - g1 ||L* yt||^2) / (base - <xt, L* yt>) makes the
  // corrected steplength exactly one.
  PdLambdaRule rule = [g1, g2](const PdQuantities& q) {
    const double base = q.xt2 / g1 + q.yt2 / g2;
    const double den = base - q.cross;
    if (!(den != 0.0)) return 1.0;
    return 2.0 - (base - g1 * q.ltyt2) / den;
  };
  v.run = [p, par, rule](const Vec& z0, const RunOptions& opts) {
    return run_pd_variant(p, par, rule, z0, opts);
  };
  return v;
}

VariantSolver build_mu0(const SaddleProblem& prob, double gamma1,
                        double gamma2, double theta) {
  VariantSolver v;
  v.name = "mu0";
  require_positive_steps(v.name, gamma1, gamma2);
  if (prob.has_smooth_primal() || prob.has_smooth_dual())
    throw std::invalid_argument("mu0: smooth terms are not supported");
  if (!(theta >= 0.0 && theta <= 2.0))
    reject(v.name, "theta_range", theta, 0.0);
  v.has_pd = true;
  v.prob = prob;
  v.params = {gamma1, gamma2, theta, /*mu=*/0.0};
  v.cert = validate(prob, v.params);

  const double ln2 = v.cert.l_norm * v.cert.l_norm;
  if (theta == 2.0) {
    const double gap = 1.0 / gamma1 - gamma2 * ln2;
    if (!(gap >= 0.0)) reject(v.name, "mu0_step_bound", gap, 0.0);
  } else {
    const double gap =
        1.0 / gamma1 - gamma2 * (theta * theta - 3.0 * theta + 3.0) * ln2;
    if (!(gap > 0.0)) reject(v.name, "mu0_step_bound", gap, 0.0);
  }

  v.dim = prob.nx() + prob.ny();
  const SaddleProblem p = prob;
  const PDParams par = v.params;
  const double g1 = gamma1, g2 = gamma2, t = theta;
  // lambda = V / (base - t cross) makes the corrected steplength one.
  PdLambdaRule rule = [g1, g2, t](const PdQuantities& q) {
    const double base = q.xt2 / g1 + q.yt2 / g2;
    const double num = base - t * q.cross;
    if (!(num != 0.0)) return 1.0;
    const double vq = base + g2 * (1.0 - t) * (2.0 - t) * q.lxt2 +
                      2.0 * (1.0 - t) * q.cross;
    return vq / num;
  };
  v.run = [p, par, rule](const Vec& z0, const RunOptions& opts) {
    return run_pd_variant(p, par, rule, z0, opts);
  };
  return v;
}

namespace {

// Shared machinery for the single-metric schemes: H = P = gamma^{-1} I,
// K = 0, S = I, with an optional skew linear part M.
VariantSolver build_resolvent_scheme(std::string name, const BlockAtom& a,
                                     LinOp m, double gamma,
                                     const CocoMap& c, double beta_p,
                                     LambdaSchedule schedule, double delta) {
  VariantSolver v;
  v.name = std::move(name);
  v.dim = a.dim();
  const std::size_t n = v.dim;
  AfbaProblem prob;
  prob.a = a;
  prob.m = std::move(m);
  if (c.kind != CocoKind::kZero) {
    CocoMap cc = c;
    prob.c = [cc](const Vec& z) { return afba::apply(cc, z); };
  }
  prob.beta_p = beta_p;

  EngineConfig cfg{
      PreconditionerTriple{scaling_op(n, 1.0 / gamma),
                           SymMetric(scaling_op(n, 1.0 / gamma)),
                           zero_op(n, n), SymMetric(identity_op(n)),
                           [](const Vec& w) { return w; }},
      std::move(schedule),
      delta,
      /*positive_p_mode=*/false,
      kLambdaMargin,
  };
  v.run = [prob, cfg](const Vec& z0, const RunOptions& opts) {
    return afba::run(prob, cfg, z0, opts);
  };
  return v;
}

}  // namespace

VariantSolver build_fbs(const BlockAtom& a, const CocoMap& c, double gamma,
                        double lambda) {
  const double beta = coco_beta(c);
  if (!(gamma > 0) || !(gamma < 4.0 * beta))
    reject("fbs", "gamma_range", 4.0 * beta, gamma);
  // Cocoercivity in the gamma^{-1} I metric is beta / gamma.
  const double beta_p = std::isinf(beta) ? kInf : beta / gamma;
  const double delta = compute_delta(beta_p);
  if (!(lambda >= kLambdaMargin && lambda <= delta - kLambdaMargin))
    reject("fbs", "lambda_range", delta - kLambdaMargin, lambda);
  return build_resolvent_scheme("fbs", a, nullptr, gamma, c, beta_p,
                                LambdaSchedule::constant(lambda), delta);
}

VariantSolver build_ppa(const BlockAtom& a, double gamma, double lambda) {
  if (!(gamma > 0)) reject("ppa", "gamma_positive", gamma, 0.0);
  if (!(lambda >= kLambdaMargin && lambda <= 2.0 - kLambdaMargin))
    reject("ppa", "lambda_range", 2.0 - kLambdaMargin, lambda);
  VariantSolver v = build_resolvent_scheme(
      "ppa", a, nullptr, gamma, make_zero_coco(a.dim()), kInf,
      LambdaSchedule::constant(lambda), 2.0);
  return v;
}

VariantSolver build_fbfs(const BlockAtom& a, LinOp m, double gamma,
                         const CocoMap& c) {
  if (!m) throw std::invalid_argument("fbfs: null linear part");
  const double m_norm = op_norm(*m).value;
  const double beta = coco_beta(c);
  double gamma_max;
  if (std::isinf(beta)) {
    gamma_max = m_norm > 0 ? 1.0 / m_norm : kInf;
  } else {
    if (!(2.0 * beta > 1.0)) reject("fbfs", "cocoercivity_margin", 2.0 * beta, 1.0);
    const double shrink = std::sqrt(1.0 - 1.0 / (2.0 * beta));
    gamma_max = m_norm > 0 ? shrink / m_norm : kInf;
  }
  if (!(gamma > 0) || !(gamma < gamma_max))
    reject("fbfs", "gamma_range", gamma_max, gamma);
  const double beta_p = std::isinf(beta) ? kInf : beta / gamma;
  return build_resolvent_scheme(
      "fbfs", a, std::move(m), gamma, c, beta_p,
      LambdaSchedule::adaptive_forward_reflect(gamma), kInf);
}

VariantSolver build_dr_forward(const BlockAtom& d, const BlockAtom& e,
                               const CocoMap& f, double gamma, double theta,
                               double rho) {
  VariantSolver v;
  v.name = "dr_forward";
  const std::size_t n = d.dim();
  if (e.dim() != n || (f.kind != CocoKind::kZero && f.dim != n))
    throw std::invalid_argument("dr_forward: dimension mismatch");
  const bool has_f = f.kind != CocoKind::kZero;
  const double eta = coco_beta(f);

  double rho_max;
  if (has_f) {
    if (!(theta >= 0.0 && theta < 2.0))
      reject(v.name, "theta_range", 2.0, theta);
    if (!(gamma > 0) || !(gamma < eta * (4.0 - theta * theta)))
      reject(v.name, "gamma_range", eta * (4.0 - theta * theta), gamma);
    rho_max = (4.0 - theta * theta - gamma / eta) /
              ((2.0 - theta) * (2.0 + std::sqrt(2.0 - theta)));
  } else if (theta == 2.0) {
    if (!(gamma > 0)) reject(v.name, "gamma_positive", gamma, 0.0);
    rho_max = 2.0;
  } else {
    if (!(theta >= 0.0 && theta < 2.0))
      reject(v.name, "theta_range", 2.0, theta);
    if (!(gamma > 0)) reject(v.name, "gamma_positive", gamma, 0.0);
    rho_max = 2.0 - std::sqrt(2.0 - theta);
  }
  if (!(rho > 0) || !(rho < rho_max)) reject(v.name, "rho_range", rho_max, rho);

  v.dim = 2 * n;
  const BlockAtom da = d, ea = e;
  const CocoMap fc = f;
  v.run = [da, ea, fc, gamma, theta, rho, n, has_f](const Vec& z0,
                                                    const RunOptions& opts) {
    if (z0.size() != 2 * n)
      throw std::invalid_argument("dr_forward: initial point size mismatch");
    Vec x(z0.begin(), z0.begin() + static_cast<std::ptrdiff_t>(n));
    Vec s(z0.begin() + static_cast<std::ptrdiff_t>(n), z0.end());
    SolveReport rep;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
      Vec u = s;
      if (has_f) vaxpy(-gamma, afba::apply(fc, x), u);
      Vec xbar = resolvent(da, gamma, u);
      Vec w = vscale(theta, xbar);
      vaxpy(2.0 - theta, x, w);
      vaxpy(-1.0, s, w);
      Vec r = resolvent(ea, gamma, w);
      const double res = std::sqrt(vnorm_sq(vsub(r, xbar)) +
                                   vnorm_sq(vsub(xbar, x)));
      vaxpy(rho, vsub(r, xbar), s);
      Vec xt = vsub(xbar, x);
      vaxpy(rho, xt, x);
      rep.iters = it + 1;
      if (opts.record_history) {
        rep.lambda_hist.push_back(rho);
        rep.alpha_hist.push_back(rho);
        rep.res_hist.push_back(res);
      }
      if (!vfinite(x) || !vfinite(s)) {
        rep.status = SolveStatus::kNumericFailure;
        rep.message = "non-finite iterate";
        break;
      }
      if (opts.record_iterates) {
        Vec z = x;
        z.insert(z.end(), s.begin(), s.end());
        rep.z_hist.push_back(z);
      }
      if (res <= opts.tol_abs +
                     opts.tol_rel * std::sqrt(vnorm_sq(x) + vnorm_sq(s))) {
        rep.status = SolveStatus::kConverged;
        break;
      }
    }
    rep.z = x;
    rep.z.insert(rep.z.end(), s.begin(), s.end());
    return rep;
  };
  return v;
}

VariantSolver build_admm3(const Admm3Problem& prob, double gamma,
                          double theta) {
  VariantSolver v;
  v.name = "admm3";
  const std::size_t n1 = prob.lin1.size(), n2 = prob.lin2.size(),
                    n3 = prob.lin3.size(), ny = prob.b.size();
  if (prob.q1.rows != n1 || prob.q2.rows != n2 || prob.q3.rows != n3 ||
      prob.l1.cols != n1 || prob.l2.cols != n2 || prob.l3.cols != n3 ||
      prob.l1.rows != ny || prob.l2.rows != ny || prob.l3.rows != ny)
    throw std::invalid_argument("admm3: shape mismatch");

  const double xi = min_eig_sym(prob.q1);
  if (!(xi > 0)) reject(v.name, "f1_strongly_convex", xi, 0.0);
  if (!(theta > 1.0 && theta < 2.0)) reject(v.name, "admm3_theta_range", theta, 1.0);
  const double l1_norm = op_norm(*dense_op(prob.l1)).value;
  const double bound = l1_norm > 0
                           ? xi * (2.0 - theta) * (theta - std::sqrt(2.0 - theta)) /
                                 (l1_norm * l1_norm)
                           : std::numeric_limits<double>::infinity();
  if (!(gamma > 0) || !(gamma < bound))
    reject(v.name, "admm3_step_bound", bound, gamma);
  if (!(min_eig_sym(matmul(transpose(prob.l2), prob.l2)) > 0))
    reject(v.name, "l2_full_rank", 0.0, 0.0);
  if (!(min_eig_sym(matmul(transpose(prob.l3), prob.l3)) > 0))
    reject(v.name, "l3_full_rank", 0.0, 0.0);

  v.dim = n1 + n2 + n3 + ny;
  // Precompute the three factorized subproblem systems.
  auto shifted = [gamma](const DenseMatrix& q, const DenseMatrix& l) {
    DenseMatrix m = matmul(transpose(l), l);
    for (auto& e : m.data) e *= gamma;
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] += q.data[i];
    return SymMetric(dense_op(m));
  };
  const SymMetric sys1{dense_op(prob.q1)};
  const SymMetric sys2 = shifted(prob.q2, prob.l2);
  const SymMetric sys3 = shifted(prob.q3, prob.l3);
  const Admm3Problem pr = prob;

  v.run = [pr, gamma, theta, sys1, sys2, sys3, n1, n2, n3, ny](
              const Vec& z0, const RunOptions& opts) {
    if (z0.size() != n1 + n2 + n3 + ny)
      throw std::invalid_argument("admm3: initial point size mismatch");
    auto slice = [&z0](std::size_t off, std::size_t len) {
      return Vec(z0.begin() + static_cast<std::ptrdiff_t>(off),
                 z0.begin() + static_cast<std::ptrdiff_t>(off + len));
    };
    Vec x1 = slice(0, n1), x2 = slice(n1, n2), x3 = slice(n1 + n2, n3);
    Vec y = slice(n1 + n2 + n3, ny);
    Vec y_prev = y;  // y_{-1} defaults to y_0

    auto lmul = [](const DenseMatrix& l, const Vec& x) {
      Vec r(l.rows);
      kernels::gemv(l.rows, l.cols, l.data.data(), x.data(), r.data());
      return r;
    };
    auto ltmul = [](const DenseMatrix& l, const Vec& w) {
      Vec r(l.cols);
      kernels::gemv_t(l.rows, l.cols, l.data.data(), w.data(), r.data());
      return r;
    };

    SolveReport rep;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
      Vec ybar = vscale(theta - 1.0, y);
      vaxpy(2.0 - theta, y_prev, ybar);

      // x1+ from the plain Lagrangian at y: Q1 x = -(q1 + L1' y)
      Vec rhs1 = vscale(-1.0, pr.lin1);
      vaxpy(-1.0, ltmul(pr.l1, y), rhs1);
      Vec x1n = sys1.solve(rhs1);

      // x2+ from the augmented Lagrangian at (x1, x3, ybar)
      Vec resid2 = lmul(pr.l1, x1);
      vaxpy(1.0, lmul(pr.l3, x3), resid2);
      vaxpy(-1.0, pr.b, resid2);
      Vec rhs2 = vscale(-1.0, pr.lin2);
      vaxpy(-1.0, ltmul(pr.l2, ybar), rhs2);
      vaxpy(-gamma, ltmul(pr.l2, resid2), rhs2);
      Vec x2n = sys2.solve(rhs2);

      // x3+ from the augmented Lagrangian at (x1+, x2+, ybar)
      Vec resid3 = lmul(pr.l1, x1n);
      vaxpy(1.0, lmul(pr.l2, x2n), resid3);
      vaxpy(-1.0, pr.b, resid3);
      Vec rhs3 = vscale(-1.0, pr.lin3);
      vaxpy(-1.0, ltmul(pr.l3, ybar), rhs3);
      vaxpy(-gamma, ltmul(pr.l3, resid3), rhs3);
      Vec x3n = sys3.solve(rhs3);

      Vec constraint = lmul(pr.l1, x1n);
      vaxpy(1.0, lmul(pr.l2, x2n), constraint);
      vaxpy(1.0, lmul(pr.l3, x3n), constraint);
      vaxpy(-1.0, pr.b, constraint);
      Vec yn = ybar;
      vaxpy(gamma, constraint, yn);

      const double res =
          std::sqrt(vnorm_sq(constraint) + vnorm_sq(vsub(yn, y)));
      y_prev = y;
      x1 = std::move(x1n);
      x2 = std::move(x2n);
      x3 = std::move(x3n);
      y = std::move(yn);

      rep.iters = it + 1;
      if (opts.record_history) {
        rep.lambda_hist.push_back(1.0);
        rep.alpha_hist.push_back(1.0);
        rep.res_hist.push_back(res);
      }
      if (!vfinite(x1) || !vfinite(x2) || !vfinite(x3) || !vfinite(y)) {
        rep.status = SolveStatus::kNumericFailure;
        rep.message = "non-finite iterate";
        break;
      }
      if (res <= opts.tol_abs + opts.tol_rel * vnorm(y)) {
        rep.status = SolveStatus::kConverged;
        break;
      }
    }
    rep.z = x1;
    rep.z.insert(rep.z.end(), x2.begin(), x2.end());
    rep.z.insert(rep.z.end(), x3.begin(), x3.end());
    rep.z.insert(rep.z.end(), y.begin(), y.end());
    return rep;
  };
  return v;
}

}  // namespace afba
