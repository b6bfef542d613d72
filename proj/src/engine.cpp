#include "afba/engine.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace afba {

namespace {

double max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

void validate_preconditioner(const PreconditionerTriple& pre, double tol) {
  if (!pre.h || !pre.k) throw std::invalid_argument("preconditioner: null H or K");
  const DenseMatrix h = pre.h->to_dense();
  const DenseMatrix k = pre.k->to_dense();
  const DenseMatrix& p = pre.p.dense();
  if (h.rows != h.cols || h.rows != p.rows || k.rows != h.rows ||
      k.cols != h.cols || pre.s.dim() != h.rows)
    throw std::invalid_argument("preconditioner: inconsistent shapes");
  const double scale = std::max({1.0, max_abs(h), max_abs(p), max_abs(k)});
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) {
      if (std::abs(h(i, j) - p(i, j) - k(i, j)) > tol * scale)
        throw std::invalid_argument("preconditioner: H != P + K");
      if (std::abs(k(i, j) + k(j, i)) > tol * scale)
        throw std::invalid_argument("preconditioner: K is not skew-adjoint");
    }
  if (!(pre.p.min_eig() > 0))
    throw std::invalid_argument("preconditioner: P is not strongly positive");
  if (!(pre.s.min_eig() > 0))
    throw std::invalid_argument("preconditioner: S is not strongly positive");
}

LambdaSchedule LambdaSchedule::constant(double v) {
  LambdaSchedule s;
  s.kind = Kind::kConstant;
  s.value = v;
  return s;
}

LambdaSchedule LambdaSchedule::adaptive_forward_reflect(double gamma) {
  if (!(gamma > 0))
    throw std::invalid_argument("lambda schedule: gamma must be > 0");
  LambdaSchedule s;
  s.kind = Kind::kAdaptiveForwardReflect;
  s.gamma = gamma;
  return s;
}

LambdaSchedule LambdaSchedule::from_table(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("lambda schedule: empty table");
  LambdaSchedule s;
  s.kind = Kind::kTable;
  s.table = std::move(values);
  return s;
}

double compute_delta(double beta_p) {
  if (std::isinf(beta_p)) return 2.0;
  if (!(beta_p > 0.25))
    throw std::invalid_argument(
        "compute_delta: cocoercivity in the P-norm must exceed 1/4");
  return 2.0 - 1.0 / (2.0 * beta_p);
}

double fbfs_lambda(double gamma, double m_ztilde_norm, double ztilde_norm) {
  if (ztilde_norm == 0.0) return 1.0;
  const double r = gamma * m_ztilde_norm / ztilde_norm;
  return 1.0 + r * r;
}

Vec resolvent_block_triangular(const DenseMatrix& h, const BlockAtom& a,
                               const Vec& rhs) {
  const std::size_t n = a.dim();
  if (h.rows != n || h.cols != n || rhs.size() != n)
    throw std::invalid_argument("block resolvent: shape mismatch");
  const double scale = std::max(1.0, max_abs(h));
  const double ztol = 1e-12 * scale;

  Vec zbar;
  zbar.reserve(n);
  std::size_t off = 0;
  for (std::size_t bi = 0; bi < a.blocks.size(); ++bi) {
    const ProxAtom& atom = a.blocks[bi];
    const std::size_t d = atom.dim;
    // r_i = rhs_i - sum_{j<i} H_ij zbar_j ; also verify H_ij == 0 for j > i.
    Vec r(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = rhs[off + i];
      const double* row = &h.data[(off + i) * h.cols];
      acc -= kernels::dot(row, zbar.data(), off);
      for (std::size_t j = off + d; j < n; ++j) {
        if (std::abs(row[j]) > ztol)
          throw std::invalid_argument(
              "block resolvent: H has a nonzero block above the diagonal");
      }
      r[i] = acc;
    }
    // Diagonal block H_ii: scaled identity fast path, else metric resolvent.
    bool scaled_identity = true;
    const double c0 = h(off, off);
    for (std::size_t i = 0; i < d && scaled_identity; ++i) {
      const double* row = &h.data[(off + i) * h.cols];
      for (std::size_t j = 0; j < d; ++j) {
        const double expect = (i == j) ? c0 : 0.0;
        if (std::abs(row[off + j] - expect) > ztol) {
          scaled_identity = false;
          break;
        }
      }
    }
    Vec zi;
    if (scaled_identity) {
      if (!(c0 > 0))
        throw std::invalid_argument(
            "block resolvent: diagonal block is not positive");
      zi = resolvent(atom, 1.0 / c0, vscale(1.0 / c0, r));
    } else {
      if (!supports_metric_resolvent(atom))
        throw std::invalid_argument(
            "block resolvent: non-scalar diagonal block with an atom that "
            "only supports scaled-identity metrics");
      DenseMatrix hii(d, d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) hii(i, j) = h(off + i, off + j);
      SymMetric hm(dense_op(hii));
      // resolvent_metric minimizes g(x) + 1/2||x - v||_H^2, i.e. solves
      // H x + grad g(x) = H v; here the data is r = H_ii v, so pass
      // v = H_ii^{-1} r.
      zi = resolvent_metric(atom, hm, hm.solve(r));
    }
    zbar.insert(zbar.end(), zi.begin(), zi.end());
    off += d;
  }
  return zbar;
}

namespace {

StepResult afba_step_dyn(const AfbaProblem& prob,
                         const PreconditionerTriple& pre,
                         const DenseMatrix& h_dense, const Vec& z,
                         const std::function<double(const Vec&)>& lambda_of) {
  const std::size_t n = z.size();
  // w = (H - M - C) z
  Vec w(n);
  kernels::gemv(h_dense.rows, h_dense.cols, h_dense.data.data(), z.data(),
                w.data());
  if (prob.m) {
    Vec mz = prob.m->apply(z);
    vaxpy(-1.0, mz, w);
  }
  if (prob.c) {
    Vec cz = prob.c(z);
    vaxpy(-1.0, cz, w);
  }
  StepResult out;
  out.zbar = resolvent_block_triangular(h_dense, prob.a, w);
  Vec ztilde = vsub(out.zbar, z);
  out.res_p = std::sqrt(std::max(pre.p.quad(ztilde), 0.0));
  out.lambda = lambda_of(ztilde);

  // u = (H + M*) ztilde, correction direction S^{-1} u.
  Vec u(n);
  kernels::gemv(h_dense.rows, h_dense.cols, h_dense.data.data(), ztilde.data(),
                u.data());
  if (prob.m) {
    Vec mt = prob.m->apply_adjoint(ztilde);
    vaxpy(1.0, mt, u);
  }
  Vec dir = pre.apply_s_inv(u);
  const double denom = vdot(u, dir);  // ||u||_{S^{-1}}^2
  out.z_next = z;
  if (denom > 0.0) {
    out.alpha = out.lambda * (out.res_p * out.res_p) / denom;
    vaxpy(out.alpha, dir, out.z_next);
  } else {
    out.alpha = 0.0;  // ztilde == 0: already a fixed point
  }
  return out;
}

}  // namespace

StepResult afba_step(const AfbaProblem& prob, const PreconditionerTriple& pre,
                     const DenseMatrix& h_dense, const Vec& z, double lambda) {
  return afba_step_dyn(prob, pre, h_dense, z,
                       [lambda](const Vec&) { return lambda; });
}

StepResult positive_p_step(const BlockAtom& a, const SymMetric& p,
                           const DenseMatrix& h_dense, const Vec& z,
                           double lambda) {
  StepResult out;
  Vec w = p.apply(z);
  out.zbar = resolvent_block_triangular(h_dense, a, w);
  Vec ztilde = vsub(out.zbar, z);
  out.res_p = std::sqrt(std::max(p.quad(ztilde), 0.0));
  out.lambda = lambda;
  out.alpha = lambda;
  out.z_next = z;
  vaxpy(lambda, ztilde, out.z_next);
  return out;
}

SolveReport run(const AfbaProblem& prob, const EngineConfig& cfg, Vec z0,
                const RunOptions& opts) {
  const double delta = cfg.delta;
  const double margin = cfg.lambda_margin;
  if (cfg.lambda.kind == LambdaSchedule::Kind::kConstant) {
    if (!(cfg.lambda.value >= margin && cfg.lambda.value <= delta - margin))
      throw std::invalid_argument(
          "run: constant relaxation outside [margin, delta - margin]");
  } else if (cfg.lambda.kind == LambdaSchedule::Kind::kTable) {
    for (double v : cfg.lambda.table)
      if (!(v >= 0.0 && v <= delta))
        throw std::invalid_argument("run: relaxation table entry outside [0, delta]");
  }
  if (!cfg.positive_p_mode) validate_preconditioner(cfg.pre);

  const DenseMatrix h_dense = cfg.pre.h->to_dense();
  SolveReport rep;
  rep.z = std::move(z0);
  if (opts.record_iterates) rep.z_hist.push_back(rep.z);

  for (std::size_t n = 0; n < opts.max_iters; ++n) {
    StepResult st;
    if (cfg.positive_p_mode) {
      double lam = cfg.lambda.value;
      if (cfg.lambda.kind == LambdaSchedule::Kind::kTable)
        lam = cfg.lambda.table[std::min(n, cfg.lambda.table.size() - 1)];
      st = positive_p_step(prob.a, cfg.pre.p, h_dense, rep.z, lam);
    } else {
      switch (cfg.lambda.kind) {
        case LambdaSchedule::Kind::kConstant:
          st = afba_step(prob, cfg.pre, h_dense, rep.z, cfg.lambda.value);
          break;
        case LambdaSchedule::Kind::kTable: {
          const double lam =
              cfg.lambda.table[std::min(n, cfg.lambda.table.size() - 1)];
          st = afba_step(prob, cfg.pre, h_dense, rep.z, lam);
          break;
        }
        case LambdaSchedule::Kind::kAdaptiveForwardReflect: {
          const double gamma = cfg.lambda.gamma;
          const LinOp& m = prob.m;
          st = afba_step_dyn(prob, cfg.pre, h_dense, rep.z,
                             [&](const Vec& ztilde) {
                               const double nz = vnorm(ztilde);
                               const double nm =
                                   m ? vnorm(m->apply(ztilde)) : 0.0;
                               return fbfs_lambda(gamma, nm, nz);
                             });
          break;
        }
      }
    }
    rep.iters = n + 1;
    if (opts.record_history) {
      rep.lambda_hist.push_back(st.lambda);
      rep.alpha_hist.push_back(st.alpha);
      rep.res_hist.push_back(st.res_p);
    }
    if (!vfinite(st.z_next) || !std::isfinite(st.res_p) ||
        !std::isfinite(st.alpha)) {
      rep.status = SolveStatus::kNumericFailure;
      rep.message = "non-finite iterate or step quantity";
      return rep;
    }
    rep.z = std::move(st.z_next);
    if (opts.record_iterates) {
      rep.z_hist.push_back(rep.z);
      rep.zbar_hist.push_back(st.zbar);
    }
    const double zn = std::sqrt(std::max(cfg.pre.p.quad(rep.z), 0.0));
    if (st.res_p <= opts.tol_abs + opts.tol_rel * zn) {
      rep.status = SolveStatus::kConverged;
      return rep;
    }
  }
  rep.status = SolveStatus::kIterBudget;
  return rep;
}

}  // namespace afba
