#include "afba/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace afba {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return m;
}

}  // namespace

SandwichConstants sandwich_constants(const SymMetric& p, const SymMetric& d) {
  if (p.dim() != d.dim())
    throw std::invalid_argument("sandwich_constants: dimension mismatch");
  if (!(p.min_eig() > 0))
    throw std::invalid_argument("sandwich_constants: P must be strongly positive");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      to_eigen(d.dense()), to_eigen(p.dense()), Eigen::EigenvaluesOnly);
  SandwichConstants c;
  c.c1 = ges.eigenvalues().minCoeff();
  c.c2 = ges.eigenvalues().maxCoeff();
  return c;
}

MonitorResult monitor_fejer(const SymMetric& s, const std::vector<Vec>& iterates,
                            const Vec& z_star, double slack) {
  MonitorResult r;
  r.values.reserve(iterates.size());
  for (const Vec& z : iterates) r.values.push_back(s.norm(vsub(z, z_star)));
  r.nonincreasing = true;
  for (std::size_t i = 1; i < r.values.size(); ++i) {
    const double jump = r.values[i] - r.values[i - 1];
    r.worst_violation = std::max(r.worst_violation, jump);
    if (jump > slack) r.nonincreasing = false;
  }
  return r;
}

MonitorResult monitor_dnorm(const SymMetric& d, const std::vector<Vec>& ztilde,
                            double slack) {
  MonitorResult r;
  r.values.reserve(ztilde.size());
  for (const Vec& zt : ztilde) r.values.push_back(std::max(d.quad(zt), 0.0));
  r.nonincreasing = true;
  for (std::size_t i = 1; i < r.values.size(); ++i) {
    const double jump = r.values[i] - r.values[i - 1];
    r.worst_violation = std::max(r.worst_violation, jump);
    if (jump > slack) r.nonincreasing = false;
  }
  return r;
}

bool little_o_trend(const std::vector<double>& series, double drop) {
  if (series.size() < 4) return false;
  double peak = 0.0;
  for (std::size_t n = 0; n < series.size(); ++n)
    peak = std::max(peak, (n + 1.0) * series[n]);
  if (peak == 0.0) return true;  // identically zero: trivially o(1/(n+1))
  double tail_max = 0.0;
  for (std::size_t n = series.size() / 2; n < series.size(); ++n)
    tail_max = std::max(tail_max, (n + 1.0) * series[n]);
  return tail_max * drop <= peak;
}

LinearRateFit linear_rate_fit(const std::vector<double>& residuals,
                              double floor) {
  LinearRateFit fit;
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < residuals.size(); ++n) {
    if (residuals[n] > floor) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(residuals[n]));
    }
  }
  fit.used = xs.size();
  if (xs.size() < 3) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return fit;
  const double slope = (m * sxy - sx * sy) / denom;
  fit.rate = std::exp(slope);
  const double ss_tot = syy - sy * sy / m;
  const double ss_res =
      ss_tot - slope * (sxy - sx * sy / m);
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

RanPProjection::RanPProjection(const SymMetric& p, double rel_cutoff)
    : p_(p.dense()) {
  const Eigen::MatrixXd pe = to_eigen(p_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pe);
  const double p_norm = p_.rows
                            ? std::max(std::abs(es.eigenvalues().minCoeff()),
                                       std::abs(es.eigenvalues().maxCoeff()))
                            : 0.0;
  const double cutoff = rel_cutoff * std::max(p_norm, 1e-300);
  const Eigen::MatrixXd& v = es.eigenvectors();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(pe.rows(), pe.cols());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > cutoff) {
      q += v.col(i) * v.col(i).transpose();
      ++rank_;
    }
  }
  q_ = DenseMatrix(p_.rows, p_.cols);
  for (std::size_t i = 0; i < q_.rows; ++i)
    for (std::size_t j = 0; j < q_.cols; ++j)
      q_(i, j) = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Vec RanPProjection::project(const Vec& z) const {
  Vec r(z.size());
  kernels::gemv(q_.rows, q_.cols, q_.data.data(), z.data(), r.data());
  return r;
}

Vec RanPProjection::apply_r(const Vec& z) const {
  Vec pz(z.size());
  kernels::gemv(p_.rows, p_.cols, p_.data.data(), z.data(), pz.data());
  Vec qz = project(z);
  // R z = P z + z - Q z
  Vec r = pz;
  vaxpy(1.0, z, r);
  vaxpy(-1.0, qz, r);
  return r;
}

double RanPProjection::r_norm_sq(const Vec& z) const {
  return std::max(vdot(z, apply_r(z)), 0.0);
}

RateBundle rate_bundle(const SymMetric& s, const SymMetric& p,
                       const SymMetric& d, const std::vector<Vec>& ztilde,
                       const Vec& z0, const Vec& z_star,
                       const std::vector<double>& lambda_hist, double delta,
                       double slack) {
  RateBundle rb;
  rb.sandwich = sandwich_constants(p, d);
  rb.tau_lower = std::numeric_limits<double>::infinity();
  for (double lam : lambda_hist)
    rb.tau_lower = std::min(rb.tau_lower, lam * (delta - lam));
  rb.s_dist0_sq = std::max(s.quad(vsub(z0, z_star)), 0.0);
  if (!(rb.tau_lower > 0))
    throw std::invalid_argument(
        "rate_bundle: relaxations must stay strictly inside ]0, delta[");
  rb.bound_holds = true;
  const double c2sq = rb.sandwich.c2 * rb.sandwich.c2;
  for (std::size_t n = 0; n < ztilde.size(); ++n) {
    const double dn = std::max(d.quad(ztilde[n]), 0.0);
    const double bn = c2sq / (rb.tau_lower * (n + 1.0)) * rb.s_dist0_sq;
    rb.dnorm_sq.push_back(dn);
    rb.bound.push_back(bn);
    rb.worst_margin = std::max(rb.worst_margin, dn - bn);
    if (dn > bn + slack) rb.bound_holds = false;
  }
  return rb;
}

RanPRate ran_p_rate(const SymMetric& p, const std::vector<Vec>& iterates,
                    const Vec& z_star, double eps, double slack) {
  if (!(eps > 0 && eps < 1.0 + 1e-12))
    throw std::invalid_argument("ran_p_rate: eps must lie in ]0, 1]");
  RanPRate rr;
  if (iterates.size() < 2) return rr;
  RanPProjection proj(p);
  const double tau = (eps * eps) / ((2.0 - eps) * (2.0 - eps));
  const double p_norm = std::max(std::abs(p.min_eig()), std::abs(p.max_eig()));
  const double dist0 = proj.r_norm_sq(proj.project(vsub(iterates[0], z_star)));
  rr.holds = true;
  for (std::size_t n = 0; n + 1 < iterates.size(); ++n) {
    const Vec step = vsub(p.apply(iterates[n + 1]), p.apply(iterates[n]));
    const double sn = vnorm_sq(step);
    const double bn = p_norm / (tau * (n + 1.0)) * dist0;
    rr.step_sq.push_back(sn);
    rr.bound.push_back(bn);
    rr.worst_margin = std::max(rr.worst_margin, sn - bn);
    if (sn > bn + slack) rr.holds = false;
  }
  return rr;
}

}  // namespace afba
