#include "afba/problems.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

namespace afba {

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                          std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  DenseMatrix m(rows, cols);
  for (auto& e : m.data) e = gauss(rng);
  return m;
}

// A' A / n + shift I: symmetric, eigenvalues bounded below by shift.
DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng, double shift) {
  DenseMatrix a = random_matrix(n, n, rng);
  DenseMatrix m = matmul(transpose(a), a);
  for (auto& e : m.data) e /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += shift;
  return m;
}

Vec random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vec v(n);
  for (auto& e : v) e = gauss(rng);
  return v;
}

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return m;
}

Vec from_eigen_vec(const Eigen::VectorXd& v) {
  Vec out(static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = v(static_cast<Eigen::Index>(i));
  return out;
}

// Accelerated proximal gradient for min q(x) + w ||x||_1 with q smooth,
// used as the independent oracle for the nonsmooth fixtures.
Vec prox_gradient_l1(const std::function<Vec(const Vec&)>& grad,
                     double lipschitz, double w, Vec x,
                     std::size_t iters) {
  const double step = 1.0 / lipschitz;
  Vec v = x;
  double t = 1.0;
  for (std::size_t k = 0; k < iters; ++k) {
    Vec g = grad(v);
    Vec u = v;
    vaxpy(-step, g, u);
    Vec x_next(u.size());
    const double thr = step * w;
    for (std::size_t i = 0; i < u.size(); ++i)
      x_next[i] = std::copysign(std::max(std::abs(u[i]) - thr, 0.0), u[i]);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    v = x_next;
    vaxpy((t - 1.0) / t_next, vsub(x_next, x), v);
    t = t_next;
    x = std::move(x_next);
  }
  return x;
}

// max-norm distance of -grad(x) from the subdifferential of w ||.||_1 at x.
double l1_stationarity(const Vec& x, const Vec& grad, double w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double viol;
    if (x[i] > 0)
      viol = std::abs(grad[i] + w);
    else if (x[i] < 0)
      viol = std::abs(grad[i] - w);
    else
      viol = std::max(std::abs(grad[i]) - w, 0.0);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace

LassoFixture gen_lasso(std::size_t m, std::size_t n, double reg,
                       std::uint64_t seed) {
  if (m == 0 || n == 0 || m > 200 || n > 200)
    throw std::invalid_argument("gen_lasso: dimensions must be in [1, 200]");
  if (!(reg > 0)) throw std::invalid_argument("gen_lasso: reg must be > 0");
  std::mt19937_64 rng(seed);
  LassoFixture fx;
  fx.a = random_matrix(m, n, rng, 1.0 / std::sqrt(static_cast<double>(m)));
  fx.b = random_vec(m, rng);
  fx.reg = reg;

  fx.saddle.f = make_l1_atom(n, reg);
  // g(u) = 1/2 u'u - <b, u>, so that g(Ax) + const is the data misfit.
  fx.saddle.g = [&] {
    DenseMatrix id(m, m);
    for (std::size_t i = 0; i < m; ++i) id(i, i) = 1.0;
    return make_quad_atom(std::move(id), vscale(-1.0, fx.b));
  }();
  fx.saddle.l = dense_op(fx.a);
  fx.saddle.smooth_primal = make_zero_coco(n);
  fx.saddle.smooth_dual = make_zero_coco(m);

  // Oracle: zero when the regularizer dominates the gradient at the
  // origin, otherwise a long accelerated proximal-gradient run.
  const CocoMap data = make_affine_coco(fx.a, fx.b);
  Vec g0 = afba::apply(data, Vec(n, 0.0));
  double g0_inf = 0.0;
  for (double v : g0) g0_inf = std::max(g0_inf, std::abs(v));
  if (reg > g0_inf) {
    fx.x_star = Vec(n, 0.0);
  } else {
    const double lip = 1.0 / coco_beta(data);
    fx.x_star = prox_gradient_l1(
        [&data](const Vec& x) { return afba::apply(data, x); }, lip, reg,
        Vec(n, 0.0), 20000);
  }
  fx.opt_residual = l1_stationarity(fx.x_star, afba::apply(data, fx.x_star), reg);
  if (fx.opt_residual > 1e-8)
    throw std::runtime_error("gen_lasso: oracle failed its optimality check");
  return fx;
}

QpFixture gen_strongly_convex_qp(std::size_t n, std::size_t m,
                                 std::uint64_t seed) {
  if (n == 0 || m == 0 || n > 200 || m > 200)
    throw std::invalid_argument(
        "gen_strongly_convex_qp: dimensions must be in [1, 200]");
  std::mt19937_64 rng(seed);
  QpFixture fx;
  DenseMatrix q = random_spd(n, rng, 0.5);
  Vec qlin = random_vec(n, rng);
  DenseMatrix r = random_spd(m, rng, 0.5);
  Vec rlin = random_vec(m, rng);
  DenseMatrix l = random_matrix(m, n, rng, 1.0 / std::sqrt(static_cast<double>(m)));

  fx.saddle.f = make_quad_atom(q, qlin);
  fx.saddle.g = make_quad_atom(r, rlin);
  fx.saddle.l = dense_op(l);
  fx.saddle.smooth_primal = make_zero_coco(n);
  fx.saddle.smooth_dual = make_zero_coco(m);

  // (Q + L'RL) x = -q - L'r ; y = R L x + r.
  const Eigen::MatrixXd qe = to_eigen(q), re = to_eigen(r), le = to_eigen(l);
  Eigen::VectorXd qvec =
      Eigen::Map<const Eigen::VectorXd>(qlin.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rvec =
      Eigen::Map<const Eigen::VectorXd>(rlin.data(), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd sys = qe + le.transpose() * re * le;
  Eigen::VectorXd rhs = -qvec - le.transpose() * rvec;
  Eigen::VectorXd xs = sys.ldlt().solve(rhs);
  Eigen::VectorXd ys = re * (le * xs) + rvec;
  fx.x_star = from_eigen_vec(xs);
  fx.y_star = from_eigen_vec(ys);

  // KKT: Qx + q + L'y = 0 and y = R L x + r.
  const double res1 = (qe * xs + qvec + le.transpose() * ys).norm();
  const double res2 = (ys - re * (le * xs) - rvec).norm();
  fx.kkt_residual = std::max(res1, res2);
  if (fx.kkt_residual > 1e-12)
    throw std::runtime_error(
        "gen_strongly_convex_qp: oracle failed its KKT check");
  return fx;
}

Admm3Fixture gen_admm3(std::size_t n1, std::size_t n2, std::size_t n3,
                       std::size_t m, std::uint64_t seed) {
  if (n1 == 0 || n2 == 0 || n3 == 0 || m == 0)
    throw std::invalid_argument("gen_admm3: empty block");
  if (m < n2 || m < n3)
    throw std::invalid_argument(
        "gen_admm3: constraint dimension must cover blocks 2 and 3 for full "
        "column rank");
  std::mt19937_64 rng(seed);
  Admm3Fixture fx;
  fx.prob.q1 = random_spd(n1, rng, 1.0);
  fx.prob.q2 = random_spd(n2, rng, 0.2);
  fx.prob.q3 = random_spd(n3, rng, 0.2);
  fx.prob.lin1 = random_vec(n1, rng);
  fx.prob.lin2 = random_vec(n2, rng);
  fx.prob.lin3 = random_vec(n3, rng);
  fx.prob.l1 = random_matrix(m, n1, rng, 0.5);
  fx.prob.l2 = random_matrix(m, n2, rng, 0.5);
  fx.prob.l3 = random_matrix(m, n3, rng, 0.5);
  fx.prob.b = random_vec(m, rng);

  // Dense KKT: [Q L'; L 0] [x; y] = [-q; b] with block-diagonal Q.
  const std::size_t n = n1 + n2 + n3;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.block(0, 0, n1, n1) = to_eigen(fx.prob.q1);
  kkt.block(n1, n1, n2, n2) = to_eigen(fx.prob.q2);
  kkt.block(n1 + n2, n1 + n2, n3, n3) = to_eigen(fx.prob.q3);
  Eigen::MatrixXd l(m, n);
  l.block(0, 0, m, n1) = to_eigen(fx.prob.l1);
  l.block(0, n1, m, n2) = to_eigen(fx.prob.l2);
  l.block(0, n1 + n2, m, n3) = to_eigen(fx.prob.l3);
  kkt.block(n, 0, m, n) = l;
  kkt.block(0, n, n, m) = l.transpose();
  Eigen::VectorXd rhs(n + m);
  rhs.segment(0, n1) =
      -Eigen::Map<const Eigen::VectorXd>(fx.prob.lin1.data(), n1);
  rhs.segment(n1, n2) =
      -Eigen::Map<const Eigen::VectorXd>(fx.prob.lin2.data(), n2);
  rhs.segment(n1 + n2, n3) =
      -Eigen::Map<const Eigen::VectorXd>(fx.prob.lin3.data(), n3);
  rhs.segment(n, m) = Eigen::Map<const Eigen::VectorXd>(fx.prob.b.data(), m);
  Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  fx.kkt_residual = (kkt * sol - rhs).norm();
  if (fx.kkt_residual > 1e-10)
    throw std::runtime_error("gen_admm3: oracle failed its KKT check");
  fx.x1_star = from_eigen_vec(sol.segment(0, n1));
  fx.x2_star = from_eigen_vec(sol.segment(n1, n2));
  fx.x3_star = from_eigen_vec(sol.segment(n1 + n2, n3));
  fx.y_star = from_eigen_vec(sol.segment(n, m));
  return fx;
}

DrPairFixture gen_dr_pair(std::size_t n, bool with_forward,
                          std::uint64_t seed) {
  if (n == 0 || n > 200)
    throw std::invalid_argument("gen_dr_pair: dimension must be in [1, 200]");
  std::mt19937_64 rng(seed);
  DrPairFixture fx;
  const double w = 0.3;
  fx.d.blocks.push_back(make_l1_atom(n, w));
  DenseMatrix q = random_spd(n, rng, 0.5);
  Vec qlin = random_vec(n, rng);
  fx.e.blocks.push_back(make_quad_atom(q, qlin));
  if (with_forward) {
    DenseMatrix a =
        random_matrix(n, n, rng, 0.5 / std::sqrt(static_cast<double>(n)));
    fx.f = make_affine_coco(std::move(a), random_vec(n, rng, 0.5));
    fx.eta = coco_beta(fx.f);
  } else {
    fx.f = make_zero_coco(n);
    fx.eta = std::numeric_limits<double>::infinity();
  }

  // Oracle: min w||x||_1 + 1/2 x'Qx + q'x + smooth(x) by accelerated
  // proximal gradient on the combined smooth part.
  const DenseMatrix qc = q;
  const Vec ql = qlin;
  const CocoMap fc = fx.f;
  auto grad = [&qc, &ql, &fc](const Vec& x) {
    Vec g(x.size());
    kernels::gemv(qc.rows, qc.cols, qc.data.data(), x.data(), g.data());
    vaxpy(1.0, ql, g);
    if (fc.kind != CocoKind::kZero) vaxpy(1.0, afba::apply(fc, x), g);
    return g;
  };
  double lip = op_norm(*dense_op(q)).value;
  if (with_forward) lip += 1.0 / fx.eta;
  fx.x_star = prox_gradient_l1(grad, lip, w, Vec(n, 0.0), 30000);
  fx.opt_residual = l1_stationarity(fx.x_star, grad(fx.x_star), w);
  if (fx.opt_residual > 1e-9)
    throw std::runtime_error("gen_dr_pair: oracle failed its optimality check");
  return fx;
}

}  // namespace afba
