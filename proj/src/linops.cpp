#include "afba/linops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace afba {

double vnorm(const Vec& a) { return std::sqrt(vnorm_sq(a)); }

bool vfinite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Vec vadd(const Vec& a, const Vec& b) {
  Vec r = a;
  vaxpy(1.0, b, r);
  return r;
}

Vec vsub(const Vec& a, const Vec& b) {
  Vec r = a;
  vaxpy(-1.0, b, r);
  return r;
}

Vec vscale(double alpha, const Vec& a) {
  Vec r = a;
  kernels::scale(alpha, r.data(), r.size());
  return r;
}

Vec pd_flatten(const PrimalDualPoint& z) {
  Vec r = z.x;
  r.insert(r.end(), z.y.begin(), z.y.end());
  return r;
}

PrimalDualPoint pd_split(const Vec& z, std::size_t nx) {
  if (nx > z.size()) throw std::invalid_argument("pd_split: bad primal size");
  PrimalDualPoint p;
  p.x.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(nx));
  p.y.assign(z.begin() + static_cast<std::ptrdiff_t>(nx), z.end());
  return p;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      kernels::axpy(aik, &b.data[k * b.cols], &c.data[i * c.cols], b.cols);
    }
  return c;
}

Vec LinearMap::apply(const Vec& x) const {
  if (x.size() != cols()) throw std::invalid_argument("apply: size mismatch");
  Vec y(rows());
  apply(x.data(), y.data());
  return y;
}

Vec LinearMap::apply_adjoint(const Vec& x) const {
  if (x.size() != rows())
    throw std::invalid_argument("apply_adjoint: size mismatch");
  Vec y(cols());
  apply_adjoint(x.data(), y.data());
  return y;
}

DenseMatrix LinearMap::to_dense() const {
  DenseMatrix m(rows(), cols());
  Vec e(cols(), 0.0), col(rows());
  for (std::size_t j = 0; j < cols(); ++j) {
    e[j] = 1.0;
    apply(e.data(), col.data());
    e[j] = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) m(i, j) = col[i];
  }
  return m;
}

namespace {

class DenseOp final : public LinearMap {
 public:
  explicit DenseOp(DenseMatrix a) : a_(std::move(a)), at_(transpose(a_)) {}
  std::size_t rows() const override { return a_.rows; }
  std::size_t cols() const override { return a_.cols; }
  void apply(const double* x, double* y) const override {
    kernels::gemv(a_.rows, a_.cols, a_.data.data(), x, y);
  }
  void apply_adjoint(const double* x, double* y) const override {
    kernels::gemv(at_.rows, at_.cols, at_.data.data(), x, y);
  }

 private:
  DenseMatrix a_, at_;
};

class ScalingOp final : public LinearMap {
 public:
  ScalingOp(std::size_t n, double alpha) : n_(n), alpha_(alpha) {}
  std::size_t rows() const override { return n_; }
  std::size_t cols() const override { return n_; }
  void apply(const double* x, double* y) const override {
    for (std::size_t i = 0; i < n_; ++i) y[i] = alpha_ * x[i];
  }
  void apply_adjoint(const double* x, double* y) const override {
    apply(x, y);
  }

 private:
  std::size_t n_;
  double alpha_;
};

class ZeroOp final : public LinearMap {
 public:
  ZeroOp(std::size_t r, std::size_t c) : r_(r), c_(c) {}
  std::size_t rows() const override { return r_; }
  std::size_t cols() const override { return c_; }
  void apply(const double*, double* y) const override {
    for (std::size_t i = 0; i < r_; ++i) y[i] = 0.0;
  }
  void apply_adjoint(const double*, double* y) const override {
    for (std::size_t i = 0; i < c_; ++i) y[i] = 0.0;
  }

 private:
  std::size_t r_, c_;
};

class AdjointOp final : public LinearMap {
 public:
  explicit AdjointOp(LinOp a) : a_(std::move(a)) {}
  std::size_t rows() const override { return a_->cols(); }
  std::size_t cols() const override { return a_->rows(); }
  void apply(const double* x, double* y) const override {
    a_->apply_adjoint(x, y);
  }
  void apply_adjoint(const double* x, double* y) const override {
    a_->apply(x, y);
  }

 private:
  LinOp a_;
};

class SumOp final : public LinearMap {
 public:
  SumOp(LinOp a, LinOp b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_->rows() != b_->rows() || a_->cols() != b_->cols())
      throw std::invalid_argument("sum_op: shape mismatch");
  }
  std::size_t rows() const override { return a_->rows(); }
  std::size_t cols() const override { return a_->cols(); }
  void apply(const double* x, double* y) const override {
    a_->apply(x, y);
    Vec tmp(rows());
    b_->apply(x, tmp.data());
    kernels::axpy(1.0, tmp.data(), y, rows());
  }
  void apply_adjoint(const double* x, double* y) const override {
    a_->apply_adjoint(x, y);
    Vec tmp(cols());
    b_->apply_adjoint(x, tmp.data());
    kernels::axpy(1.0, tmp.data(), y, cols());
  }

 private:
  LinOp a_, b_;
};

class ComposeOp final : public LinearMap {
 public:
  ComposeOp(LinOp a, LinOp b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_->cols() != b_->rows())
      throw std::invalid_argument("compose_op: shape mismatch");
  }
  std::size_t rows() const override { return a_->rows(); }
  std::size_t cols() const override { return b_->cols(); }
  void apply(const double* x, double* y) const override {
    Vec mid(b_->rows());
    b_->apply(x, mid.data());
    a_->apply(mid.data(), y);
  }
  void apply_adjoint(const double* x, double* y) const override {
    Vec mid(a_->cols());
    a_->apply_adjoint(x, mid.data());
    b_->apply_adjoint(mid.data(), y);
  }

 private:
  LinOp a_, b_;
};

class Block2x2Op final : public LinearMap {
 public:
  Block2x2Op(LinOp a11, LinOp a12, LinOp a21, LinOp a22)
      : a11_(std::move(a11)), a12_(std::move(a12)), a21_(std::move(a21)),
        a22_(std::move(a22)) {
    r1_ = a11_ ? a11_->rows() : (a12_ ? a12_->rows() : 0);
    r2_ = a21_ ? a21_->rows() : (a22_ ? a22_->rows() : 0);
    c1_ = a11_ ? a11_->cols() : (a21_ ? a21_->cols() : 0);
    c2_ = a12_ ? a12_->cols() : (a22_ ? a22_->cols() : 0);
    if ((r1_ == 0 && r2_ == 0) || (c1_ == 0 && c2_ == 0))
      throw std::invalid_argument("block2x2_op: cannot infer shape");
    auto check = [](const LinOp& b, std::size_t r, std::size_t c) {
      if (b && (b->rows() != r || b->cols() != c))
        throw std::invalid_argument("block2x2_op: inconsistent block shapes");
    };
    check(a11_, r1_, c1_);
    check(a12_, r1_, c2_);
    check(a21_, r2_, c1_);
    check(a22_, r2_, c2_);
  }
  std::size_t rows() const override { return r1_ + r2_; }
  std::size_t cols() const override { return c1_ + c2_; }
  void apply(const double* x, double* y) const override {
    for (std::size_t i = 0; i < rows(); ++i) y[i] = 0.0;
    add_block(a11_, x, y, r1_);
    add_block(a12_, x + c1_, y, r1_);
    add_block(a21_, x, y + r1_, r2_);
    add_block(a22_, x + c1_, y + r1_, r2_);
  }
  void apply_adjoint(const double* x, double* y) const override {
    for (std::size_t i = 0; i < cols(); ++i) y[i] = 0.0;
    adj_block(a11_, x, y, c1_);
    adj_block(a21_, x + r1_, y, c1_);
    adj_block(a12_, x, y + c1_, c2_);
    adj_block(a22_, x + r1_, y + c1_, c2_);
  }

 private:
  static void add_block(const LinOp& b, const double* x, double* y,
                        std::size_t out) {
    if (!b || out == 0) return;
    Vec tmp(out);
    b->apply(x, tmp.data());
    kernels::axpy(1.0, tmp.data(), y, out);
  }
  static void adj_block(const LinOp& b, const double* x, double* y,
                        std::size_t out) {
    if (!b || out == 0) return;
    Vec tmp(out);
    b->apply_adjoint(x, tmp.data());
    kernels::axpy(1.0, tmp.data(), y, out);
  }

  LinOp a11_, a12_, a21_, a22_;
  std::size_t r1_, r2_, c1_, c2_;
};

}  // namespace

LinOp dense_op(DenseMatrix a) { return std::make_shared<DenseOp>(std::move(a)); }
LinOp identity_op(std::size_t n) { return std::make_shared<ScalingOp>(n, 1.0); }
LinOp zero_op(std::size_t rows, std::size_t cols) {
  return std::make_shared<ZeroOp>(rows, cols);
}
LinOp scaling_op(std::size_t n, double alpha) {
  return std::make_shared<ScalingOp>(n, alpha);
}
LinOp adjoint_op(LinOp a) { return std::make_shared<AdjointOp>(std::move(a)); }
LinOp sum_op(LinOp a, LinOp b) {
  return std::make_shared<SumOp>(std::move(a), std::move(b));
}
LinOp compose_op(LinOp a, LinOp b) {
  return std::make_shared<ComposeOp>(std::move(a), std::move(b));
}
LinOp block2x2_op(LinOp a11, LinOp a12, LinOp a21, LinOp a22) {
  return std::make_shared<Block2x2Op>(std::move(a11), std::move(a12),
                                      std::move(a21), std::move(a22));
}

PowerIterResult op_norm(const LinearMap& t, double tol, std::size_t max_iter,
                        std::uint64_t seed) {
  PowerIterResult res;
  const std::size_t n = t.cols();
  if (n == 0 || t.rows() == 0) {
    res.converged = true;
    return res;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (double& vi : v) vi = gauss(rng);
  double nv = vnorm(v);
  if (nv == 0.0) v[0] = nv = 1.0;
  kernels::scale(1.0 / nv, v.data(), n);

  Vec tv(t.rows()), w(n);
  double prev = 0.0;
  for (std::size_t k = 0; k < max_iter; ++k) {
    t.apply(v.data(), tv.data());
    t.apply_adjoint(tv.data(), w.data());  // w = T^*T v
    const double lam = vdot(v, w);         // Rayleigh quotient for T^*T
    const double nw = vnorm(w);
    res.iters = k + 1;
    if (nw == 0.0) {
      // v landed in the kernel of T^*T; the map may still be nonzero, but
      // with a generic Gaussian start this only happens for the zero map.
      res.value = 0.0;
      res.converged = true;
      return res;
    }
    v = vscale(1.0 / nw, w);
    const double cur = std::sqrt(std::max(lam, 0.0));
    if (k > 0 && std::abs(cur - prev) <= tol * std::max(1.0, cur)) {
      res.value = cur;
      res.converged = true;
      return res;
    }
    prev = cur;
  }
  res.value = prev;
  res.converged = false;
  return res;
}

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return m;
}

}  // namespace

double min_eig_sym(const DenseMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("min_eig_sym: not square");
  if (a.rows == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct SymMetric::Cache {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool have_ldlt = false;
  double min_eig = 0.0, max_eig = 0.0;
  bool have_eigs = false;
};

SymMetric::SymMetric(LinOp s, double sym_tol) : cache_(std::make_shared<Cache>()) {
  if (!s) throw std::invalid_argument("SymMetric: null operator");
  if (s->rows() != s->cols())
    throw std::invalid_argument("SymMetric: not square");
  dense_ = s->to_dense();
  double scale = 0.0, asym = 0.0;
  for (std::size_t i = 0; i < dense_.rows; ++i)
    for (std::size_t j = 0; j < dense_.cols; ++j) {
      scale = std::max(scale, std::abs(dense_(i, j)));
      asym = std::max(asym, std::abs(dense_(i, j) - dense_(j, i)));
    }
  if (asym > sym_tol * std::max(1.0, scale))
    throw std::invalid_argument("SymMetric: operator is not symmetric");
  // Symmetrize exactly so the quadratic form is bit-wise symmetric.
  for (std::size_t i = 0; i < dense_.rows; ++i)
    for (std::size_t j = i + 1; j < dense_.cols; ++j) {
      const double v = 0.5 * (dense_(i, j) + dense_(j, i));
      dense_(i, j) = dense_(j, i) = v;
    }
}

Vec SymMetric::apply(const Vec& x) const {
  if (x.size() != dense_.rows)
    throw std::invalid_argument("SymMetric::apply: size mismatch");
  Vec y(dense_.rows);
  kernels::gemv(dense_.rows, dense_.cols, dense_.data.data(), x.data(),
                y.data());
  return y;
}

double SymMetric::inner(const Vec& a, const Vec& b) const {
  return vdot(a, apply(b));
}

double SymMetric::norm(const Vec& x) const {
  return std::sqrt(std::max(quad(x), 0.0));
}

double SymMetric::min_eig() const {
  if (!cache_->have_eigs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(dense_),
                                                      Eigen::EigenvaluesOnly);
    cache_->min_eig = dense_.rows ? es.eigenvalues().minCoeff() : 0.0;
    cache_->max_eig = dense_.rows ? es.eigenvalues().maxCoeff() : 0.0;
    cache_->have_eigs = true;
  }
  return cache_->min_eig;
}

double SymMetric::max_eig() const {
  min_eig();  // fills the cache
  return cache_->max_eig;
}

Vec SymMetric::solve(const Vec& rhs) const {
  if (!cache_->have_ldlt) {
    cache_->ldlt.compute(to_eigen(dense_));
    cache_->have_ldlt = true;
  }
  Eigen::VectorXd b(static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t i = 0; i < rhs.size(); ++i)
    b(static_cast<Eigen::Index>(i)) = rhs[i];
  Eigen::VectorXd u = cache_->ldlt.solve(b);
  Vec out(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i)
    out[i] = u(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace afba
