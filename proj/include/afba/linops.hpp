#pragma once

// Vectors, dense matrices and composable linear operators.
//
// Operators are immutable and shared through LinOp (shared_ptr to const).
// Structured maps (identity, scaling, zero, block) keep their structure so
// apply() stays cheap; to_dense() materializes any map when a factorization
// or eigendecomposition is needed.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "afba/kernels.hpp"

namespace afba {

using Vec = std::vector<double>;

inline double vdot(const Vec& a, const Vec& b) {
  return kernels::dot(a.data(), b.data(), a.size());
}
inline double vnorm_sq(const Vec& a) {
  return kernels::nrm2_sq(a.data(), a.size());
}
double vnorm(const Vec& a);
bool vfinite(const Vec& a);

// y += alpha * x
inline void vaxpy(double alpha, const Vec& x, Vec& y) {
  kernels::axpy(alpha, x.data(), y.data(), x.size());
}
Vec vadd(const Vec& a, const Vec& b);
Vec vsub(const Vec& a, const Vec& b);
Vec vscale(double alpha, const Vec& a);

// Point in a primal-dual product space.
struct PrimalDualPoint {
  Vec x;  // primal
  Vec y;  // dual
};

Vec pd_flatten(const PrimalDualPoint& z);
PrimalDualPoint pd_split(const Vec& z, std::size_t nx);

// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
};

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual void apply(const double* x, double* y) const = 0;
  // y = T^* x  (real spaces, so the transpose)
  virtual void apply_adjoint(const double* x, double* y) const = 0;

  Vec apply(const Vec& x) const;
  Vec apply_adjoint(const Vec& x) const;
  DenseMatrix to_dense() const;
};

using LinOp = std::shared_ptr<const LinearMap>;

LinOp dense_op(DenseMatrix a);
LinOp identity_op(std::size_t n);
LinOp zero_op(std::size_t rows, std::size_t cols);
LinOp scaling_op(std::size_t n, double alpha);
LinOp adjoint_op(LinOp a);
LinOp sum_op(LinOp a, LinOp b);
// (a ∘ b)(x) = a(b(x))
LinOp compose_op(LinOp a, LinOp b);
// 2x2 block operator; a null block means zero. Shapes are inferred from the
// present blocks and must be consistent.
LinOp block2x2_op(LinOp a11, LinOp a12, LinOp a21, LinOp a22);

struct PowerIterResult {
  double value = 0.0;      // estimate of ||T||
  std::size_t iters = 0;
  bool converged = false;
};

// Largest singular value via power iteration on T^*T with a fixed seeded
// start vector, so repeated runs give identical results.
PowerIterResult op_norm(const LinearMap& t, double tol = 1e-9,
                        std::size_t max_iter = 10000,
                        std::uint64_t seed = 0x9e3779b97f4a7c15ull);
inline double op_norm_value(const LinearMap& t) { return op_norm(t).value; }

// Smallest eigenvalue of a symmetric matrix (dense eigendecomposition).
double min_eig_sym(const DenseMatrix& a);

// Symmetric operator used as a metric: caches the dense form, exposes the
// induced bilinear form, extremal eigenvalue and a linear solve.
class SymMetric {
 public:
  // Throws std::invalid_argument when the dense form of `s` deviates from
  // symmetry by more than sym_tol (relative to the largest entry).
  explicit SymMetric(LinOp s, double sym_tol = 1e-10);

  std::size_t dim() const { return dense_.rows; }
  const DenseMatrix& dense() const { return dense_; }
  Vec apply(const Vec& x) const;
  double inner(const Vec& a, const Vec& b) const;  // <a, S b>
  double quad(const Vec& x) const { return inner(x, x); }
  double norm(const Vec& x) const;                 // sqrt(<x, S x>)
  double min_eig() const;
  double max_eig() const;
  // Solve S u = rhs (LDLT, factorization cached on first use).
  Vec solve(const Vec& rhs) const;

 private:
  DenseMatrix dense_;
  struct Cache;
  mutable std::shared_ptr<Cache> cache_;
};

}  // namespace afba
