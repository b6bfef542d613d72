#include "afba/kernels.hpp"

namespace afba::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double nrm2_sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv_scalar(std::size_t rows, std::size_t cols, const double* a,
                 const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_scalar(a + i * cols, x, cols);
  }
}

void gemv_t_scalar(std::size_t rows, std::size_t cols, const double* a,
                   const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    axpy_scalar(x[i], a + i * cols, y, cols);
  }
}

}  // namespace

const Backend kScalarBackend = {dot_scalar,  nrm2_sq_scalar, axpy_scalar,
                                scale_scalar, gemv_scalar,   gemv_t_scalar,
                                "scalar"};

}  // namespace afba::kernels
