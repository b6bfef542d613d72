#pragma once

// Dense vector/matrix arithmetic kernels with runtime SIMD dispatch.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA available, a vectorized variant selected once at startup. The
// two are equivalence-tested; all higher-level code goes through the
// dispatch table and never touches intrinsics directly.

#include <cstddef>

namespace afba::kernels {

struct Backend {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*nrm2_sq)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  // y = A x, A row-major (rows x cols)
  void (*gemv)(std::size_t rows, std::size_t cols, const double* a,
               const double* x, double* y);
  // y = A^T x
  void (*gemv_t)(std::size_t rows, std::size_t cols, const double* a,
                 const double* x, double* y);
  const char* name;
};

// Scalar reference kernels (always available).
extern const Backend kScalarBackend;

#if defined(__x86_64__) || defined(_M_X64)
extern const Backend kAvx2Backend;
#endif

// Backend chosen at first use from CPU capabilities.
const Backend& active();

// Convenience wrappers over the active backend.
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double nrm2_sq(const double* a, std::size_t n) {
  return active().nrm2_sq(a, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
  active().scale(alpha, x, n);
}
inline void gemv(std::size_t rows, std::size_t cols, const double* a,
                 const double* x, double* y) {
  active().gemv(rows, cols, a, x, y);
}
inline void gemv_t(std::size_t rows, std::size_t cols, const double* a,
                   const double* x, double* y) {
  active().gemv_t(rows, cols, a, x, y);
}

}  // namespace afba::kernels
