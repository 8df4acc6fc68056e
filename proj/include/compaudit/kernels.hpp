#pragma once

#include <cstddef>

namespace compaudit::kernels {

enum class Backend { scalar, avx2, avx512, neon };

// Flat table of the inner-loop primitives. One table per backend; the scalar
// table is the reference the SIMD variants are equivalence-tested against.
struct Ops {
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*scale)(double a, double* x, std::size_t n);
  // Plane rotation: (x, y) <- (c*x - s*y, s*x + c*y)
  void (*rotate)(double c, double s, double* x, double* y, std::size_t n);
  // C[i*ldc + j] = dot(X + i*k, Y + j*k) for i < rx, j < ry.
  // Both operands row-major with contiguous length-k rows.
  void (*dot_block)(const double* x, std::size_t rx, const double* y, std::size_t ry,
                    std::size_t k, double* c, std::size_t ldc);
};

const char* backend_name(Backend b);
bool backend_available(Backend b);

// Table for an explicit backend (for equivalence tests). Throws if the
// backend is not available on this machine/build.
const Ops& ops_for(Backend b);

// Runtime-selected table: best available backend, overridable with the
// COMPAUDIT_SIMD environment variable (scalar|avx2|avx512|neon|auto).
const Ops& ops();
Backend active_backend();

inline double dot(const double* x, const double* y, std::size_t n) { return ops().dot(x, y, n); }
inline double sum_squares(const double* x, std::size_t n) { return ops().sum_squares(x, n); }
inline double squared_distance(const double* x, const double* y, std::size_t n) {
  return ops().squared_distance(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) { ops().axpy(a, x, y, n); }
inline void scale(double a, double* x, std::size_t n) { ops().scale(a, x, n); }
inline void rotate(double c, double s, double* x, double* y, std::size_t n) {
  ops().rotate(c, s, x, y, n);
}
inline void dot_block(const double* x, std::size_t rx, const double* y, std::size_t ry,
                      std::size_t k, double* c, std::size_t ldc) {
  ops().dot_block(x, rx, y, ry, k, c, ldc);
}

}  // namespace compaudit::kernels
