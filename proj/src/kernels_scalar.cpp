#include "kernels_internal.hpp"

// Reference kernels. Plain loops, fixed left-to-right summation order; the
// SIMD variants may reassociate and are compared against these in tests.

namespace compaudit::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void rotate_scalar(double c, double s, double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void dot_block_scalar(const double* x, std::size_t rx, const double* y, std::size_t ry,
                      std::size_t k, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < rx; ++i) {
    const double* xi = x + i * k;
    for (std::size_t j = 0; j < ry; ++j) {
      c[i * ldc + j] = dot_scalar(xi, y + j * k, k);
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {dot_scalar,   sum_squares_scalar, squared_distance_scalar,
                            axpy_scalar,  scale_scalar,       rotate_scalar,
                            dot_block_scalar};
  return table;
}

}  // namespace compaudit::kernels
