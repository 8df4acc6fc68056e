#include "kernels_internal.hpp"

#if COMPAUDIT_AARCH64

#include <arm_neon.h>

// NEON variants, 2 doubles per lane (aarch64 float64x2_t).

namespace compaudit::kernels {
namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double acc = hsum(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

double squared_distance_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, double* x, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void rotate_neon(double c, double s, double* x, double* y, std::size_t n) {
  const float64x2_t cv = vdupq_n_f64(c);
  const float64x2_t sv = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xv = vld1q_f64(x + i);
    const float64x2_t yv = vld1q_f64(y + i);
    vst1q_f64(x + i, vfmsq_f64(vmulq_f64(cv, xv), sv, yv));
    vst1q_f64(y + i, vfmaq_f64(vmulq_f64(cv, yv), sv, xv));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void dot_block_neon(const double* x, std::size_t rx, const double* y, std::size_t ry,
                    std::size_t k, double* c, std::size_t ldc) {
  constexpr std::size_t NR = 4;
  for (std::size_t i = 0; i < rx; ++i) {
    const double* xi = x + i * k;
    std::size_t j = 0;
    for (; j + NR <= ry; j += NR) {
      float64x2_t a0 = vdupq_n_f64(0.0);
      float64x2_t a1 = vdupq_n_f64(0.0);
      float64x2_t a2 = vdupq_n_f64(0.0);
      float64x2_t a3 = vdupq_n_f64(0.0);
      const double* y0 = y + (j + 0) * k;
      const double* y1 = y + (j + 1) * k;
      const double* y2 = y + (j + 2) * k;
      const double* y3 = y + (j + 3) * k;
      std::size_t p = 0;
      for (; p + 2 <= k; p += 2) {
        const float64x2_t u = vld1q_f64(xi + p);
        a0 = vfmaq_f64(a0, u, vld1q_f64(y0 + p));
        a1 = vfmaq_f64(a1, u, vld1q_f64(y1 + p));
        a2 = vfmaq_f64(a2, u, vld1q_f64(y2 + p));
        a3 = vfmaq_f64(a3, u, vld1q_f64(y3 + p));
      }
      double r0 = hsum(a0), r1 = hsum(a1), r2 = hsum(a2), r3 = hsum(a3);
      for (; p < k; ++p) {
        r0 += xi[p] * y0[p];
        r1 += xi[p] * y1[p];
        r2 += xi[p] * y2[p];
        r3 += xi[p] * y3[p];
      }
      c[i * ldc + j + 0] = r0;
      c[i * ldc + j + 1] = r1;
      c[i * ldc + j + 2] = r2;
      c[i * ldc + j + 3] = r3;
    }
    for (; j < ry; ++j) {
      c[i * ldc + j] = dot_neon(xi, y + j * k, k);
    }
  }
}

}  // namespace

const Ops& neon_ops() {
  static const Ops table = {dot_neon,   sum_squares_neon, squared_distance_neon,
                            axpy_neon,  scale_neon,       rotate_neon,
                            dot_block_neon};
  return table;
}

}  // namespace compaudit::kernels

#endif  // COMPAUDIT_AARCH64
