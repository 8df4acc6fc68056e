#include "kernels_internal.hpp"

#if COMPAUDIT_X86

#include <immintrin.h>

#include <algorithm>

// AVX2 + FMA variants, 4 doubles per lane. This translation unit is built
// with -mavx2 -mfma; the dispatcher only hands out this table when the CPU
// reports both features.

namespace compaudit::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d a = _mm256_loadu_pd(x + i);
    const __m256d b = _mm256_loadu_pd(x + i + 4);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
    acc1 = _mm256_fmadd_pd(b, b, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(x + i);
    acc0 = _mm256_fmadd_pd(a, a, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void rotate_avx2(double c, double s, double* x, double* y, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(x + i, _mm256_fmsub_pd(cv, xv, _mm256_mul_pd(sv, yv)));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(sv, xv, _mm256_mul_pd(cv, yv)));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// 3x4 register tile: 12 vector accumulators running down the shared k
// dimension, horizontal reductions once per tile.
void dot_block_panel_avx2(const double* x, std::size_t rx, const double* y, std::size_t ry,
                          std::size_t k, double* c, std::size_t ldc) {
  constexpr std::size_t MR = 3;
  constexpr std::size_t NR = 4;
  std::size_t i = 0;
  for (; i + MR <= rx; i += MR) {
    const double* x0 = x + (i + 0) * k;
    const double* x1 = x + (i + 1) * k;
    const double* x2 = x + (i + 2) * k;
    std::size_t j = 0;
    for (; j + NR <= ry; j += NR) {
      const double* y0 = y + (j + 0) * k;
      const double* y1 = y + (j + 1) * k;
      const double* y2 = y + (j + 2) * k;
      const double* y3 = y + (j + 3) * k;
      __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd();
      __m256d a02 = _mm256_setzero_pd(), a03 = _mm256_setzero_pd();
      __m256d a10 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
      __m256d a12 = _mm256_setzero_pd(), a13 = _mm256_setzero_pd();
      __m256d a20 = _mm256_setzero_pd(), a21 = _mm256_setzero_pd();
      __m256d a22 = _mm256_setzero_pd(), a23 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d v0 = _mm256_loadu_pd(y0 + p);
        const __m256d v1 = _mm256_loadu_pd(y1 + p);
        const __m256d v2 = _mm256_loadu_pd(y2 + p);
        const __m256d v3 = _mm256_loadu_pd(y3 + p);
        __m256d u = _mm256_loadu_pd(x0 + p);
        a00 = _mm256_fmadd_pd(u, v0, a00);
        a01 = _mm256_fmadd_pd(u, v1, a01);
        a02 = _mm256_fmadd_pd(u, v2, a02);
        a03 = _mm256_fmadd_pd(u, v3, a03);
        u = _mm256_loadu_pd(x1 + p);
        a10 = _mm256_fmadd_pd(u, v0, a10);
        a11 = _mm256_fmadd_pd(u, v1, a11);
        a12 = _mm256_fmadd_pd(u, v2, a12);
        a13 = _mm256_fmadd_pd(u, v3, a13);
        u = _mm256_loadu_pd(x2 + p);
        a20 = _mm256_fmadd_pd(u, v0, a20);
        a21 = _mm256_fmadd_pd(u, v1, a21);
        a22 = _mm256_fmadd_pd(u, v2, a22);
        a23 = _mm256_fmadd_pd(u, v3, a23);
      }
      double r00 = hsum(a00), r01 = hsum(a01), r02 = hsum(a02), r03 = hsum(a03);
      double r10 = hsum(a10), r11 = hsum(a11), r12 = hsum(a12), r13 = hsum(a13);
      double r20 = hsum(a20), r21 = hsum(a21), r22 = hsum(a22), r23 = hsum(a23);
      for (; p < k; ++p) {
        r00 += x0[p] * y0[p]; r01 += x0[p] * y1[p]; r02 += x0[p] * y2[p]; r03 += x0[p] * y3[p];
        r10 += x1[p] * y0[p]; r11 += x1[p] * y1[p]; r12 += x1[p] * y2[p]; r13 += x1[p] * y3[p];
        r20 += x2[p] * y0[p]; r21 += x2[p] * y1[p]; r22 += x2[p] * y2[p]; r23 += x2[p] * y3[p];
      }
      double* c0 = c + (i + 0) * ldc + j;
      double* c1 = c + (i + 1) * ldc + j;
      double* c2 = c + (i + 2) * ldc + j;
      c0[0] = r00; c0[1] = r01; c0[2] = r02; c0[3] = r03;
      c1[0] = r10; c1[1] = r11; c1[2] = r12; c1[3] = r13;
      c2[0] = r20; c2[1] = r21; c2[2] = r22; c2[3] = r23;
    }
    for (; j < ry; ++j) {
      const double* yj = y + j * k;
      c[(i + 0) * ldc + j] = dot_avx2(x0, yj, k);
      c[(i + 1) * ldc + j] = dot_avx2(x1, yj, k);
      c[(i + 2) * ldc + j] = dot_avx2(x2, yj, k);
    }
  }
  for (; i < rx; ++i) {
    const double* xi = x + i * k;
    for (std::size_t j = 0; j < ry; ++j) {
      c[i * ldc + j] = dot_avx2(xi, y + j * k, k);
    }
  }
}

// Outer blocking: keep a y panel L2-resident across the whole x sweep.
// Bit-transparent; see the avx512 variant.
void dot_block_avx2(const double* x, std::size_t rx, const double* y, std::size_t ry,
                    std::size_t k, double* c, std::size_t ldc) {
  const std::size_t panel = std::max<std::size_t>(4, (1u << 18) / (8 * std::max<std::size_t>(k, 1)));
  for (std::size_t j0 = 0; j0 < ry; j0 += panel) {
    const std::size_t jn = std::min(panel, ry - j0);
    dot_block_panel_avx2(x, rx, y + j0 * k, jn, k, c + j0, ldc);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {dot_avx2,   sum_squares_avx2, squared_distance_avx2,
                            axpy_avx2,  scale_avx2,       rotate_avx2,
                            dot_block_avx2};
  return table;
}

}  // namespace compaudit::kernels

#endif  // COMPAUDIT_X86
