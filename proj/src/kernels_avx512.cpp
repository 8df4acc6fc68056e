#include "kernels_internal.hpp"

#if COMPAUDIT_X86

#include <immintrin.h>

#include <algorithm>

// AVX-512F variants, 8 doubles per lane. Masked loads handle the tail, so
// reductions have no scalar remainder loop.

namespace compaudit::kernels {
namespace {

inline __mmask8 tail_mask(std::size_t rem) {
  return static_cast<__mmask8>((1u << rem) - 1u);
}

double dot_avx512(const double* x, const double* y, std::size_t n) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
    acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
  }
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    acc1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(m, x + i), _mm512_maskz_loadu_pd(m, y + i), acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

double sum_squares_avx512(const double* x, std::size_t n) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m512d a = _mm512_loadu_pd(x + i);
    const __m512d b = _mm512_loadu_pd(x + i + 8);
    acc0 = _mm512_fmadd_pd(a, a, acc0);
    acc1 = _mm512_fmadd_pd(b, b, acc1);
  }
  for (; i + 8 <= n; i += 8) {
    const __m512d a = _mm512_loadu_pd(x + i);
    acc0 = _mm512_fmadd_pd(a, a, acc0);
  }
  if (i < n) {
    const __m512d a = _mm512_maskz_loadu_pd(tail_mask(n - i), x + i);
    acc1 = _mm512_fmadd_pd(a, a, acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

double squared_distance_avx512(const double* x, const double* y, std::size_t n) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m512d d0 = _mm512_sub_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i));
    const __m512d d1 = _mm512_sub_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8));
    acc0 = _mm512_fmadd_pd(d0, d0, acc0);
    acc1 = _mm512_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 8 <= n; i += 8) {
    const __m512d d = _mm512_sub_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i));
    acc0 = _mm512_fmadd_pd(d, d, acc0);
  }
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    const __m512d d = _mm512_sub_pd(_mm512_maskz_loadu_pd(m, x + i), _mm512_maskz_loadu_pd(m, y + i));
    acc1 = _mm512_fmadd_pd(d, d, acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

void axpy_avx512(double a, const double* x, double* y, std::size_t n) {
  const __m512d av = _mm512_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(av, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  }
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    _mm512_mask_storeu_pd(
        y + i, m,
        _mm512_fmadd_pd(av, _mm512_maskz_loadu_pd(m, x + i), _mm512_maskz_loadu_pd(m, y + i)));
  }
}

void scale_avx512(double a, double* x, std::size_t n) {
  const __m512d av = _mm512_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(x + i, _mm512_mul_pd(av, _mm512_loadu_pd(x + i)));
  }
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    _mm512_mask_storeu_pd(x + i, m, _mm512_mul_pd(av, _mm512_maskz_loadu_pd(m, x + i)));
  }
}

void rotate_avx512(double c, double s, double* x, double* y, std::size_t n) {
  const __m512d cv = _mm512_set1_pd(c);
  const __m512d sv = _mm512_set1_pd(s);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d xv = _mm512_loadu_pd(x + i);
    const __m512d yv = _mm512_loadu_pd(y + i);
    _mm512_storeu_pd(x + i, _mm512_fmsub_pd(cv, xv, _mm512_mul_pd(sv, yv)));
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(sv, xv, _mm512_mul_pd(cv, yv)));
  }
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    const __m512d xv = _mm512_maskz_loadu_pd(m, x + i);
    const __m512d yv = _mm512_maskz_loadu_pd(m, y + i);
    _mm512_mask_storeu_pd(x + i, m, _mm512_fmsub_pd(cv, xv, _mm512_mul_pd(sv, yv)));
    _mm512_mask_storeu_pd(y + i, m, _mm512_fmadd_pd(sv, xv, _mm512_mul_pd(cv, yv)));
  }
}

// 4x4 register tile (16 zmm accumulators) over the shared k dimension. This
// is the hot kernel of the retrieval scan.
void dot_block_panel_avx512(const double* x, std::size_t rx, const double* y, std::size_t ry,
                            std::size_t k, double* c, std::size_t ldc) {
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 4;
  std::size_t i = 0;
  for (; i + MR <= rx; i += MR) {
    const double* x0 = x + (i + 0) * k;
    const double* x1 = x + (i + 1) * k;
    const double* x2 = x + (i + 2) * k;
    const double* x3 = x + (i + 3) * k;
    std::size_t j = 0;
    for (; j + NR <= ry; j += NR) {
      const double* y0 = y + (j + 0) * k;
      const double* y1 = y + (j + 1) * k;
      const double* y2 = y + (j + 2) * k;
      const double* y3 = y + (j + 3) * k;
      __m512d a00 = _mm512_setzero_pd(), a01 = _mm512_setzero_pd();
      __m512d a02 = _mm512_setzero_pd(), a03 = _mm512_setzero_pd();
      __m512d a10 = _mm512_setzero_pd(), a11 = _mm512_setzero_pd();
      __m512d a12 = _mm512_setzero_pd(), a13 = _mm512_setzero_pd();
      __m512d a20 = _mm512_setzero_pd(), a21 = _mm512_setzero_pd();
      __m512d a22 = _mm512_setzero_pd(), a23 = _mm512_setzero_pd();
      __m512d a30 = _mm512_setzero_pd(), a31 = _mm512_setzero_pd();
      __m512d a32 = _mm512_setzero_pd(), a33 = _mm512_setzero_pd();
      std::size_t p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m512d v0 = _mm512_loadu_pd(y0 + p);
        const __m512d v1 = _mm512_loadu_pd(y1 + p);
        const __m512d v2 = _mm512_loadu_pd(y2 + p);
        const __m512d v3 = _mm512_loadu_pd(y3 + p);
        __m512d u = _mm512_loadu_pd(x0 + p);
        a00 = _mm512_fmadd_pd(u, v0, a00);
        a01 = _mm512_fmadd_pd(u, v1, a01);
        a02 = _mm512_fmadd_pd(u, v2, a02);
        a03 = _mm512_fmadd_pd(u, v3, a03);
        u = _mm512_loadu_pd(x1 + p);
        a10 = _mm512_fmadd_pd(u, v0, a10);
        a11 = _mm512_fmadd_pd(u, v1, a11);
        a12 = _mm512_fmadd_pd(u, v2, a12);
        a13 = _mm512_fmadd_pd(u, v3, a13);
        u = _mm512_loadu_pd(x2 + p);
        a20 = _mm512_fmadd_pd(u, v0, a20);
        a21 = _mm512_fmadd_pd(u, v1, a21);
        a22 = _mm512_fmadd_pd(u, v2, a22);
        a23 = _mm512_fmadd_pd(u, v3, a23);
        u = _mm512_loadu_pd(x3 + p);
        a30 = _mm512_fmadd_pd(u, v0, a30);
        a31 = _mm512_fmadd_pd(u, v1, a31);
        a32 = _mm512_fmadd_pd(u, v2, a32);
        a33 = _mm512_fmadd_pd(u, v3, a33);
      }
      if (p < k) {
        const __mmask8 m = tail_mask(k - p);
        const __m512d v0 = _mm512_maskz_loadu_pd(m, y0 + p);
        const __m512d v1 = _mm512_maskz_loadu_pd(m, y1 + p);
        const __m512d v2 = _mm512_maskz_loadu_pd(m, y2 + p);
        const __m512d v3 = _mm512_maskz_loadu_pd(m, y3 + p);
        __m512d u = _mm512_maskz_loadu_pd(m, x0 + p);
        a00 = _mm512_fmadd_pd(u, v0, a00);
        a01 = _mm512_fmadd_pd(u, v1, a01);
        a02 = _mm512_fmadd_pd(u, v2, a02);
        a03 = _mm512_fmadd_pd(u, v3, a03);
        u = _mm512_maskz_loadu_pd(m, x1 + p);
        a10 = _mm512_fmadd_pd(u, v0, a10);
        a11 = _mm512_fmadd_pd(u, v1, a11);
        a12 = _mm512_fmadd_pd(u, v2, a12);
        a13 = _mm512_fmadd_pd(u, v3, a13);
        u = _mm512_maskz_loadu_pd(m, x2 + p);
        a20 = _mm512_fmadd_pd(u, v0, a20);
        a21 = _mm512_fmadd_pd(u, v1, a21);
        a22 = _mm512_fmadd_pd(u, v2, a22);
        a23 = _mm512_fmadd_pd(u, v3, a23);
        u = _mm512_maskz_loadu_pd(m, x3 + p);
        a30 = _mm512_fmadd_pd(u, v0, a30);
        a31 = _mm512_fmadd_pd(u, v1, a31);
        a32 = _mm512_fmadd_pd(u, v2, a32);
        a33 = _mm512_fmadd_pd(u, v3, a33);
      }
      double* c0 = c + (i + 0) * ldc + j;
      double* c1 = c + (i + 1) * ldc + j;
      double* c2 = c + (i + 2) * ldc + j;
      double* c3 = c + (i + 3) * ldc + j;
      c0[0] = _mm512_reduce_add_pd(a00);
      c0[1] = _mm512_reduce_add_pd(a01);
      c0[2] = _mm512_reduce_add_pd(a02);
      c0[3] = _mm512_reduce_add_pd(a03);
      c1[0] = _mm512_reduce_add_pd(a10);
      c1[1] = _mm512_reduce_add_pd(a11);
      c1[2] = _mm512_reduce_add_pd(a12);
      c1[3] = _mm512_reduce_add_pd(a13);
      c2[0] = _mm512_reduce_add_pd(a20);
      c2[1] = _mm512_reduce_add_pd(a21);
      c2[2] = _mm512_reduce_add_pd(a22);
      c2[3] = _mm512_reduce_add_pd(a23);
      c3[0] = _mm512_reduce_add_pd(a30);
      c3[1] = _mm512_reduce_add_pd(a31);
      c3[2] = _mm512_reduce_add_pd(a32);
      c3[3] = _mm512_reduce_add_pd(a33);
    }
    for (; j < ry; ++j) {
      const double* yj = y + j * k;
      c[(i + 0) * ldc + j] = dot_avx512(x0, yj, k);
      c[(i + 1) * ldc + j] = dot_avx512(x1, yj, k);
      c[(i + 2) * ldc + j] = dot_avx512(x2, yj, k);
      c[(i + 3) * ldc + j] = dot_avx512(x3, yj, k);
    }
  }
  for (; i < rx; ++i) {
    const double* xi = x + i * k;
    for (std::size_t j = 0; j < ry; ++j) {
      c[i * ldc + j] = dot_avx512(xi, y + j * k, k);
    }
  }
}

// Outer blocking: walk y in panels that stay resident in L2 across the whole
// x sweep, turning the scan compute-bound. Each output element is still one
// fixed-order k-sweep, so blocking never changes the bytes.
void dot_block_avx512(const double* x, std::size_t rx, const double* y, std::size_t ry,
                      std::size_t k, double* c, std::size_t ldc) {
  const std::size_t panel = std::max<std::size_t>(4, (1u << 18) / (8 * std::max<std::size_t>(k, 1)));
  for (std::size_t j0 = 0; j0 < ry; j0 += panel) {
    const std::size_t jn = std::min(panel, ry - j0);
    dot_block_panel_avx512(x, rx, y + j0 * k, jn, k, c + j0, ldc);
  }
}

}  // namespace

const Ops& avx512_ops() {
  static const Ops table = {dot_avx512,   sum_squares_avx512, squared_distance_avx512,
                            axpy_avx512,  scale_avx512,       rotate_avx512,
                            dot_block_avx512};
  return table;
}

}  // namespace compaudit::kernels

#endif  // COMPAUDIT_X86
