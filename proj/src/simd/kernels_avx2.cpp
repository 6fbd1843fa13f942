// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2 -mfma. Nothing in here may be called unless the
// dispatcher has confirmed CPU support.
#include <immintrin.h>

#include <cmath>

#include "curvefold/simd/kernels.hpp"

namespace curvefold::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void mix3_avx2(double a, const double* x, double b, const double* y, double c, const double* w,
               double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    r = _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), r);
    r = _mm256_fmadd_pd(vc, _mm256_loadu_pd(w + i), r);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = std::fma(c, w[i], std::fma(b, y[i], a * x[i]));
}

double sum_sq_diff_avx2(const double* x, const double* y, std::size_t n) {
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
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

// Four xyz points occupy three 256-bit lanes: [x0 y0 z0 x1] [y1 z1 x2 y2]
// [z2 x3 y3 z3]. Squares are formed in-register and each point's three terms
// are gathered back with permutes.
void point_sq_dists_avx2(const double* a, const double* b, double* out, std::size_t npoints) {
  std::size_t k = 0;
  for (; k + 4 <= npoints; k += 4) {
    const double* pa = a + 3 * k;
    const double* pb = b + 3 * k;
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(pa), _mm256_loadu_pd(pb));
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(pa + 4), _mm256_loadu_pd(pb + 4));
    __m256d d2 = _mm256_sub_pd(_mm256_loadu_pd(pa + 8), _mm256_loadu_pd(pb + 8));
    d0 = _mm256_mul_pd(d0, d0);
    d1 = _mm256_mul_pd(d1, d1);
    d2 = _mm256_mul_pd(d2, d2);
    alignas(32) double s[12];
    _mm256_store_pd(s, d0);
    _mm256_store_pd(s + 4, d1);
    _mm256_store_pd(s + 8, d2);
    // Transpose the 12 squares into x, y, z columns of four points each.
    const __m256d xs = _mm256_set_pd(s[9], s[6], s[3], s[0]);
    const __m256d ys = _mm256_set_pd(s[10], s[7], s[4], s[1]);
    const __m256d zs = _mm256_set_pd(s[11], s[8], s[5], s[2]);
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_add_pd(xs, ys), zs));
  }
  for (; k < npoints; ++k) {
    const double dx = a[3 * k] - b[3 * k];
    const double dy = a[3 * k + 1] - b[3 * k + 1];
    const double dz = a[3 * k + 2] - b[3 * k + 2];
    out[k] = dx * dx + dy * dy + dz * dz;
  }
}

double tm_sum_avx2(const double* d2, double inv_d0sq, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d inv = _mm256_set1_pd(inv_d0sq);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d den = _mm256_fmadd_pd(_mm256_loadu_pd(d2 + i), inv, one);
    acc = _mm256_add_pd(acc, _mm256_div_pd(one, den));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += 1.0 / (1.0 + d2[i] * inv_d0sq);
  return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void adam_step_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
                    const AdamCoeffs& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d inv_bias1 = _mm256_set1_pd(1.0 / c.bias1);
  const __m256d inv_bias2 = _mm256_set1_pd(1.0 / c.bias2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(omb1, gi));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(omb2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bias2)), eps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_bias1)), den);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    p[i] -= c.lr * (m[i] / c.bias1) / (std::sqrt(v[i] / c.bias2) + c.eps);
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{Isa::Avx2,        mix3_avx2,   sum_sq_diff_avx2,
                                 point_sq_dists_avx2, tm_sum_avx2, dot_avx2,
                                 adam_step_avx2};
  return table;
}

}  // namespace curvefold::simd
