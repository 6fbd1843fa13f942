// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "curvefold/simd/kernels.hpp"

namespace curvefold::simd {
namespace {

void mix3_scalar(double a, const double* x, double b, const double* y, double c, const double* w,
                 double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i] + c * w[i];
}

double sum_sq_diff_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void point_sq_dists_scalar(const double* a, const double* b, double* out, std::size_t npoints) {
  for (std::size_t k = 0; k < npoints; ++k) {
    const double dx = a[3 * k] - b[3 * k];
    const double dy = a[3 * k + 1] - b[3 * k + 1];
    const double dz = a[3 * k + 2] - b[3 * k + 2];
    out[k] = dx * dx + dy * dy + dz * dz;
  }
}

double tm_sum_scalar(const double* d2, double inv_d0sq, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += 1.0 / (1.0 + d2[i] * inv_d0sq);
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void adam_step_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                      const AdamCoeffs& c) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mhat = m[i] / c.bias1;
    const double vhat = v[i] / c.bias2;
    p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,       mix3_scalar,   sum_sq_diff_scalar,
                                 point_sq_dists_scalar, tm_sum_scalar, dot_scalar,
                                 adam_step_scalar};
  return table;
}

}  // namespace curvefold::simd
