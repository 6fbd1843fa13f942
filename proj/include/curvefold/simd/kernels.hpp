// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel inner loops shared by the geometry, diffusion and training
// code. Every kernel has a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The variant is picked once at startup from CPUID;
// CURVEFOLD_SIMD=scalar in the environment forces the reference path.
#pragma once

#include <cstddef>
#include <span>

namespace curvefold::simd {

enum class Isa { Scalar, Avx2 };

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^step
  double bias2;  // 1 - beta2^step
};

struct KernelTable {
  Isa isa;
  // out[i] = a*x[i] + b*y[i] + c*w[i]
  void (*mix3)(double a, const double* x, double b, const double* y, double c, const double* w,
               double* out, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
  // xyz-interleaved points: out[k] = |a_k - b_k|^2
  void (*point_sq_dists)(const double* a, const double* b, double* out, std::size_t npoints);
  // sum_i 1 / (1 + d2[i] * inv_d0sq)
  double (*tm_sum)(const double* d2, double inv_d0sq, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*adam_step)(double* param, double* m, double* v, const double* grad, std::size_t n,
                    const AdamCoeffs& c);
};

const KernelTable& scalar_kernels();
/// nullptr when the binary or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// Table selected at first use.
const KernelTable& active();
/// Overrides the selection (tests and benchmarks). Falls back to scalar if
/// the requested ISA is unavailable; returns the ISA actually installed.
Isa force(Isa isa);
const char* isa_name(Isa isa);

// Span conveniences over the active table.
void mix3(double a, std::span<const double> x, double b, std::span<const double> y, double c,
          std::span<const double> w, std::span<double> out);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
void point_sq_dists(std::span<const double> a, std::span<const double> b, std::span<double> out);
double tm_sum(std::span<const double> d2, double inv_d0sq);
double dot(std::span<const double> x, std::span<const double> y);
void adam_step(std::span<double> param, std::span<double> m, std::span<double> v,
               std::span<const double> grad, const AdamCoeffs& c);

}  // namespace curvefold::simd
