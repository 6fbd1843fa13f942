// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cassert>
#include <cstdlib>
#include <cstring>

#include "curvefold/simd/kernels.hpp"

namespace curvefold::simd {

#if defined(CURVEFOLD_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CURVEFOLD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() {
  const char* env = std::getenv("CURVEFOLD_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{select_default()};
  return s;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(CURVEFOLD_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

Isa force(Isa isa) {
  const KernelTable* t = &scalar_kernels();
  if (isa == Isa::Avx2 && avx2_kernels() != nullptr) t = avx2_kernels();
  slot().store(t, std::memory_order_release);
  return t->isa;
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void mix3(double a, std::span<const double> x, double b, std::span<const double> y, double c,
          std::span<const double> w, std::span<double> out) {
  assert(x.size() == out.size() && y.size() == out.size() && w.size() == out.size());
  active().mix3(a, x.data(), b, y.data(), c, w.data(), out.data(), out.size());
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return active().sum_sq_diff(x.data(), y.data(), x.size());
}

void point_sq_dists(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  assert(a.size() == b.size() && a.size() == 3 * out.size());
  active().point_sq_dists(a.data(), b.data(), out.data(), out.size());
}

double tm_sum(std::span<const double> d2, double inv_d0sq) {
  return active().tm_sum(d2.data(), inv_d0sq, d2.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return active().dot(x.data(), y.data(), x.size());
}

void adam_step(std::span<double> param, std::span<double> m, std::span<double> v,
               std::span<const double> grad, const AdamCoeffs& c) {
  assert(param.size() == m.size() && param.size() == v.size() && param.size() == grad.size());
  active().adam_step(param.data(), m.data(), v.data(), grad.data(), param.size(), c);
}

}  // namespace curvefold::simd
