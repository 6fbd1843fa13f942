// SPDX-License-Identifier: Apache-2.0
#include "curvefold/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvefold/backbone/sse.hpp"
#include "curvefold/errors.hpp"

namespace curvefold {

ScheduleShape schedule_shape_from_string(const std::string& s) {
  if (s == "linear") return ScheduleShape::Linear;
  if (s == "cosine") return ScheduleShape::Cosine;
  throw ConfigError("unknown schedule shape '" + s + "'");
}

const char* to_string(ScheduleShape s) { return s == ScheduleShape::Linear ? "linear" : "cosine"; }

DiffusionSchedule make_schedule(int T, double beta_min, double beta_max, ScheduleShape shape) {
  if (T < 2) throw ConfigError("schedule needs T >= 2");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw ConfigError("schedule bounds must satisfy 0 < beta_min <= beta_max < 1");
  DiffusionSchedule s;
  s.T = T;
  s.shape = shape;
  s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
  if (shape == ScheduleShape::Linear) {
    for (int t = 1; t <= T; ++t) s.beta[t] = beta_min + (beta_max - beta_min) * (t - 1) / (T - 1);
  } else {
    constexpr double off = 0.008;
    auto f = [&](int t) {
      const double c = std::cos((static_cast<double>(t) / T + off) / (1.0 + off) * std::numbers::pi / 2);
      return c * c;
    };
    for (int t = 1; t <= T; ++t) s.beta[t] = std::clamp(1.0 - f(t) / f(t - 1), beta_min, beta_max);
  }
  s.alpha.assign(s.beta.size(), 1.0);
  s.alpha_bar.assign(s.beta.size(), 1.0);
  for (int t = 1; t <= T; ++t) {
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

DiffusionSchedule default_schedule() { return make_schedule(50, 1e-4, 0.2, ScheduleShape::Linear); }

namespace {

void check_t(int t, int lo, const DiffusionSchedule& s) {
  if (t < lo || t > s.T)
    throw IndexError("step " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " + std::to_string(s.T) + "]");
}

Points gaussian_like(const Points& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Points e(3, shape.cols());
  for (Eigen::Index i = 0; i < e.cols(); ++i)
    for (int d = 0; d < 3; ++d) e(d, i) = g(rng);
  return e;
}

}  // namespace

Points forward_noise(const Points& z0, int t, const DiffusionSchedule& s, std::mt19937_64& rng) {
  check_t(t, 0, s);
  if (t == 0) return z0;
  const double ab = s.alpha_bar[t];
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * gaussian_like(z0, rng);
}

Points forward_step(const Points& z_prev, int t, const DiffusionSchedule& s, std::mt19937_64& rng) {
  check_t(t, 1, s);
  return std::sqrt(s.alpha[t]) * z_prev + std::sqrt(s.beta[t]) * gaussian_like(z_prev, rng);
}

PosteriorCoefficients posterior_coefficients(int t, const DiffusionSchedule& s) {
  check_t(t, 1, s);
  // 1 - alpha_bar_1 need not round to beta_1, so the last step is pinned.
  if (t == 1) return {1.0, 0.0, 0.0};
  const double ab = s.alpha_bar[t];
  const double ab_prev = s.alpha_bar[t - 1];
  return {std::sqrt(ab_prev) * s.beta[t] / (1.0 - ab), std::sqrt(s.alpha[t]) * (1.0 - ab_prev) / (1.0 - ab),
          (1.0 - ab_prev) / (1.0 - ab) * s.beta[t]};
}

Points posterior_mean(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s) {
  if (z_t.cols() != z0_hat.cols()) throw DimensionError("posterior mean: size mismatch");
  const auto c = posterior_coefficients(t, s);
  return c.c0 * z0_hat + c.ct * z_t;
}

Points unconditional_step(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s,
                          std::mt19937_64& rng) {
  Points out = posterior_mean(z_t, z0_hat, t, s);
  if (t > 1) out += std::sqrt(posterior_coefficients(t, s).beta_tilde) * gaussian_like(z_t, rng);
  return out;
}

Points filter_phi(const Points& z, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in [0, 1)");
  return lambda * z;
}

double helix_gate(const SseLabels& pred, const SseLabels& sketch, double gamma, double eta) {
  const double o = helix_fraction(pred);
  const double oy = helix_fraction(sketch);
  if (o >= oy) return 1.0;
  return gamma * (oy - o) + eta;
}

}  // namespace curvefold
