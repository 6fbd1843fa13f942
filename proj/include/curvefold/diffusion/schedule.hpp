// SPDX-License-Identifier: Apache-2.0
//
// Variance schedules and the closed-form pieces of DDPM over C-alpha
// translations: forward noising, the Gaussian posterior q(z_{t-1} | z_t, z_0)
// and the sketch filter / helix gate used by guided sampling.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "curvefold/geometry/types.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

enum class ScheduleShape { Linear, Cosine };

ScheduleShape schedule_shape_from_string(const std::string& s);
const char* to_string(ScheduleShape s);

/// Per-step quantities indexed by t = 0..T. Index 0 is the clean-data
/// convention (beta = 0, alpha_bar = 1).
struct DiffusionSchedule {
  int T = 0;
  ScheduleShape shape = ScheduleShape::Linear;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
};

/// Throws ConfigError unless T >= 2 and 0 < beta_min <= beta_max < 1.
/// Linear: beta_t = beta_min + (beta_max - beta_min)(t-1)/(T-1).
/// Cosine: beta_t from the squared-cosine alpha_bar curve (offset 0.008),
/// clipped to [beta_min, beta_max].
DiffusionSchedule make_schedule(int T, double beta_min, double beta_max,
                                ScheduleShape shape = ScheduleShape::Linear);

/// Linear 1e-4 .. 0.2 over 50 steps.
DiffusionSchedule default_schedule();

/// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, eps ~ N(0, 1) per coordinate
/// drawn column by column (x, y, z). t = 0 returns z0. Throws IndexError for
/// t outside [0, T].
Points forward_noise(const Points& z0, int t, const DiffusionSchedule& s, std::mt19937_64& rng);

/// One transition of the Markov chain: z_t = sqrt(alpha_t) z_{t-1} +
/// sqrt(beta_t) eps. Throws IndexError for t outside [1, T].
Points forward_step(const Points& z_prev, int t, const DiffusionSchedule& s, std::mt19937_64& rng);

struct PosteriorCoefficients {
  double c0;          // multiplies z0 (or its estimate)
  double ct;          // multiplies z_t
  double beta_tilde;  // posterior variance
};

/// c0 = sqrt(abar_{t-1}) beta_t / (1 - abar_t),
/// ct = sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t),
/// beta_tilde = (1 - abar_{t-1}) / (1 - abar_t) * beta_t. Throws IndexError
/// for t outside [1, T]. At t = 1 the result is exactly (1, 0, 0).
PosteriorCoefficients posterior_coefficients(int t, const DiffusionSchedule& s);

/// c0 * z0_hat + ct * z_t. Throws DimensionError on a size mismatch.
Points posterior_mean(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s);

/// Posterior mean plus sqrt(beta_tilde) eps for t > 1; exactly the mean at t = 1.
Points unconditional_step(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s,
                          std::mt19937_64& rng);

/// lambda * z. Throws ConfigError unless lambda is in [0, 1).
Points filter_phi(const Points& z, double lambda);

/// Helix-Gating scalar: 1 when helix_fraction(pred) >= helix_fraction(sketch),
/// else gamma * (o_y - o) + eta. Throws PreconditionError on empty labels.
double helix_gate(const SseLabels& pred, const SseLabels& sketch, double gamma, double eta);

}  // namespace curvefold
