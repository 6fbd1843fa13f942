// SPDX-License-Identifier: Apache-2.0
//
// Reverse diffusion over C-alpha translations with sketch guidance.
//
// Each guided step mixes three terms with the DDPM posterior coefficients
//   z_{t-1} = c0 * z0_hat + ct * (1 - lambda) * z_t + lambda * ct * F * y
// and adds sqrt(beta_tilde) noise for t > 1. The sketch y is rigidly
// superposed onto z0_hat first, and F comes from Helix-Gating (or a fixed
// phase switch). All mixing happens relative to a frame origin and in units
// of `coord_scale` Angstrom, so the noise has unit variance in those units.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "curvefold/diffusion/denoiser.hpp"
#include "curvefold/diffusion/schedule.hpp"
#include "curvefold/sketch/sketcher.hpp"

#include "json.hpp"

namespace curvefold {

enum class Phase { Confidential, Controllable };
enum class SamplerMode { Unconditional, Guided, MotifGuided };

const char* to_string(Phase p);
const char* to_string(SamplerMode m);
SamplerMode sampler_mode_from_string(const std::string& s);

struct SamplerConfig {
  double lambda = 2.0 / 3.0;
  double gamma = 0.2;
  double eta = 0.7;
  /// When set, Helix-Gating is off: steps t <= switch are controllable
  /// (F = 1), earlier steps confidential with F = gamma * max(0, o_y - o) + eta.
  std::optional<int> fixed_phase_switch;
  std::uint64_t seed = 0;
  SamplerMode mode = SamplerMode::Guided;
  /// Length unit of the diffusion state (A).
  double coord_scale = 10.0;
  /// Rotates every noise draw and sets the frame origin (the origin moves to
  /// the motif centroid when a motif is present).
  RigidTransform noise_frame{};
  /// Keep z_t and z0_hat per step in the trajectory.
  bool record_coordinates = true;
};

/// Throws ConfigError unless lambda in [0, 1), gamma >= 0, eta in (0, 1],
/// coord_scale > 0 and the switch (if any) lies in [0, T].
void validate_sampler_config(const SamplerConfig& cfg, const DiffusionSchedule& s);

struct StepFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  double scale = 1.0;
};

struct GuidedStepResult {
  Points z_prev;
  Phase phase;
  double gate;
  /// RMSD between z0_hat and the superposed sketch.
  double rmsd_to_sketch;
};

/// One reverse step. `previous` latches the controllable phase.
/// Throws GuidanceShapeError if the sketch length differs from z_t.
GuidedStepResult guided_step(const Points& z_t, const DenoiserOutput& z0_hat, const Sketch& y, int t,
                             const DiffusionSchedule& s, const SamplerConfig& cfg, std::mt19937_64& rng,
                             const StepFrame& frame = {}, Phase previous = Phase::Confidential);

/// Plain DDPM step in a frame (noise rotated by frame.rotation and scaled by
/// frame.scale, mixing relative to frame.origin).
Points unconditional_step_in_frame(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s,
                                   std::mt19937_64& rng, const StepFrame& frame);

struct StepRecord {
  int t = 0;
  Phase phase = Phase::Confidential;
  double gate = 1.0;
  /// NaN in unconditional mode.
  double rmsd_to_sketch = 0.0;
  Points z_t;
  Points z0_hat;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  /// z_0 with labels from geometric assignment.
  Backbone final_backbone;
  /// Sketch after length mediation (empty in unconditional mode).
  std::optional<Sketch> sketch;
};

/// Full reverse trajectory from z_T ~ N(0, I) (in frame units) down to z_0.
///
/// The chain length is the denoiser's length, else the sketch's. A sketch of
/// a different length is resampled along its arc to the chain length.
/// Unconditional mode ignores the sketch (it may be null) and records
/// phase = controllable, F = 1. Throws DenoiserFailure(t) if the denoiser
/// throws or returns a wrong-sized or non-finite prediction at step t.
Trajectory sample(const Denoiser& denoiser, const Sketch* y, const SamplerConfig& cfg, const DiffusionSchedule& s,
                  std::optional<std::size_t> length = std::nullopt);

/// Motif scaffolding: residues in motif.indices are pinned to motif.coords at
/// every step (z_T included) and only the scaffold moves. An empty motif
/// reproduces sample() exactly. Throws IndexError for out-of-range or
/// repeated indices.
Trajectory sample_with_motif(const Denoiser& denoiser, const Sketch* y, const MotifSpec& motif,
                             const SamplerConfig& cfg, const DiffusionSchedule& s,
                             std::optional<std::size_t> length = std::nullopt);

/// Resamples a sketch to n residues along its chain, labels by nearest arc.
Sketch resample_sketch(const Sketch& y, std::size_t n);

/// One JSON object per step: {"t", "phase", "F", "rmsd_to_sketch"}, plus
/// "z_t" and "z0_hat" coordinate arrays when `with_coordinates`.
std::string trajectory_jsonl(const Trajectory& traj, bool with_coordinates = false);

}  // namespace curvefold
