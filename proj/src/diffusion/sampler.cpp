// SPDX-License-Identifier: Apache-2.0
#include "curvefold/diffusion/sampler.hpp"

#include <cmath>
#include <limits>

#include "curvefold/backbone/sse.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/curve.hpp"
#include "curvefold/geometry/superpose.hpp"
#include "curvefold/simd/kernels.hpp"

namespace curvefold {

const char* to_string(Phase p) { return p == Phase::Confidential ? "confidential" : "controllable"; }

const char* to_string(SamplerMode m) {
  switch (m) {
    case SamplerMode::Unconditional: return "unconditional";
    case SamplerMode::Guided: return "guided";
    case SamplerMode::MotifGuided: return "motif-guided";
  }
  return "?";
}

SamplerMode sampler_mode_from_string(const std::string& s) {
  if (s == "unconditional") return SamplerMode::Unconditional;
  if (s == "guided") return SamplerMode::Guided;
  if (s == "motif-guided") return SamplerMode::MotifGuided;
  throw ConfigError("unknown sampler mode '" + s + "'");
}

void validate_sampler_config(const SamplerConfig& cfg, const DiffusionSchedule& s) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda < 1.0)) throw ConfigError("lambda must lie in [0, 1)");
  if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) throw ConfigError("gamma must be >= 0");
  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
  if (!(cfg.coord_scale > 0.0) || !std::isfinite(cfg.coord_scale)) throw ConfigError("coord_scale must be positive");
  if (cfg.fixed_phase_switch && (*cfg.fixed_phase_switch < 0 || *cfg.fixed_phase_switch > s.T))
    throw ConfigError("fixed phase switch must lie in [0, T]");
}

namespace {

Points noise(Eigen::Index n, std::mt19937_64& rng, const StepFrame& frame) {
  std::normal_distribution<double> g(0.0, 1.0);
  Points e(3, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) e(d, i) = g(rng);
  return frame.rotation * e;
}

Points to_frame(const Points& p, const StepFrame& f) { return (p.colwise() - f.origin) / f.scale; }
Points from_frame(const Points& p, const StepFrame& f) { return (p * f.scale).colwise() + f.origin; }

// a*x + b*y + c*w in frame units, plus sqrt(var) noise for t > 1.
Points mix_and_noise(double a, const Points& x, double b, const Points& y, double c, const Points& w, double var, int t,
                     std::mt19937_64& rng, const StepFrame& frame) {
  Points out(3, x.cols());
  simd::mix3(a, flat(x), b, flat(y), c, flat(w), flat(out));
  if (t > 1) out += std::sqrt(var) * noise(x.cols(), rng, frame);
  return from_frame(out, frame);
}

}  // namespace

Points unconditional_step_in_frame(const Points& z_t, const Points& z0_hat, int t, const DiffusionSchedule& s,
                                   std::mt19937_64& rng, const StepFrame& frame) {
  if (z_t.cols() != z0_hat.cols()) throw DimensionError("prediction length differs from z_t");
  const auto pc = posterior_coefficients(t, s);
  if (t == 1) return z0_hat;
  const Points a = to_frame(z0_hat, frame);
  const Points b = to_frame(z_t, frame);
  return mix_and_noise(pc.c0, a, pc.ct, b, 0.0, b, pc.beta_tilde, t, rng, frame);
}

GuidedStepResult guided_step(const Points& z_t, const DenoiserOutput& z0_hat, const Sketch& y, int t,
                             const DiffusionSchedule& s, const SamplerConfig& cfg, std::mt19937_64& rng,
                             const StepFrame& frame, Phase previous) {
  if (static_cast<Eigen::Index>(y.size()) != z_t.cols() || y.coords.cols() != z_t.cols())
    throw GuidanceShapeError("sketch has " + std::to_string(y.size()) + " residues, model has " +
                             std::to_string(z_t.cols()));
  if (z0_hat.coords.cols() != z_t.cols()) throw DimensionError("prediction length differs from z_t");
  const auto pc = posterior_coefficients(t, s);

  GuidedStepResult r;
  const double o = helix_fraction(z0_hat.labels);
  const double oy = helix_fraction(y.labels);
  if (cfg.fixed_phase_switch) {
    r.phase = t <= *cfg.fixed_phase_switch ? Phase::Controllable : Phase::Confidential;
    r.gate = r.phase == Phase::Controllable ? 1.0 : cfg.gamma * std::max(0.0, oy - o) + cfg.eta;
  } else if (previous == Phase::Controllable || o >= oy) {
    r.phase = Phase::Controllable;
    r.gate = 1.0;
  } else {
    r.phase = Phase::Confidential;
    r.gate = helix_gate(z0_hat.labels, y.labels, cfg.gamma, cfg.eta);
  }

  const Points y_al = kabsch_superpose(y.coords, z0_hat.coords).apply(y.coords);
  r.rmsd_to_sketch = rmsd(y_al, z0_hat.coords);

  if (cfg.lambda == 0.0 || t == 1) {
    r.z_prev = unconditional_step_in_frame(z_t, z0_hat.coords, t, s, rng, frame);
  } else {
    const Points a = to_frame(z0_hat.coords, frame);
    const Points b = to_frame(z_t, frame);
    const Points w = to_frame(y_al, frame);
    r.z_prev = mix_and_noise(pc.c0, a, pc.ct * (1.0 - cfg.lambda), b, cfg.lambda * pc.ct * r.gate, w, pc.beta_tilde, t,
                             rng, frame);
  }
  return r;
}

Sketch resample_sketch(const Sketch& y, std::size_t n) {
  if (n == y.size()) return y;
  const Resampled rs = resample_points(y.coords, n);
  std::string labels;
  labels.reserve(n);
  for (std::size_t src : rs.nearest_source) labels.push_back(y.labels[src]);
  Sketch out;
  out.coords = rs.points;
  out.labels = SseLabels(labels);
  out.source_curve_id = y.source_curve_id;
  return out;
}

namespace {

void pin(Points& z, const MotifSpec* motif) {
  if (motif == nullptr) return;
  for (std::size_t k = 0; k < motif->indices.size(); ++k)
    z.col(static_cast<Eigen::Index>(motif->indices[k])) = motif->coords.col(static_cast<Eigen::Index>(k));
}

Trajectory run(const Denoiser& denoiser, const Sketch* y, const MotifSpec* motif, const SamplerConfig& cfg,
               const DiffusionSchedule& s, std::optional<std::size_t> length) {
  validate_sampler_config(cfg, s);
  const bool guided = cfg.mode != SamplerMode::Unconditional;
  if (guided && y == nullptr) throw PreconditionError("guided sampling needs a sketch");

  std::size_t n = 0;
  if (auto dl = denoiser.length()) {
    n = *dl;
  } else if (length) {
    n = *length;
  } else if (y != nullptr) {
    n = y->size();
  } else {
    throw PreconditionError("chain length is unknown: pass a length or a sketch");
  }
  if (n < 3) throw PreconditionError("chain needs at least 3 residues");
  if (motif != nullptr) validate_motif(*motif, n);
  const bool has_motif = motif != nullptr && !motif->empty();

  Trajectory traj;
  if (guided) traj.sketch = resample_sketch(*y, n);

  StepFrame frame;
  frame.rotation = cfg.noise_frame.rotation;
  frame.scale = cfg.coord_scale;
  frame.origin = has_motif ? Vec3(motif->coords.rowwise().mean()) : cfg.noise_frame.translation;

  std::mt19937_64 rng(cfg.seed);
  Points z = from_frame(noise(static_cast<Eigen::Index>(n), rng, frame), frame);
  if (has_motif) pin(z, motif);

  Phase phase = Phase::Confidential;
  traj.steps.reserve(static_cast<std::size_t>(s.T));
  for (int t = s.T; t >= 1; --t) {
    DenoiserOutput pred;
    try {
      pred = denoiser.predict_z0(z, t, has_motif ? motif : nullptr);
    } catch (const std::exception& e) {
      throw DenoiserFailure(t, e.what());
    }
    if (pred.coords.cols() != static_cast<Eigen::Index>(n) || pred.labels.size() != n)
      throw DenoiserFailure(t, "prediction has the wrong length");
    if (!pred.coords.allFinite()) throw DenoiserFailure(t, "prediction is not finite");

    StepRecord rec;
    rec.t = t;
    if (cfg.record_coordinates) {
      rec.z_t = z;
      rec.z0_hat = pred.coords;
    }
    Points next;
    if (!guided) {
      next = unconditional_step_in_frame(z, pred.coords, t, s, rng, frame);
      rec.phase = Phase::Controllable;
      rec.gate = 1.0;
      rec.rmsd_to_sketch = std::numeric_limits<double>::quiet_NaN();
    } else {
      auto r = guided_step(z, pred, *traj.sketch, t, s, cfg, rng, frame, phase);
      next = std::move(r.z_prev);
      phase = r.phase;
      rec.phase = r.phase;
      rec.gate = r.gate;
      rec.rmsd_to_sketch = r.rmsd_to_sketch;
    }
    if (has_motif) pin(next, motif);
    z = std::move(next);
    traj.steps.push_back(std::move(rec));
  }

  const Backbone plain = Backbone::single_chain(z, SseLabels::uniform(n, 'L'));
  traj.final_backbone = plain.with_labels(assign_sse_geometric(plain).labels);
  return traj;
}

}  // namespace

Trajectory sample(const Denoiser& denoiser, const Sketch* y, const SamplerConfig& cfg, const DiffusionSchedule& s,
                  std::optional<std::size_t> length) {
  return run(denoiser, y, nullptr, cfg, s, length);
}

Trajectory sample_with_motif(const Denoiser& denoiser, const Sketch* y, const MotifSpec& motif,
                             const SamplerConfig& cfg, const DiffusionSchedule& s, std::optional<std::size_t> length) {
  return run(denoiser, y, &motif, cfg, s, length);
}

std::string trajectory_jsonl(const Trajectory& traj, bool with_coordinates) {
  std::string out;
  for (const auto& r : traj.steps) {
    nlohmann::json j;
    j["t"] = r.t;
    j["phase"] = to_string(r.phase);
    j["F"] = r.gate;
    j["rmsd_to_sketch"] = std::isfinite(r.rmsd_to_sketch) ? nlohmann::json(r.rmsd_to_sketch) : nlohmann::json(nullptr);
    if (with_coordinates) {
      auto pts = [](const Points& p) {
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < p.cols(); ++i) a.push_back({p(0, i), p(1, i), p(2, i)});
        return a;
      };
      j["z_t"] = pts(r.z_t);
      j["z0_hat"] = pts(r.z0_hat);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace curvefold
