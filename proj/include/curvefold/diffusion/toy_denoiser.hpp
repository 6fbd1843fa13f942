// SPDX-License-Identifier: Apache-2.0
//
// Small learned denoiser for desk-scale experiments. It regresses the clean
// C-alpha trace from (z_t, t) with a stack of EGCL layers over a banded
// residue graph, so predictions are rigid-equivariant by construction.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "curvefold/diffusion/denoiser.hpp"
#include "curvefold/diffusion/schedule.hpp"
#include "curvefold/encoder/encoder.hpp"
#include "curvefold/nn/tape.hpp"

#include "json.hpp"

namespace curvefold {

struct ToyDenoiserShape {
  int layers = 3;
  int hidden = 32;
  /// Residues i, j are connected when 0 < |i - j| <= window.
  int window = 4;
};

class ToyDenoiser final : public Denoiser {
 public:
  /// `variogram[k]` is the mean squared distance between residues k apart
  /// in clean traces (units of `coord_scale`, lags past the end reuse the
  /// last entry). It defines a Gaussian chain prior whose posterior mean is
  /// the linear skip path under the learned correction.
  ToyDenoiser(ToyDenoiserShape shape, DiffusionSchedule schedule, double coord_scale, std::vector<double> variogram,
              std::uint64_t init_seed);
  ToyDenoiser(const ToyDenoiser&) = delete;
  ToyDenoiser& operator=(const ToyDenoiser&) = delete;

  /// Labels come from geometric assignment on the prediction. Motif
  /// residues are copied into the prediction verbatim. Throws IndexError if
  /// t is outside [1, T] and PreconditionError for fewer than 3 residues.
  DenoiserOutput predict_z0(const Points& z_t, int t, const MotifSpec* motif) const override;
  std::string name() const override { return "toy"; }

  /// Records the prediction for centred, scaled input rows x (N x 3) and
  /// returns centred, scaled output rows.
  nn::Tape::Var forward(nn::Tape& tape, const Eigen::MatrixXd& x, int t) const;

  const ToyDenoiserShape& shape() const { return shape_; }
  const DiffusionSchedule& schedule() const { return schedule_; }
  double coord_scale() const { return coord_scale_; }
  const std::vector<double>& variogram() const { return variogram_; }
  /// Posterior-mean filter of the chain prior for n residues at noise level
  /// alpha_bar: an n x n matrix applied to centred coordinate rows.
  Eigen::MatrixXd linear_estimate(Eigen::Index n, double alpha_bar) const;
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// {"format":"curvefold.toy_denoiser", "version":1, "shape", "schedule",
  ///  "coord_scale", "variogram", "params"}.
  nlohmann::json to_json() const;
  /// Throws ConfigError on a malformed or mismatched document.
  static std::shared_ptr<ToyDenoiser> from_json(const nlohmann::json& j);

 private:
  ToyDenoiserShape shape_;
  DiffusionSchedule schedule_;
  double coord_scale_;
  std::vector<double> variogram_;
  nn::ParameterSet params_;
  std::vector<EgclLayer> layers_;
};

struct ToyDenoiserConfig {
  ToyDenoiserShape shape{};
  DiffusionSchedule schedule = default_schedule();
  double coord_scale = 10.0;
  int epochs = 20;
  /// Noise draws per training backbone per epoch.
  int draws_per_example = 2;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct ToyTrainingResult {
  std::shared_ptr<ToyDenoiser> denoiser;
  /// Mean reconstruction loss per epoch (steps are stratified over [1, T]).
  std::vector<double> loss_trace;
};

/// Trains with the DDPM reconstruction objective (MSE between prediction and
/// the centred clean trace, t uniform on [1, T]). Deterministic for a seed.
/// Throws PreconditionError on an empty set or a backbone shorter than 3,
/// ConfigError on bad settings and TrainingError if the loss goes non-finite.
ToyTrainingResult train_toy_denoiser(const std::vector<Backbone>& train, const ToyDenoiserConfig& cfg);

/// n labeled helix-bundle traces from the sketcher, stream i seeded by
/// derive_seed(seed, i).
std::vector<Backbone> generate_bundle_backbones(std::size_t n, std::uint64_t seed);

}  // namespace curvefold
