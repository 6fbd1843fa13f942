// SPDX-License-Identifier: Apache-2.0
//
// Per-point secondary-structure prediction on topology curves.
//
// The curve is interpolated to a dense polyline, curvature is computed on it,
// and two branches run in parallel: three E(n)-equivariant graph convolution
// layers over the chain graph (node feature = curvature, edge feature =
// squared distance) and a width-15 1D convolution over the curvature signal.
// Multi-head attention with queries from the graph branch and keys/values
// from the convolution branch fuses them; a linear head gives H/E/L logits.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvefold/geometry/curve.hpp"
#include "curvefold/nn/tape.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

/// Class order of every probability triple.
inline constexpr std::array<char, 3> kSseClasses = {'H', 'E', 'L'};
int sse_class_index(char label);

struct EncoderShape {
  int layers = 3;
  int hidden = 32;
  int heads = 4;
  int kernel = 15;
  /// Stacked width-`kernel` convolutions in the curvature branch.
  int conv_layers = 2;
  int classes = 3;
  /// Dense samples per input span (the dense polyline has about 3x the
  /// input point count).
  int dense_per_span = 3;
  /// Curvature is multiplied by this length (A) before entering the network.
  double kappa_scale = 4.0;
};

/// One EGCL layer: edge MLP phi_e, coordinate MLP phi_x, node MLP phi_h.
struct EgclLayer {
  int in_dim = 0;
  int hidden = 0;
  nn::Mlp2 phi_e;
  nn::Mlp2 phi_x;
  nn::Mlp2 phi_h;

  static EgclLayer make(nn::ParameterSet& ps, const std::string& name, int in_dim, int hidden,
                        std::mt19937_64& rng);
};

/// Directed edge list; every undirected chain edge appears in both directions.
struct EdgeList {
  std::vector<int> src;
  std::vector<int> dst;
  /// Scalar edge attribute a_ij per edge; empty means 1 for every edge.
  std::vector<double> attr;
  std::size_t size() const { return src.size(); }
};

/// Edges (i, i+1) and (i+1, i) for a chain of n nodes.
EdgeList chain_edges(std::size_t n);

/// Tape-level layer application: h is N x in_dim, x is N x 3 (one row per node).
std::pair<nn::Tape::Var, nn::Tape::Var> egcl_apply(const EgclLayer& layer, nn::Tape& tape, nn::Tape::Var h,
                                                   nn::Tape::Var x, const EdgeList& edges);

struct EgclOutput {
  Eigen::MatrixXd h;
  Eigen::MatrixXd x;
};

/// Value-level convenience for a single layer. Throws DimensionError when
/// h and x row counts differ or h has the wrong width, IndexError for edges
/// outside [0, N).
EgclOutput egcl_forward(const EgclLayer& layer, const Eigen::MatrixXd& h, const Eigen::MatrixXd& x,
                        const EdgeList& edges);

class EncoderModel {
 public:
  static constexpr int kFormatVersion = 1;

  explicit EncoderModel(std::uint64_t init_seed = 0, EncoderShape shape = {});
  EncoderModel(const EncoderModel& other);
  EncoderModel& operator=(const EncoderModel& other);
  EncoderModel(EncoderModel&&) noexcept = default;
  EncoderModel& operator=(EncoderModel&&) noexcept = default;

  const EncoderShape& shape() const { return shape_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const std::vector<EgclLayer>& egcl() const { return egcl_; }

  /// Records the full forward pass; returns dense-point logits (N x 3).
  struct Forward {
    nn::Tape::Var logits;
    /// Dense row of every input point.
    std::vector<int> input_rows;
  };
  Forward forward(nn::Tape& tape, const Points& points) const;

  /// {"format", "version", "shape", "manifest", "params"}.
  nlohmann::json to_json() const;
  /// Throws ConfigError on a format, version, shape or manifest mismatch.
  static EncoderModel from_json(const nlohmann::json& j);

 private:
  void build(std::uint64_t init_seed);

  EncoderShape shape_;
  nn::ParameterSet params_;
  std::vector<EgclLayer> egcl_;
  std::vector<nn::Linear> convs_;
  nn::Linear conv_mix_;
  nn::Linear wq_, wk_, wv_, wo_;
  nn::Linear head_;
};

/// Minimum input length accepted by encode_curve and training.
inline constexpr std::size_t kMinEncoderPoints = 8;

/// Per-input-point probabilities over (H, E, L). Rows sum to 1.
/// Throws LengthTooShort for curves with fewer than 8 points.
std::vector<std::array<double, 3>> encode_curve(const EncoderModel& model, const Curve& curve);

/// Argmax labels of encode_curve.
SseLabels predict_labels(const EncoderModel& model, const Curve& curve);

struct SseExample {
  Curve curve;
  SseLabels labels;
};

struct TrainingConfig {
  double learning_rate = 1e-4;
  int epochs = 100;
  int batch_size = 1;
  double mask_fraction = 0.0;
  std::uint64_t seed = 0;
  /// Evaluate held-out accuracy every this many epochs (and after the last).
  int eval_every = 1;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  /// Empty when no held-out set was given or this epoch was not evaluated.
  std::optional<double> heldout_accuracy;
};

struct TrainingResult {
  EncoderModel model;
  std::vector<EpochStats> trace;
};

/// Adam on per-point cross-entropy. Each epoch visits the training set in a
/// seeded random order; with mask_fraction f, floor(f * M) randomly chosen
/// points of every example are left out of that example's loss. Results are
/// bitwise reproducible for a fixed config on the same ISA.
///
/// Throws ConfigError for invalid hyperparameters, PreconditionError for an
/// empty dataset, DataError when labels and points are misaligned,
/// LengthTooShort for a curve below 8 points and TrainingError if the loss
/// becomes non-finite.
TrainingResult train_encoder(const std::vector<SseExample>& dataset, const TrainingConfig& cfg,
                             const std::vector<SseExample>& heldout = {});

/// Fraction of points whose argmax label matches.
double encoder_accuracy(const EncoderModel& model, const std::vector<SseExample>& data);

/// Helix bundles (a third of them ending in a beta hairpin), sketched to
/// C-alpha traces and extracted at rates cycling through 0.4, 0.8, 1.2.
/// Example i depends only on (seed, i).
std::vector<SseExample> generate_synthetic_sse_dataset(std::size_t n, std::uint64_t seed);

}  // namespace curvefold
