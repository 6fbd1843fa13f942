// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/types.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

/// Fixed residues for motif scaffolding: coords.col(k) is residue indices[k].
struct MotifSpec {
  Points coords;
  std::vector<std::size_t> indices;
  bool empty() const { return indices.empty(); }
};

struct DenoiserOutput {
  Points coords;
  SseLabels labels;
};

/// Predicts the clean structure from a noisy one. Implementations are
/// immutable after construction and safe to share across threads.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  /// Output has the same residue count as z_t. When `motif` is given the
  /// motif coordinates must come back unchanged at the motif indices.
  virtual DenoiserOutput predict_z0(const Points& z_t, int t, const MotifSpec* motif) const = 0;
  /// Residue count the denoiser is bound to, if any.
  virtual std::optional<std::size_t> length() const { return std::nullopt; }
  virtual std::string name() const = 0;
};

using DenoiserPtr = std::shared_ptr<const Denoiser>;

/// Returns the target rigidly superposed onto z_t (onto the motif residues
/// instead when a motif is given, which are then copied in verbatim) with the
/// target's labels. Throws DimensionError at call time if z_t has the wrong
/// length and PreconditionError if the target is unlabeled or shorter than 3.
DenoiserPtr oracle_denoiser(const Backbone& target);

/// Wraps `inner`; throws from predict_z0 at step `fail_at` (fault injection).
DenoiserPtr failing_denoiser(DenoiserPtr inner, int fail_at);

/// g o inner o g^-1: coordinates (and the motif) are mapped back through g
/// before calling `inner`, its prediction is mapped forward through g.
DenoiserPtr conjugated_denoiser(DenoiserPtr inner, const RigidTransform& g);

/// Validates a motif against a chain length: indices in range and distinct,
/// one coordinate column per index. Throws IndexError or DimensionError.
void validate_motif(const MotifSpec& motif, std::size_t length);

}  // namespace curvefold
