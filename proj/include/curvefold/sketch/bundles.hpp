// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/curve.hpp"

namespace curvefold {

/// Random helix-bundle topologies used as synthetic ground truth.
struct BundleParams {
  int min_helices = 2;
  int max_helices = 4;
  double min_helix_length = 18.0;  // A of axis
  double max_helix_length = 33.0;
  double axis_spacing = 10.0;      // between neighbouring helix axes
  double max_tilt_deg = 10.0;
  double loop_lift_min = 3.0;      // how far a connecting loop bulges past the helix ends
  double loop_lift_max = 6.0;
  double tail_max = 6.0;           // terminal loop length
  double hairpin_probability = 0.0;
  double strand_min_length = 10.0;
  double strand_max_length = 15.0;
  double point_spacing = 2.0;      // curve sampling step
};

/// Labeled bundle curve: straight H axes on a ring, alternating direction,
/// joined by smooth loops, with optional terminal tails and an optional
/// C-terminal beta hairpin. Deterministic for a given generator state.
Curve random_bundle_curve(std::mt19937_64& rng, const BundleParams& params = {}, std::string id = {});

/// Ground-truth C-alpha trace for a bundle curve (its ideal sketch).
Backbone bundle_backbone(const Curve& curve);

/// Derives a well-mixed 64-bit seed from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace curvefold
