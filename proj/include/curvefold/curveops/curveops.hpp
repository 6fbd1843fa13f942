// SPDX-License-Identifier: Apache-2.0
//
// Curve editing and synthesis used by the sketch pad and the bench.
#pragma once

#include <cstdint>
#include <vector>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/curve.hpp"

namespace curvefold {

struct DragSpec {
  std::size_t anchor = 0;
  Vec3 displacement = Vec3::Zero();
  /// Gaussian falloff scale in arc length (A).
  double falloff = 8.0;
};

/// Point i moves by displacement * exp(-d_i^2 / (2 falloff^2)), d_i being
/// the arc-length distance to the anchor. Labels are kept. Throws IndexError
/// for a bad anchor and ConfigError unless falloff > 0.
Curve drag(const Curve& curve, const DragSpec& spec);

/// Attaches b after a. b is rotated (minimal rotation of its first tangent)
/// so that the angle at the junction between a's incoming segment and b's
/// outgoing segment is `angle_deg`, in the plane of a's last tangent and its
/// rotation-minimizing normal; 180 degrees continues straight on. b's first
/// point is then placed on a's last point and dropped, giving |a| + |b| - 1
/// points. Labels are concatenated when both curves carry them. Throws
/// ConfigError for an angle outside [0, 180] and DegenerateShape for a
/// zero-length end tangent.
Curve joint(const Curve& a, const Curve& b, double angle_deg);

/// Relabels points [begin, end) with `label`; an unlabeled curve starts from
/// all-L. Throws IndexError unless begin <= end <= size, DataError for a
/// label outside H/E/L.
Curve edit_sse(const Curve& curve, std::size_t begin, std::size_t end, char label);

struct LiftSpec {
  double depth_amplitude = 8.0;   // A
  double period = 24.0;           // points
  double noise_amplitude = 1.0;   // A
  std::uint64_t seed = 0;
};

/// Lifts a planar polyline to 3D: z(i) = A sin(2 pi i / period + phase) +
/// noise_amplitude * n(i), with the phase drawn from the seed and n a
/// cosine-interpolated value noise in [-1, 1] with knots every two points.
/// x and y are kept. Throws PreconditionError for fewer than 2 points and
/// ConfigError for negative amplitudes or a period below 4.
Curve lift_2d_to_3d(const Eigen::Matrix2Xd& points, const LiftSpec& spec);

/// Moves every point by an independent uniform draw from the ball of the
/// given radius. Draws are expressed in the curve's rotation-minimizing
/// frames, so the operation commutes with rigid motions for a fixed seed.
/// Radius 0 returns the curve unchanged. Throws ConfigError for a negative
/// radius.
Curve perturb_sphere(const Curve& curve, double radius, std::uint64_t seed);

inline constexpr double kDefaultHotspotCutoff = 8.0;

/// Sorted indices of target residues whose C-alpha lies within `cutoff` of
/// any curve point. Throws ConfigError unless cutoff > 0.
std::vector<std::size_t> find_hotspots(const Curve& curve, const Backbone& target,
                                       double cutoff = kDefaultHotspotCutoff);

}  // namespace curvefold
