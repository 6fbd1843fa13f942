// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "curvefold/geometry/types.hpp"

namespace curvefold {

/// Per-point right-handed orthonormal triads.
struct FrameField {
  Points tangent;
  Points normal;
  Points binormal;
  std::size_t size() const { return static_cast<std::size_t>(tangent.cols()); }
};

/// Rotation-minimizing frames by the double-reflection method.
///
/// Tangents are central chord directions (one-sided at the ends). When no
/// initial normal is given, it is taken from the curve itself: the offset of
/// the vertex farthest from the start tangent line, so the frame field
/// is equivariant under rigid motions. Perfectly straight input falls back to
/// a coordinate-axis normal. Zero-length segments reuse the previous frame.
FrameField parallel_transport_frames(const Points& p,
                                     const std::optional<Vec3>& initial_normal = std::nullopt);

/// Frenet normals (direction of the curvature vector) from chord stencils;
/// points with vanishing curvature copy the previous normal. Used as a
/// reference when measuring frame twist.
Points frenet_normals(const Points& p);

/// Sum over consecutive samples of the angle between normals (radians).
double total_normal_twist(const Points& normals);

}  // namespace curvefold
