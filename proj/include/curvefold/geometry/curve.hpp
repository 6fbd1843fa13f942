// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "curvefold/geometry/types.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

/// Ordered 3D polyline (Angstrom) with optional per-point SSE labels.
///
/// Invariants, checked on construction: at least two points, consecutive
/// points more than 1e-9 apart, labels (if any) one per point.
class Curve {
 public:
  static constexpr double kMinSpacing = 1e-9;

  Curve(Points points, std::optional<SseLabels> labels = std::nullopt, std::string id = {});

  const Points& points() const noexcept { return points_; }
  const std::optional<SseLabels>& labels() const noexcept { return labels_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  bool labeled() const noexcept { return labels_.has_value(); }
  Vec3 point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }

  Curve with_points(Points p) const { return Curve(std::move(p), labels_, id_); }
  Curve with_labels(std::optional<SseLabels> l) const { return Curve(points_, std::move(l), id_); }
  Curve with_id(std::string id) const { return Curve(points_, labels_, std::move(id)); }
  Curve transformed(const RigidTransform& g) const { return with_points(g.apply(points_)); }

 private:
  Points points_;
  std::optional<SseLabels> labels_;
  std::string id_;
};

/// Cumulative arc length at every vertex; front() == 0.
std::vector<double> arc_lengths(const Points& p);
double total_length(const Points& p);

/// Point at arc length `s` along the polyline (clamped to the ends).
Vec3 point_at_arc(const Points& p, const std::vector<double>& cum, double s);

struct Resampled {
  Points points;
  /// For each output point, the input vertex nearest in arc length.
  std::vector<std::size_t> nearest_source;
};

/// `n` points equally spaced in arc length; both endpoints kept exactly.
Resampled resample_points(const Points& p, std::size_t n);

/// Resample to `n` points; labels follow the arc-length-nearest input point.
/// Throws InvalidCurve if n < 2.
Curve resample_curve(const Curve& curve, std::size_t n);

}  // namespace curvefold
