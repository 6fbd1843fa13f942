// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/curve.hpp"

#include <algorithm>
#include <cmath>

#include "curvefold/errors.hpp"

namespace curvefold {

bool is_sse_label(char c) noexcept { return c == 'H' || c == 'E' || c == 'L'; }

SseLabels::SseLabels(std::string labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!is_sse_label(labels_[i])) {
      throw DataError("invalid SSE label '" + std::string(1, labels_[i]) + "' at position " +
                      std::to_string(i));
    }
  }
}

SseLabels SseLabels::uniform(std::size_t n, char label) { return SseLabels(std::string(n, label)); }

std::vector<SseLabels::Segment> SseLabels::segments() const {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < labels_.size();) {
    std::size_t j = i;
    while (j < labels_.size() && labels_[j] == labels_[i]) ++j;
    out.push_back({labels_[i], i, j - i});
    i = j;
  }
  return out;
}

Curve::Curve(Points points, std::optional<SseLabels> labels, std::string id)
    : points_(std::move(points)), labels_(std::move(labels)), id_(std::move(id)) {
  if (points_.cols() < 2) throw InvalidCurve("curve needs at least 2 points");
  if (!points_.allFinite()) throw InvalidCurve("curve has non-finite coordinates");
  for (Eigen::Index i = 1; i < points_.cols(); ++i) {
    if ((points_.col(i) - points_.col(i - 1)).norm() <= kMinSpacing) {
      throw InvalidCurve("consecutive points " + std::to_string(i - 1) + " and " +
                         std::to_string(i) + " coincide");
    }
  }
  if (labels_ && labels_->size() != size()) {
    throw InvalidCurve("label count " + std::to_string(labels_->size()) +
                       " does not match point count " + std::to_string(size()));
  }
}

std::vector<double> arc_lengths(const Points& p) {
  std::vector<double> cum(static_cast<std::size_t>(p.cols()), 0.0);
  for (Eigen::Index i = 1; i < p.cols(); ++i)
    cum[i] = cum[i - 1] + (p.col(i) - p.col(i - 1)).norm();
  return cum;
}

double total_length(const Points& p) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < p.cols(); ++i) s += (p.col(i) - p.col(i - 1)).norm();
  return s;
}

Vec3 point_at_arc(const Points& p, const std::vector<double>& cum, double s) {
  if (s <= 0.0) return p.col(0);
  if (s >= cum.back()) return p.col(p.cols() - 1);
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const auto j = static_cast<Eigen::Index>(it - cum.begin());
  const double seg = cum[j] - cum[j - 1];
  const double u = seg > 0.0 ? (s - cum[j - 1]) / seg : 0.0;
  return (1.0 - u) * p.col(j - 1) + u * p.col(j);
}

Resampled resample_points(const Points& p, std::size_t n) {
  if (n < 2) throw InvalidCurve("resample target must be at least 2 points");
  if (p.cols() < 2) throw InvalidCurve("curve needs at least 2 points");
  const auto cum = arc_lengths(p);
  const double total = cum.back();
  Resampled out{Points(3, static_cast<Eigen::Index>(n)), std::vector<std::size_t>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n - 1);
    out.points.col(static_cast<Eigen::Index>(k)) = point_at_arc(p, cum, s);
    // nearest vertex by arc length
    const auto it = std::lower_bound(cum.begin(), cum.end(), s);
    std::size_t j = static_cast<std::size_t>(it - cum.begin());
    if (j >= cum.size()) j = cum.size() - 1;
    if (j > 0 && std::abs(cum[j - 1] - s) <= std::abs(cum[j] - s)) --j;
    out.nearest_source[k] = j;
  }
  out.points.col(0) = p.col(0);
  out.points.col(static_cast<Eigen::Index>(n - 1)) = p.col(p.cols() - 1);
  return out;
}

Curve resample_curve(const Curve& curve, std::size_t n) {
  auto r = resample_points(curve.points(), n);
  std::optional<SseLabels> labels;
  if (curve.labels()) {
    std::string s(n, 'L');
    for (std::size_t k = 0; k < n; ++k) s[k] = (*curve.labels())[r.nearest_source[k]];
    labels = SseLabels(std::move(s));
  }
  return Curve(std::move(r.points), std::move(labels), curve.id());
}

}  // namespace curvefold
