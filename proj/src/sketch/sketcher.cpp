// SPDX-License-Identifier: Apache-2.0
#include "curvefold/sketch/sketcher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/frames.hpp"
#include "curvefold/geometry/spline.hpp"

namespace curvefold {
namespace {

constexpr std::size_t kMaxDense = 40000;

// Dense axis with frames, queried by arc length.
class Axis {
 public:
  Axis(Points pts, const std::vector<std::size_t>& knot_index)
      : pts_(std::move(pts)), cum_(arc_lengths(pts_)), frames_(parallel_transport_frames(pts_)) {
    for (auto k : knot_index) knot_arc_.push_back(cum_[k]);
  }

  const std::vector<double>& knot_arc() const { return knot_arc_; }

  struct Local {
    Vec3 origin;
    Vec3 tangent;
    Vec3 normal;
    Vec3 binormal;
  };

  Local at(double s) const {
    const std::size_t n = cum_.size();
    s = std::clamp(s, 0.0, cum_.back());
    std::size_t j = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), s) - cum_.begin());
    j = std::clamp<std::size_t>(j, 1, n - 1) - 1;
    // skip zero-length spans
    while (j + 1 < n - 1 && cum_[j + 1] - cum_[j] <= 0.0) ++j;
    const auto a = static_cast<Eigen::Index>(j);
    const double span = cum_[j + 1] - cum_[j];
    const double f = span > 0.0 ? (s - cum_[j]) / span : 0.0;
    Local out;
    out.origin = (1.0 - f) * pts_.col(a) + f * pts_.col(a + 1);
    Vec3 t = pts_.col(a + 1) - pts_.col(a);
    out.tangent = t.norm() > 0.0 ? Vec3(t.normalized()) : Vec3(frames_.tangent.col(a));
    Vec3 nrm = (1.0 - f) * frames_.normal.col(a) + f * frames_.normal.col(a + 1);
    nrm -= out.tangent * out.tangent.dot(nrm);
    out.normal = nrm.normalized();
    out.binormal = out.tangent.cross(out.normal);
    return out;
  }

 private:
  Points pts_;
  std::vector<double> cum_;
  FrameField frames_;
  std::vector<double> knot_arc_;
};

Axis build_axis(const Points& p, const SketchParams& params) {
  const double len = total_length(p);
  const double m = static_cast<double>(p.cols());
  const double want = std::min(static_cast<double>(kMaxDense), std::max(m, len / params.dense_spacing));
  const double factor = std::max(1.0, want / m);
  if (p.cols() >= 4) {
    auto s = spline_interpolate(p, factor);
    return Axis(std::move(s.points), s.knot_index);
  }
  // Linear densification keeps every vertex.
  const auto cum = arc_lengths(p);
  std::vector<Vec3> pts;
  std::vector<std::size_t> knots;
  for (Eigen::Index i = 0; i + 1 < p.cols(); ++i) {
    knots.push_back(pts.size());
    const double seg = cum[static_cast<std::size_t>(i + 1)] - cum[static_cast<std::size_t>(i)];
    const int steps = std::max(1, static_cast<int>(std::ceil(seg / params.dense_spacing)));
    for (int k = 0; k < steps; ++k)
      pts.push_back(p.col(i) + (p.col(i + 1) - p.col(i)) * (static_cast<double>(k) / steps));
  }
  knots.push_back(pts.size());
  pts.push_back(p.col(p.cols() - 1));
  Points out(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = pts[i];
  return Axis(std::move(out), knots);
}

}  // namespace

std::vector<ArcSegment> arc_segments(const Curve& curve, const std::vector<double>& knot_arc) {
  if (!curve.labeled()) throw PreconditionError("sketching needs a labeled curve");
  const auto& labels = *curve.labels();
  std::vector<ArcSegment> out;
  double begin = 0.0;
  for (const auto& run : labels.segments()) {
    const std::size_t last = run.end() - 1;
    const double end = run.end() < labels.size() ? 0.5 * (knot_arc[last] + knot_arc[last + 1]) : knot_arc.back();
    out.push_back({run.label, begin, end});
    begin = end;
  }
  return out;
}

std::size_t sketch_residue_count(char label, double arc, const SketchParams& params) {
  if (label == 'H') return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(arc / params.helix_rise)));
  return static_cast<std::size_t>(std::floor(arc / params.coil_spacing + 1e-9)) + 1;
}

Sketch sketch_from_curve(const Curve& curve, const SketchParams& params) {
  if (!curve.labeled()) throw PreconditionError("sketching needs a labeled curve");
  const Axis axis = build_axis(curve.points(), params);
  const auto segments = arc_segments(curve, axis.knot_arc());
  const double turn = 2.0 * std::numbers::pi / params.residues_per_turn;

  std::vector<Vec3> coords;
  std::string labels;
  Sketch sk;
  sk.source_curve_id = curve.id();
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& seg = segments[k];
    const double arc = seg.length();
    const double mid = 0.5 * (seg.begin + seg.end);
    const bool helix = seg.label == 'H';
    const double spacing = helix ? params.helix_rise : params.coil_spacing;
    if (arc < spacing) {
      sk.short_segments.push_back(k);
      coords.push_back(axis.at(mid).origin);
      labels.push_back(seg.label);
      continue;
    }
    const std::size_t n = sketch_residue_count(seg.label, arc, params);
    for (std::size_t j = 0; j < n; ++j) {
      const double s = mid + (static_cast<double>(j) - 0.5 * static_cast<double>(n - 1)) * spacing;
      const auto local = axis.at(s);
      if (helix) {
        const double th = turn * static_cast<double>(j);
        coords.push_back(local.origin + params.helix_radius * (std::cos(th) * local.normal + std::sin(th) * local.binormal));
      } else {
        coords.push_back(local.origin);
      }
      labels.push_back(seg.label);
    }
  }
  sk.coords.resize(3, static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) sk.coords.col(static_cast<Eigen::Index>(i)) = coords[i];
  sk.labels = SseLabels(std::move(labels));
  return sk;
}

}  // namespace curvefold
