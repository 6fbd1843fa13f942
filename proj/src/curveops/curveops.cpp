// SPDX-License-Identifier: Apache-2.0
#include "curvefold/curveops/curveops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/frames.hpp"

namespace curvefold {

Curve drag(const Curve& curve, const DragSpec& spec) {
  if (spec.anchor >= curve.size())
    throw IndexError("drag anchor " + std::to_string(spec.anchor) + " outside curve of " +
                     std::to_string(curve.size()) + " points");
  if (!(spec.falloff > 0.0) || !std::isfinite(spec.falloff)) throw ConfigError("drag falloff must be positive");
  const std::vector<double> cum = arc_lengths(curve.points());
  Points p = curve.points();
  const double s0 = cum[spec.anchor];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double d = cum[i] - s0;
    const double w = std::exp(-d * d / (2.0 * spec.falloff * spec.falloff));
    p.col(static_cast<Eigen::Index>(i)) += w * spec.displacement;
  }
  return curve.with_points(std::move(p));
}

namespace {

// Rotation taking unit vector u onto unit vector v about u x v; for opposite
// vectors the half-turn axis is `fallback` made orthogonal to u.
Mat3 minimal_rotation(const Vec3& u, const Vec3& v, const Vec3& fallback) {
  const double c = std::clamp(u.dot(v), -1.0, 1.0);
  Vec3 axis = u.cross(v);
  const double s = axis.norm();
  if (s < 1e-12) {
    if (c > 0) return Mat3::Identity();
    Vec3 f = fallback - fallback.dot(u) * u;
    if (f.norm() < 1e-9) f = u.unitOrthogonal();
    return Eigen::AngleAxisd(std::numbers::pi, f.normalized()).toRotationMatrix();
  }
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
}

}  // namespace

Curve joint(const Curve& a, const Curve& b, double angle_deg) {
  if (!(angle_deg >= 0.0 && angle_deg <= 180.0)) throw ConfigError("joint angle must lie in [0, 180] degrees");
  const auto ma = static_cast<Eigen::Index>(a.size());
  const auto mb = static_cast<Eigen::Index>(b.size());
  const Vec3 ta_raw = a.points().col(ma - 1) - a.points().col(ma - 2);
  const Vec3 tb_raw = b.points().col(1) - b.points().col(0);
  if (ta_raw.norm() < 1e-9 || tb_raw.norm() < 1e-9) throw DegenerateShape("joint: zero-length end tangent");
  const Vec3 ta = ta_raw.normalized();
  const Vec3 tb = tb_raw.normalized();

  const FrameField fa = parallel_transport_frames(a.points());
  Vec3 na = fa.normal.col(ma - 1);
  na = (na - na.dot(ta) * ta).normalized();

  const double th = angle_deg * std::numbers::pi / 180.0;
  const Vec3 d = (std::cos(th) * (-ta) + std::sin(th) * na).normalized();
  const Mat3 r = minimal_rotation(tb, d, na);

  Points out(3, ma + mb - 1);
  out.leftCols(ma) = a.points();
  const Vec3 origin = b.points().col(0);
  const Vec3 join = a.points().col(ma - 1);
  for (Eigen::Index j = 1; j < mb; ++j) out.col(ma - 1 + j) = join + r * (b.points().col(j) - origin);

  std::optional<SseLabels> labels;
  if (a.labeled() && b.labeled()) labels = SseLabels(a.labels()->str() + b.labels()->str().substr(1));
  return Curve(std::move(out), std::move(labels), a.id());
}

Curve edit_sse(const Curve& curve, std::size_t begin, std::size_t end, char label) {
  if (begin > end || end > curve.size())
    throw IndexError("SSE edit range [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside curve of " +
                     std::to_string(curve.size()) + " points");
  if (!is_sse_label(label)) throw DataError(std::string("label '") + label + "' is not one of H, E, L");
  std::string s = curve.labeled() ? curve.labels()->str() : std::string(curve.size(), 'L');
  for (std::size_t i = begin; i < end; ++i) s[i] = label;
  return curve.with_labels(SseLabels(std::move(s)));
}

Curve lift_2d_to_3d(const Eigen::Matrix2Xd& points, const LiftSpec& spec) {
  if (points.cols() < 2) throw PreconditionError("lifting needs at least 2 points");
  if (!(spec.depth_amplitude >= 0.0) || !(spec.noise_amplitude >= 0.0))
    throw ConfigError("lift amplitudes must be non-negative");
  if (!(spec.period >= 4.0)) throw ConfigError("lift period must be at least 4 points");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const Eigen::Index n = points.cols();
  const Eigen::Index knots = (n - 1) / 2 + 2;
  std::vector<double> value(static_cast<std::size_t>(knots));
  for (double& v : value) v = 2.0 * unit(rng) - 1.0;

  Points p(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i / 2);
    const double f = static_cast<double>(i % 2) / 2.0;
    const double w = (1.0 - std::cos(std::numbers::pi * f)) / 2.0;
    const double noise = (1.0 - w) * value[k] + w * value[k + 1];
    p(0, i) = points(0, i);
    p(1, i) = points(1, i);
    p(2, i) = spec.depth_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / spec.period + phase) +
              spec.noise_amplitude * noise;
  }
  return Curve(std::move(p));
}

Curve perturb_sphere(const Curve& curve, double radius, std::uint64_t seed) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ConfigError("perturbation radius must be non-negative");
  if (radius == 0.0) return curve;
  const FrameField f = parallel_transport_frames(curve.points());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Points p = curve.points();
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    Vec3 dir;
    do {
      dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (dir.norm() < 1e-12);
    dir.normalize();
    const double r = radius * std::cbrt(unit(rng));
    p.col(i) += r * (dir(0) * f.tangent.col(i) + dir(1) * f.normal.col(i) + dir(2) * f.binormal.col(i));
  }
  return curve.with_points(std::move(p));
}

std::vector<std::size_t> find_hotspots(const Curve& curve, const Backbone& target, double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw ConfigError("hotspot cutoff must be positive");
  const double c2 = cutoff * cutoff;
  std::vector<std::size_t> out;
  for (Eigen::Index r = 0; r < target.ca().cols(); ++r) {
    const Vec3 x = target.ca().col(r);
    if ((curve.points().colwise() - x).colwise().squaredNorm().minCoeff() <= c2) out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

}  // namespace curvefold
