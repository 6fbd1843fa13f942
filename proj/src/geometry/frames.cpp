// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/frames.hpp"

#include <algorithm>
#include <cmath>

#include "curvefold/errors.hpp"

namespace curvefold {
namespace {

constexpr double kTiny = 1e-12;

Vec3 chord_tangent(const Points& p, Eigen::Index i) {
  const Eigen::Index n = p.cols();
  const Eigen::Index lo = i == 0 ? 0 : i - 1;
  const Eigen::Index hi = i == n - 1 ? n - 1 : i + 1;
  Vec3 d = p.col(hi) - p.col(lo);
  if (d.norm() < kTiny) {
    // Central chord may cancel on a hairpin; use the forward segment.
    d = p.col(std::min(i + 1, n - 1)) - p.col(std::max<Eigen::Index>(i - 1, 0));
  }
  return d.norm() < kTiny ? Vec3(Vec3::UnitX()) : Vec3(d.normalized());
}

Vec3 any_perpendicular(const Vec3& t) {
  const Vec3 a = t.cwiseAbs();
  Vec3 e = Vec3::UnitX();
  if (a.y() <= a.x() && a.y() <= a.z()) e = Vec3::UnitY();
  else if (a.z() <= a.x() && a.z() <= a.y()) e = Vec3::UnitZ();
  return (e - e.dot(t) * t).normalized();
}

Vec3 intrinsic_initial_normal(const Points& p, const Vec3& t0) {
  // Offset of the vertex farthest from the start tangent line. Taking the
  // maximum (rather than the first vertex past a threshold) keeps the choice
  // stable under rotation of nearly straight inputs.
  double scale = 0.0;
  double best = 0.0;
  Vec3 best_perp = Vec3::Zero();
  for (Eigen::Index k = 1; k < p.cols(); ++k) {
    const Vec3 d = p.col(k) - p.col(0);
    scale = std::max(scale, d.norm());
    const Vec3 perp = d - d.dot(t0) * t0;
    if (perp.norm() > best) {
      best = perp.norm();
      best_perp = perp;
    }
  }
  if (best > 1e-6 * std::max(scale, 1.0)) return best_perp.normalized();
  return any_perpendicular(t0);
}

}  // namespace

FrameField parallel_transport_frames(const Points& p, const std::optional<Vec3>& initial_normal) {
  const Eigen::Index n = p.cols();
  if (n < 2) throw InvalidCurve("frames need at least 2 points");
  FrameField f{Points(3, n), Points(3, n), Points(3, n)};
  for (Eigen::Index i = 0; i < n; ++i) f.tangent.col(i) = chord_tangent(p, i);

  const Vec3 t0 = f.tangent.col(0);
  Vec3 r = initial_normal ? Vec3(*initial_normal) : intrinsic_initial_normal(p, t0);
  r = r - r.dot(t0) * t0;
  r = r.norm() < kTiny ? any_perpendicular(t0) : Vec3(r.normalized());
  f.normal.col(0) = r;

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Vec3 ti = f.tangent.col(i);
    const Vec3 tn = f.tangent.col(i + 1);
    Vec3 ri = f.normal.col(i);
    const Vec3 v1 = p.col(i + 1) - p.col(i);
    const double c1 = v1.dot(v1);
    if (c1 < kTiny) {
      Vec3 rn = ri - ri.dot(tn) * tn;
      f.normal.col(i + 1) = rn.norm() < kTiny ? any_perpendicular(tn) : Vec3(rn.normalized());
      continue;
    }
    const Vec3 r_l = ri - (2.0 / c1) * v1.dot(ri) * v1;
    const Vec3 t_l = ti - (2.0 / c1) * v1.dot(ti) * v1;
    const Vec3 v2 = tn - t_l;
    const double c2 = v2.dot(v2);
    // No threshold on c2: skipping small corrections accumulates drift that
    // depends on orientation.
    Vec3 rn = c2 == 0.0 ? r_l : Vec3(r_l - (2.0 / c2) * v2.dot(r_l) * v2);
    rn = rn - rn.dot(tn) * tn;
    f.normal.col(i + 1) = rn.norm() < kTiny ? any_perpendicular(tn) : Vec3(rn.normalized());
  }
  for (Eigen::Index i = 0; i < n; ++i)
    f.binormal.col(i) = Vec3(f.tangent.col(i)).cross(Vec3(f.normal.col(i)));
  return f;
}

Points frenet_normals(const Points& p) {
  const Eigen::Index n = p.cols();
  if (n < 3) throw PreconditionError("Frenet normals need at least 3 points");
  Points out(3, n);
  Vec3 prev = Vec3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = std::clamp<Eigen::Index>(i, 1, n - 2);
    const Vec3 a = p.col(c) - p.col(c - 1);
    const Vec3 b = p.col(c + 1) - p.col(c);
    const Vec3 t = (a.normalized() + b.normalized()).normalized();
    Vec3 k = b.normalized() - a.normalized();
    k -= k.dot(t) * t;
    if (k.norm() < 1e-12) {
      out.col(i) = prev.norm() > 0 ? prev : any_perpendicular(t);
    } else {
      out.col(i) = k.normalized();
    }
    prev = out.col(i);
  }
  return out;
}

double total_normal_twist(const Points& normals) {
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < normals.cols(); ++i) {
    const double c = std::clamp(normals.col(i).dot(normals.col(i + 1)), -1.0, 1.0);
    total += std::acos(c);
  }
  return total;
}

}  // namespace curvefold
