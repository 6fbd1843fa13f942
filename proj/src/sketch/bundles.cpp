// SPDX-License-Identifier: Apache-2.0
#include "curvefold/sketch/bundles.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "curvefold/sketch/sketcher.hpp"

namespace curvefold {
namespace {

using std::numbers::pi;

struct Builder {
  std::vector<Vec3> pts;
  std::string labels;
  double step;

  // Appends samples of `f` on (0, 1] (the start point is assumed present).
  template <typename F>
  void piece(F f, double length, char label) {
    const int n = std::max(1, static_cast<int>(std::lround(length / step)));
    for (int k = 1; k <= n; ++k) {
      pts.push_back(f(static_cast<double>(k) / n));
      labels.push_back(label);
    }
  }

  void line_to(const Vec3& b, char label) {
    const Vec3 a = pts.back();
    piece([&](double u) { return Vec3(a + u * (b - a)); }, (b - a).norm(), label);
  }

  void bezier_to(const Vec3& c1, const Vec3& c2, const Vec3& b, char label) {
    const Vec3 a = pts.back();
    auto f = [&](double u) {
      const double v = 1.0 - u;
      return Vec3(v * v * v * a + 3 * v * v * u * c1 + 3 * v * u * u * c2 + u * u * u * b);
    };
    double len = 0.0;
    Vec3 prev = a;
    for (int k = 1; k <= 64; ++k) {
      const Vec3 q = f(k / 64.0);
      len += (q - prev).norm();
      prev = q;
    }
    piece(f, len, label);
  }
};

Mat3 tilt(std::mt19937_64& rng, double max_deg) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 axis = Vec3(u(rng), u(rng), 0.0).normalized();
  const double ang = max_deg * pi / 180.0 * u(rng);
  return Eigen::AngleAxisd(ang, axis).toRotationMatrix();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 over a combination of both inputs
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Curve random_bundle_curve(std::mt19937_64& rng, const BundleParams& p, std::string id) {
  std::uniform_int_distribution<int> nh(p.min_helices, p.max_helices);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * u01(rng); };

  const int k = nh(rng);
  const double ring = k == 2 ? 0.5 * p.axis_spacing : p.axis_spacing / (2.0 * std::sin(pi / k));
  const double phase0 = uniform(0.0, 2.0 * pi);

  std::vector<Vec3> starts, ends;
  for (int i = 0; i < k; ++i) {
    const double ang = phase0 + 2.0 * pi * i / k;
    const Vec3 centre(ring * std::cos(ang), ring * std::sin(ang), uniform(-1.5, 1.5));
    const Vec3 dir = tilt(rng, p.max_tilt_deg) * Vec3(0, 0, i % 2 == 0 ? 1.0 : -1.0);
    const double len = uniform(p.min_helix_length, p.max_helix_length);
    starts.push_back(centre - 0.5 * len * dir);
    ends.push_back(centre + 0.5 * len * dir);
  }

  Builder b{{}, {}, p.point_spacing};
  const Vec3 d0 = (ends[0] - starts[0]).normalized();
  const double tail0 = uniform(2.0, p.tail_max);
  b.pts.push_back(starts[0] - tail0 * d0 + Vec3(0.3 * tail0, 0.0, 0.0));
  b.labels.push_back('L');
  b.line_to(starts[0], 'L');
  for (int i = 0; i < k; ++i) {
    b.line_to(ends[static_cast<std::size_t>(i)], 'H');
    if (i + 1 == k) break;
    const Vec3 di = (ends[i] - starts[i]).normalized();
    const Vec3 dn = (ends[i + 1] - starts[i + 1]).normalized();
    const double lift = uniform(p.loop_lift_min, p.loop_lift_max);
    b.bezier_to(ends[i] + lift * di, starts[i + 1] - lift * dn, starts[i + 1], 'L');
  }

  const Vec3 dl = (ends.back() - starts.back()).normalized();
  if (u01(rng) < p.hairpin_probability) {
    // Loop away from the bundle, then two antiparallel strands joined by a
    // tight turn. Strands run across the bundle axis and are stacked along it.
    const Vec3 centre_last = 0.5 * (starts.back() + ends.back());
    Vec3 out = centre_last;
    out.z() = 0.0;
    out = out.norm() > 1e-6 ? Vec3(out.normalized()) : Vec3::UnitX();
    const Vec3 side = Vec3::UnitZ().cross(out).normalized();
    const double slen = uniform(p.strand_min_length, p.strand_max_length);
    const Vec3 s0 = ends.back() + 4.0 * dl + 6.0 * out;
    b.bezier_to(ends.back() + 3.0 * dl, s0 - 3.0 * side, s0, 'L');
    const Vec3 s1 = s0 + slen * side;
    b.line_to(s1, 'E');
    const Vec3 turn_dir = dl;  // strands stacked along the bundle axis
    const Vec3 s2 = s1 + 4.8 * turn_dir;
    b.bezier_to(s1 + 2.5 * side, s2 + 2.5 * side, s2, 'L');
    b.line_to(s2 - slen * side, 'E');
    const Vec3 last = b.pts.back();
    b.line_to(last - uniform(2.0, p.tail_max) * side, 'L');
  } else {
    const double tail1 = uniform(2.0, p.tail_max);
    b.line_to(ends.back() + tail1 * dl + Vec3(0.0, 0.3 * tail1, 0.0), 'L');
  }

  Points pts(3, static_cast<Eigen::Index>(b.pts.size()));
  for (std::size_t i = 0; i < b.pts.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = b.pts[i];
  return Curve(std::move(pts), SseLabels(std::move(b.labels)), std::move(id));
}

Backbone bundle_backbone(const Curve& curve) { return sketch_from_curve(curve).to_backbone(); }

}  // namespace curvefold
