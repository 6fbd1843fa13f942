// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/spline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/apportion.hpp"

namespace curvefold {
namespace {

constexpr double kSingularSpeedCubed = 1e-12;

// Second derivatives M_i at the knots for a not-a-knot cubic spline, one
// column per coordinate.
Eigen::MatrixXd not_a_knot_moments(const std::vector<double>& t, const Points& p) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
  std::vector<double> h(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    a(i, i - 1) = h[i - 1];
    a(i, i) = 2.0 * (h[i - 1] + h[i]);
    a(i, i + 1) = h[i];
    const Vec3 s1 = (p.col(i + 1) - p.col(i)) / h[i];
    const Vec3 s0 = (p.col(i) - p.col(i - 1)) / h[i - 1];
    rhs.row(i) = 6.0 * (s1 - s0).transpose();
  }
  // Third derivative continuous across the first and last interior knots.
  a(0, 0) = h[1];
  a(0, 1) = -(h[0] + h[1]);
  a(0, 2) = h[0];
  a(n - 1, n - 3) = h[n - 2];
  a(n - 1, n - 2) = -(h[n - 3] + h[n - 2]);
  a(n - 1, n - 1) = h[n - 3];
  return a.partialPivLu().solve(rhs);
}

// Derivatives at `x` of the parabola through (t0,p0), (t1,p1), (t2,p2).
void lagrange3(double t0, double t1, double t2, const Vec3& p0, const Vec3& p1, const Vec3& p2,
               double x, Vec3& d1, Vec3& d2) {
  const double w0 = (t0 - t1) * (t0 - t2);
  const double w1 = (t1 - t0) * (t1 - t2);
  const double w2 = (t2 - t0) * (t2 - t1);
  d1 = p0 * ((2 * x - t1 - t2) / w0) + p1 * ((2 * x - t0 - t2) / w1) +
       p2 * ((2 * x - t0 - t1) / w2);
  d2 = 2.0 * (p0 / w0 + p1 / w1 + p2 / w2);
}

void finite_difference_derivatives(const Points& p, const std::vector<double>& t, Points& d1,
                                   Points& d2) {
  const auto n = p.cols();
  d1.resize(3, n);
  d2.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = std::clamp<Eigen::Index>(i, 1, n - 2);
    Vec3 a, b;
    lagrange3(t[c - 1], t[c], t[c + 1], p.col(c - 1), p.col(c), p.col(c + 1), t[i], a, b);
    d1.col(i) = a;
    d2.col(i) = b;
  }
}

std::vector<double> chord_knots(const Points& p) {
  const auto m = static_cast<std::size_t>(p.cols());
  std::vector<double> knots(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    knots[i] = knots[i - 1] + (p.col(static_cast<Eigen::Index>(i)) -
                               p.col(static_cast<Eigen::Index>(i - 1)))
                                  .norm();
  }
  return knots;
}

SplineSample sample_spans(const Points& p, const std::vector<double>& knots,
                          const std::vector<std::size_t>& extra) {
  const auto m = static_cast<std::size_t>(p.cols());
  std::size_t n_out = m;
  for (std::size_t e : extra) n_out += e;
  std::vector<double> spans(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) spans[i] = knots[i + 1] - knots[i];

  SplineSample out;
  out.linear_fallback = m < 4;
  out.points.resize(3, static_cast<Eigen::Index>(n_out));
  out.d1.resize(3, static_cast<Eigen::Index>(n_out));
  out.d2.resize(3, static_cast<Eigen::Index>(n_out));
  out.t.reserve(n_out);
  out.knot_index.reserve(m);

  Eigen::MatrixXd moments;
  if (!out.linear_fallback) moments = not_a_knot_moments(knots, p);

  Eigen::Index col = 0;
  auto emit = [&](std::size_t span, double x) {
    const auto i = static_cast<Eigen::Index>(span);
    const double h = spans[span];
    const Vec3 p0 = p.col(i);
    const Vec3 p1 = p.col(i + 1);
    const double a = (knots[span + 1] - x) / h;
    const double b = (x - knots[span]) / h;
    if (out.linear_fallback) {
      out.points.col(col) = a * p0 + b * p1;
    } else {
      const Vec3 m0 = moments.row(i).transpose();
      const Vec3 m1 = moments.row(i + 1).transpose();
      out.points.col(col) = a * p0 + b * p1 +
                            ((a * a * a - a) * m0 + (b * b * b - b) * m1) * (h * h / 6.0);
      out.d1.col(col) = (p1 - p0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) *
                                            (h / 6.0);
      out.d2.col(col) = a * m0 + b * m1;
    }
    out.t.push_back(x);
    ++col;
  };

  for (std::size_t span = 0; span + 1 < m; ++span) {
    out.knot_index.push_back(static_cast<std::size_t>(col));
    emit(span, knots[span]);
    out.points.col(col - 1) = p.col(static_cast<Eigen::Index>(span));
    const std::size_t k = extra[span];
    for (std::size_t j = 1; j <= k; ++j) {
      emit(span, knots[span] + spans[span] * static_cast<double>(j) / static_cast<double>(k + 1));
    }
  }
  out.knot_index.push_back(static_cast<std::size_t>(col));
  emit(m - 2, knots[m - 1]);
  out.points.col(col - 1) = p.col(static_cast<Eigen::Index>(m - 1));

  if (out.linear_fallback) {
    if (n_out >= 3) {
      finite_difference_derivatives(out.points, out.t, out.d1, out.d2);
    } else {
      const Vec3 d = (p.col(1) - p.col(0)) / spans[0];
      out.d1.col(0) = d;
      out.d1.col(1) = d;
      out.d2.setZero();
    }
  }
  return out;
}

}  // namespace

SplineSample spline_interpolate(const Points& p, double factor) {
  const auto m = static_cast<std::size_t>(p.cols());
  if (m < 2) throw InvalidCurve("interpolation needs at least 2 points");
  if (!(factor >= 1.0)) throw PreconditionError("interpolation factor must be >= 1");
  const auto n_out = std::max<std::size_t>(
      m, static_cast<std::size_t>(std::llround(factor * static_cast<double>(m))));
  const auto knots = chord_knots(p);
  std::vector<double> spans(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) spans[i] = knots[i + 1] - knots[i];
  return sample_spans(p, knots, apportion(n_out - m, spans));
}

SplineSample spline_subdivide(const Points& p, std::size_t per_span) {
  const auto m = static_cast<std::size_t>(p.cols());
  if (m < 2) throw InvalidCurve("interpolation needs at least 2 points");
  if (per_span < 1) throw PreconditionError("subdivision count must be >= 1");
  return sample_spans(p, chord_knots(p), std::vector<std::size_t>(m - 1, per_span - 1));
}

namespace {

CurvatureResult curvature_from(const Points& d1, const Points& d2) {
  CurvatureResult r;
  r.kappa.resize(static_cast<std::size_t>(d1.cols()));
  for (Eigen::Index i = 0; i < d1.cols(); ++i) {
    const Vec3 a = d1.col(i);
    const Vec3 b = d2.col(i);
    const double speed = a.norm();
    const double denom = speed * speed * speed;
    if (denom < kSingularSpeedCubed) {
      r.kappa[i] = 0.0;
      r.singular.push_back(static_cast<std::size_t>(i));
    } else {
      r.kappa[i] = a.cross(b).norm() / denom;
    }
  }
  return r;
}

}  // namespace

CurvatureResult curvature(const SplineSample& s) { return curvature_from(s.d1, s.d2); }

CurvatureResult curvature(const Points& p, const std::vector<double>& t) {
  if (p.cols() < 3) throw PreconditionError("curvature needs at least 3 points");
  if (static_cast<std::size_t>(p.cols()) != t.size())
    throw DimensionError("parameter count does not match point count");
  Points d1, d2;
  finite_difference_derivatives(p, t, d1, d2);
  return curvature_from(d1, d2);
}

}  // namespace curvefold
