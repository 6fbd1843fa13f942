// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "curvefold/errors.hpp"
#include "curvefold/geometry/curve.hpp"
#include "curvefold/geometry/fitness.hpp"
#include "curvefold/geometry/frames.hpp"
#include "curvefold/geometry/mds.hpp"
#include "curvefold/geometry/spline.hpp"
#include "curvefold/geometry/superpose.hpp"
#include "curvefold/io/json_io.hpp"

using namespace curvefold;
using std::numbers::pi;

namespace {

Points line_points(int n, double step, Vec3 dir = Vec3::UnitX()) {
  Points p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = dir.normalized() * step * i;
  return p;
}

Points circle_arc(int n, double r, double a0, double a1) {
  Points p(3, n);
  for (int i = 0; i < n; ++i) {
    const double a = a0 + (a1 - a0) * i / (n - 1);
    p.col(i) = Vec3(r * std::cos(a), r * std::sin(a), 0.0);
  }
  return p;
}

Points helix_points(int n, double a, double b, double dtheta) {
  Points p(3, n);
  for (int i = 0; i < n; ++i) {
    const double th = dtheta * i;
    p.col(i) = Vec3(a * std::cos(th), a * std::sin(th), b * th);
  }
  return p;
}

}  // namespace

TEST_CASE("curve construction validates invariants") {
  CHECK_THROWS_AS(Curve(Points(3, 1)), InvalidCurve);
  Points dup(3, 3);
  dup << 0, 0, 1, 0, 0, 0, 0, 0, 0;
  CHECK_THROWS_AS(Curve{dup}, InvalidCurve);
  CHECK_THROWS_AS(Curve(line_points(3, 1.0), SseLabels("HH")), InvalidCurve);
  CHECK_THROWS_AS(SseLabels("HXL"), DataError);
  Points bad = line_points(3, 1.0);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(Curve{bad}, InvalidCurve);
}

TEST_CASE("sse label segments") {
  SseLabels l("HHHLLEEEH");
  const auto s = l.segments();
  REQUIRE(s.size() == 4);
  CHECK(s[0].label == 'H');
  CHECK(s[0].length == 3);
  CHECK(s[2].begin == 5);
  CHECK(s[3].end() == 9);
}

TEST_CASE("resample straight segment") {
  Points p(3, 2);
  p << 0, 9, 0, 0, 0, 0;
  const Curve r = resample_curve(Curve(p), 4);
  REQUIRE(r.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(r.points()(0, i) == doctest::Approx(3.0 * i).epsilon(1e-12));
}

TEST_CASE("resample is idempotent on uniform spacing") {
  const Points p = circle_arc(17, 5.0, 0.0, 2.0);
  const Curve r = resample_curve(Curve(p), 17);
  CHECK((r.points() - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("resample quarter circle matches dense arc-length oracle") {
  const Points dense = circle_arc(10001, 10.0, 0.0, pi / 2);
  const Curve r = resample_curve(Curve(dense), 3);
  const Vec3 expect(10.0 * std::cos(pi / 4), 10.0 * std::sin(pi / 4), 0.0);
  CHECK((r.points().col(1) - expect).norm() < 0.05);
  const auto o = oracle::resample(dense, 3);
  CHECK((r.points() - o).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("resample carries labels and throws for n < 2") {
  Points p = line_points(5, 1.0);
  const Curve c(p, SseLabels("HHLLE"));
  CHECK(resample_curve(c, 5).labels()->str() == "HHLLE");
  CHECK_THROWS_AS(resample_curve(c, 1), InvalidCurve);
}

TEST_CASE("resample preserves arc length within 0.5 percent for n >= input") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Points p = oracle::random_smooth_curve(rng, 160);
    const double len = total_length(p);
    for (int n : {160, 240, 480}) {
      const Curve r = resample_curve(Curve(p), static_cast<std::size_t>(n));
      CHECK(std::abs(total_length(r.points()) - len) / len < 0.005);
    }
  }
}

TEST_CASE("spline preserves lines and honours the factor contract") {
  const Points p = line_points(6, 2.0, Vec3(1, 2, -1));
  const auto s = spline_interpolate(p, 4.0);
  CHECK(s.points.cols() == 24);
  CHECK_FALSE(s.linear_fallback);
  const Vec3 dir = Vec3(1, 2, -1).normalized();
  for (Eigen::Index i = 0; i < s.points.cols(); ++i) {
    const Vec3 q = s.points.col(i);
    CHECK((q - dir * dir.dot(q)).norm() < 1e-9);
  }
  CHECK(spline_interpolate(p, 1.0).points.cols() == 6);
  CHECK_THROWS_AS(spline_interpolate(p, 0.5), PreconditionError);
}

TEST_CASE("spline passes through knots with increasing parameters") {
  std::mt19937_64 rng(3);
  const Points p = oracle::random_smooth_curve(rng, 12);
  const auto s = spline_interpolate(p, 3.7);
  CHECK(s.points.cols() == std::lround(3.7 * 12));
  for (std::size_t k = 0; k < s.knot_index.size(); ++k)
    CHECK((s.points.col(static_cast<Eigen::Index>(s.knot_index[k])) - p.col(static_cast<Eigen::Index>(k))).norm() < 1e-6);
  for (std::size_t i = 1; i < s.t.size(); ++i) CHECK(s.t[i] > s.t[i - 1]);
}

TEST_CASE("spline on circle stays within 1 percent of the radius") {
  const double r = 7.0;
  const Points p = circle_arc(12, r, 0.0, 1.8 * pi);
  const auto s = spline_interpolate(p, 10.0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.points.cols(); ++i)
    worst = std::max(worst, std::abs(s.points.col(i).head<2>().norm() - r));
  CHECK(worst < 0.01 * r);
}

TEST_CASE("spline with fewer than 4 points falls back to linear") {
  const auto s = spline_interpolate(line_points(3, 1.0), 2.0);
  CHECK(s.linear_fallback);
  CHECK(s.points.cols() == 6);
}

TEST_CASE("curvature of line, circle and helix") {
  const auto line = spline_interpolate(line_points(10, 1.5, Vec3(1, 1, 0)), 3.0);
  const auto kl = curvature(line);
  for (std::size_t i = 1; i + 1 < kl.kappa.size(); ++i) CHECK(kl.kappa[i] < 1e-8);

  const auto circ = spline_interpolate(circle_arc(40, 5.0, 0.0, 1.5 * pi), 3.0);
  const auto kc = curvature(circ);
  for (std::size_t i = 6; i + 6 < kc.kappa.size(); ++i) CHECK(std::abs(kc.kappa[i] - 0.2) < 1e-3);

  const double a = 2.3, b = 0.859;
  const double expect = a / (a * a + b * b);
  const auto hel = spline_interpolate(helix_points(150, a, b, 0.1), 3.0);
  const auto kh = curvature(hel);
  for (std::size_t i = 10; i + 10 < kh.kappa.size(); ++i) CHECK(std::abs(kh.kappa[i] - expect) < 1e-3);
}

TEST_CASE("finite-difference curvature on analytic samples") {
  const double a = 2.3, b = 0.859;
  const int n = 400;
  Points p(3, n);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = 0.02 * i;
    p.col(i) = Vec3(a * std::cos(t[i]), a * std::sin(t[i]), b * t[i]);
  }
  const auto k = curvature(p, t);
  for (int i = 1; i + 1 < n; ++i) CHECK(std::abs(k.kappa[static_cast<std::size_t>(i)] - a / (a * a + b * b)) < 1e-3);
  CHECK_THROWS_AS(curvature(line_points(2, 1.0), std::vector<double>{0, 1}), PreconditionError);
}

TEST_CASE("curvature is flagged and zero where the derivative vanishes") {
  Points p(3, 5);
  p << 0, 1, 1, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  const auto k = curvature(p, {0, 1, 2, 3, 4});
  CHECK_FALSE(k.singular.empty());
  for (double v : k.kappa) CHECK(std::isfinite(v));
}

TEST_CASE("curvature scales as 1/s under uniform scaling") {
  std::mt19937_64 rng(5);
  const Points p = oracle::random_smooth_curve(rng, 25);
  const auto k1 = curvature(spline_interpolate(p, 3.0));
  const auto k2 = curvature(spline_interpolate(2.5 * p, 3.0));
  for (std::size_t i = 0; i < k1.kappa.size(); ++i) CHECK(std::abs(k2.kappa[i] - k1.kappa[i] / 2.5) < 1e-3);
}

TEST_CASE("frames are right-handed orthonormal and aligned with chords") {
  std::mt19937_64 rng(8);
  const Points p = spline_interpolate(oracle::random_smooth_curve(rng, 20), 4.0).points;
  const auto f = parallel_transport_frames(p);
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const Vec3 t = f.tangent.col(i), n = f.normal.col(i), b = f.binormal.col(i);
    CHECK(std::abs(t.norm() - 1) < 1e-9);
    CHECK(std::abs(n.norm() - 1) < 1e-9);
    CHECK(std::abs(t.dot(n)) < 1e-9);
    CHECK((t.cross(n) - b).norm() < 1e-9);
    const Eigen::Index j = std::min<Eigen::Index>(i + 1, p.cols() - 1);
    const Eigen::Index h = j == i ? i - 1 : i;
    CHECK(t.dot(p.col(j) - p.col(h)) > 0);
  }
}

TEST_CASE("frames on a straight line are constant") {
  const auto f = parallel_transport_frames(line_points(12, 1.0, Vec3(0.3, -1, 2)));
  for (Eigen::Index i = 1; i < 12; ++i) {
    CHECK((f.normal.col(i) - f.normal.col(0)).norm() < 1e-12);
    CHECK((f.tangent.col(i) - f.tangent.col(0)).norm() < 1e-12);
  }
}

TEST_CASE("planar arc keeps the binormal on the plane normal") {
  const auto f = parallel_transport_frames(circle_arc(50, 4.0, 0.0, 3.0));
  for (Eigen::Index i = 0; i < 50; ++i) CHECK(std::abs(std::abs(f.binormal(2, i)) - 1.0) < 1e-6);
}

TEST_CASE("transported normals twist no more than Frenet normals") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Points p = spline_interpolate(oracle::random_smooth_curve(rng, 15), 5.0).points;
    const auto f = parallel_transport_frames(p);
    CHECK(total_normal_twist(f.normal) <= total_normal_twist(frenet_normals(p)) + 1e-9);
  }
}

TEST_CASE("frames are equivariant under rigid motion") {
  std::mt19937_64 rng(2);
  const Points p = oracle::random_smooth_curve(rng, 30);
  const Mat3 r = oracle::random_rotation(rng);
  const auto f0 = parallel_transport_frames(p);
  const auto f1 = parallel_transport_frames((r * p).colwise() + Vec3(1, 2, 3));
  CHECK((r * f0.normal - f1.normal).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("kabsch identity and exact recovery") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 5.0);
  Points a(3, 12);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  const auto s0 = kabsch_superpose(a, a);
  CHECK((s0.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK(s0.translation.norm() < 1e-9);
  CHECK(s0.scale == 1.0);
  CHECK(s0.residual < 1e-9);

  const Mat3 r = oracle::random_rotation(rng);
  const Vec3 t(3, -2, 7);
  const auto s1 = kabsch_superpose(a, (r * a).colwise() + t);
  CHECK((s1.rotation - r).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((s1.translation - t).norm() < 1e-6);
  CHECK(s1.residual < 1e-6);
  CHECK(std::abs(s1.rotation.determinant() - 1.0) < 1e-9);
}

TEST_CASE("kabsch residual matches Horn quaternion oracle") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Points a(3, 10), b(3, 10);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = g(rng);
      b.data()[i] = g(rng);
    }
    const auto s = kabsch_superpose(a, b);
    CHECK(std::abs(s.residual - oracle::horn_rmsd(a, b)) < 1e-8);
    CHECK(std::abs(s.rotation.determinant() - 1.0) < 1e-9);
    CHECK((s.rotation * s.rotation.transpose() - Mat3::Identity()).norm() < 1e-9);
    const auto ss = kabsch_superpose(a, b, true);
    CHECK(ss.residual <= s.residual + 1e-12);
    CHECK(ss.scale > 0.0);
  }
}

TEST_CASE("kabsch rejects mismatched and coincident sets") {
  CHECK_THROWS_AS(kabsch_superpose(Points::Zero(3, 4), Points::Zero(3, 5)), DimensionError);
  CHECK_THROWS_AS(kabsch_superpose(Points::Ones(3, 4), Points::Random(3, 4)), DegenerateShape);
  // collinear input is still handled
  const Points l = line_points(5, 1.0);
  CHECK(kabsch_superpose(l, l).residual < 1e-9);
}

TEST_CASE("kabsch excludes reflections") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 3.0);
  Points a(3, 9);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Points mirror = a;
  mirror.row(2) *= -1.0;
  const auto s = kabsch_superpose(a, mirror);
  CHECK(std::abs(s.rotation.determinant() - 1.0) < 1e-9);
  CHECK(s.residual > 1e-3);
  CHECK(std::abs(s.residual - oracle::horn_rmsd(a, mirror)) < 1e-8);
}

TEST_CASE("topology fitness self, similarity and symmetry") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 30; ++trial) {
    const Curve c(oracle::random_smooth_curve(rng, 20 + trial));
    CHECK(std::abs(topology_fitness(c, c) - 1.0) < 1e-9);
    const Mat3 r = oracle::random_rotation(rng);
    const Curve g(((2.5 * r) * c.points()).colwise() + Vec3(u(rng), u(rng), u(rng)));
    CHECK(std::abs(topology_fitness(c, g) - 1.0) < 1e-6);
    const Curve d(oracle::random_smooth_curve(rng, 40));
    CHECK(std::abs(topology_fitness(c, d) - topology_fitness(d, c)) < 1e-9);
    CHECK(topology_fitness(c, d) <= 1.0 + 1e-12);
  }
}

TEST_CASE("topology fitness agrees with an independent Procrustes oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Points a = oracle::random_smooth_curve(rng, 25);
    const Points b = oracle::random_smooth_curve(rng, 37);
    const int n = std::max({25, 37, 32});
    const double expect = oracle::procrustes_tf(oracle::resample(a, n), oracle::resample(b, n));
    CHECK(std::abs(topology_fitness(Curve(a), Curve(b)) - expect) < 1e-8);
  }
  CHECK(fitness_point_count(5, 7) == 32);
  CHECK(fitness_point_count(50, 7) == 50);
}

TEST_CASE("procrustes fitness rejects coincident point sets") {
  CHECK_THROWS_AS(procrustes_fitness(Points::Ones(3, 4), line_points(4, 1.0)), DegenerateShape);
  CHECK_THROWS_AS(procrustes_fitness(line_points(4, 1.0), Points::Zero(3, 4)), DegenerateShape);
}

TEST_CASE("topology fitness runs under 10 ms at 64 points") {
  std::mt19937_64 rng(6);
  const Curve a(oracle::random_smooth_curve(rng, 64));
  const Curve b(oracle::random_smooth_curve(rng, 64));
  const auto t0 = std::chrono::steady_clock::now();
  double acc = 0.0;
  for (int i = 0; i < 100; ++i) acc += topology_fitness(a, b);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / 100;
  CHECK(std::isfinite(acc));
  CHECK(ms < 10.0);
}

TEST_CASE("tm-score basics") {
  CHECK(tm_d0(100) == doctest::Approx(1.24 * std::cbrt(85.0) - 1.8).epsilon(1e-12));
  CHECK(std::abs(tm_d0(100) - 3.652) < 1e-3);
  std::mt19937_64 rng(31);
  const Points a = oracle::random_smooth_curve(rng, 60, 15.0);
  CHECK(std::abs(tm_score_sequential(a, a) - 1.0) < 1e-9);
  CHECK_THROWS_AS(tm_score_sequential(a.leftCols(15), a.leftCols(15)), LengthTooShort);
  CHECK_THROWS_AS(tm_score_sequential(a.leftCols(20), a.leftCols(21)), DimensionError);
}

TEST_CASE("tm-score is rigid invariant and low for unrelated random chains") {
  std::mt19937_64 rng(77);
  auto random_chain = [&](int n) {
    std::normal_distribution<double> g;
    Points p(3, n);
    p.col(0).setZero();
    for (int i = 1; i < n; ++i) {
      Vec3 step(g(rng), g(rng), g(rng));
      p.col(i) = p.col(i - 1) + 3.8 * step.normalized();
    }
    return p;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Points a = random_chain(100), b = random_chain(100);
    const double tm = tm_score_sequential(a, b);
    worst = std::max(worst, tm);
    const Mat3 r = oracle::random_rotation(rng);
    CHECK(std::abs(tm_score_sequential((r * a).colwise() + Vec3(5, -3, 8), b) - tm) < 1e-9);
    CHECK(std::abs(tm_score_sequential(a, (r * b).colwise() + Vec3(-1, 4, 2)) - tm) < 1e-9);
  }
  CHECK(worst < 0.3);
}

TEST_CASE("mds equilateral triangle and planar recovery") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  const auto y = mds_embed(d);
  const double s01 = (y.row(0) - y.row(1)).norm(), s02 = (y.row(0) - y.row(2)).norm(), s12 = (y.row(1) - y.row(2)).norm();
  CHECK(std::abs(s01 - 1) < 1e-6);
  CHECK(std::abs(s02 - 1) < 1e-6);
  CHECK(std::abs(s12 - 1) < 1e-6);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  Eigen::MatrixX2d pts(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) pts.row(i) << u(rng), u(rng);
  Eigen::MatrixXd dp(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) dp(i, j) = (pts.row(i) - pts.row(j)).norm();
  const auto e = mds_embed(dp);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) CHECK(std::abs((e.row(i) - e.row(j)).norm() - dp(i, j)) < 1e-6);
}

TEST_CASE("mds matches power-iteration oracle on a fitness-derived matrix") {
  std::mt19937_64 rng(41);
  std::vector<Curve> curves;
  for (int i = 0; i < 10; ++i) curves.emplace_back(oracle::random_smooth_curve(rng, 20));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) d(i, j) = d(j, i) = 1.0 - topology_fitness(curves[static_cast<std::size_t>(i)], curves[static_cast<std::size_t>(j)]);

  const Eigen::MatrixXd jm = Eigen::MatrixXd::Identity(10, 10) - Eigen::MatrixXd::Constant(10, 10, 0.1);
  const Eigen::MatrixXd b = -0.5 * jm * d.cwiseProduct(d) * jm;
  const auto eig = oracle::power_eigs(b, 2);
  Eigen::MatrixX2d oy(10, 2);
  for (int k = 0; k < 2; ++k) oy.col(k) = eig[static_cast<std::size_t>(k)].second * std::sqrt(std::max(0.0, eig[static_cast<std::size_t>(k)].first));
  const auto y = mds_embed(d);
  CHECK(std::abs(embedding_stress(d, y) - embedding_stress(d, oy)) < 1e-8);
  for (int k = 0; k < 2; ++k) {
    Eigen::Index arg;
    y.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(y(arg, k) > 0);
  }
}

TEST_CASE("mds validation") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 2, 0;
  CHECK_THROWS_AS(mds_embed(d), ValidationError);
  CHECK_THROWS_AS(mds_embed(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("curve json round trip to 6 decimals") {
  std::mt19937_64 rng(5);
  const Curve c(oracle::random_smooth_curve(rng, 9), SseLabels("HHHLLLEEE"), "abc");
  const Json j = Json::parse(curve_to_json(c).dump());
  const Curve r = curve_from_json(j);
  CHECK(r.id() == "abc");
  CHECK(r.labels()->str() == "HHHLLLEEE");
  CHECK((r.points() - c.points()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(curve_from_json(Json::parse(R"({"points":[[0,0,0],[1,"x",0]]})")), ValidationError);
  try {
    curve_from_json(Json::parse(R"({"points":[[0,0,0],[1,0,0]],"labels":"HQ"})"), "/curve");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "/curve/labels");
  }
}
