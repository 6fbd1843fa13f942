// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "curvefold/backbone/extract.hpp"
#include "curvefold/backbone/pdb.hpp"
#include "curvefold/backbone/sse.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/fitness.hpp"
#include "curvefold/geometry/frames.hpp"
#include "curvefold/io/json_io.hpp"
#include "curvefold/sketch/bundles.hpp"
#include "curvefold/sketch/sketcher.hpp"

using namespace curvefold;

namespace {

Curve straight(double length, char label, int points = 2) {
  Points p(3, points);
  for (int i = 0; i < points; ++i) p.col(i) = Vec3(0, 0, length * i / (points - 1));
  return Curve(p, SseLabels::uniform(static_cast<std::size_t>(points), label));
}

double dist(const Points& p, Eigen::Index i, Eigen::Index j) { return (p.col(i) - p.col(j)).norm(); }

std::string pdb_atom(int serial, const char* name, char alt, char chain, int res, double x, double y, double z) {
  char buf[100];
  std::snprintf(buf, sizeof buf, "ATOM  %5d %-4s%cALA %c%4d    %8.3f%8.3f%8.3f  1.00  0.00           C\n", serial,
                name, alt, chain, res, x, y, z);
  return buf;
}

}  // namespace

TEST_CASE("straight 54 A helix: 36 residues, 10 turns, 3.8 A steps, radius 2.3") {
  const Sketch sk = sketch_from_curve(straight(54.0, 'H'));
  REQUIRE(sk.size() == 36);
  CHECK(sk.labels.str() == std::string(36, 'H'));
  for (Eigen::Index i = 0; i + 1 < 36; ++i) CHECK(std::abs(dist(sk.coords, i, i + 1) - 3.8) <= 0.1);
  // chord from the stated geometry
  const double chord = std::sqrt(std::pow(2 * 2.3 * std::sin(50.0 * std::numbers::pi / 180.0), 2) + 1.5 * 1.5);
  CHECK(std::abs(dist(sk.coords, 0, 1) - chord) < 1e-9);
  double winding = 0.0;
  for (Eigen::Index i = 0; i < 36; ++i) {
    const Vec3 q = sk.coords.col(i);
    CHECK(std::abs(q.head<2>().norm() - 2.3) < 0.05);
    if (i > 0) {
      const Vec3 a = sk.coords.col(i - 1);
      double d = std::atan2(q.y(), q.x()) - std::atan2(a.y(), a.x());
      while (d < 0) d += 2 * std::numbers::pi;
      winding += d;
    }
  }
  // 35 steps of 100 degrees = 9.72 turns between first and last residue;
  // 36 residues at 3.6 per turn make 10 turns.
  CHECK(std::abs(winding - 35 * 100.0 * std::numbers::pi / 180.0) < 1e-6);
  CHECK(36 / 3.6 == doctest::Approx(10.0));
  // rise 1.5 A per residue along the axis
  CHECK(std::abs(sk.coords(2, 1) - sk.coords(2, 0) - 1.5) < 1e-9);
}

TEST_CASE("helix handedness is right-handed") {
  const Sketch sk = sketch_from_curve(straight(30.0, 'H'));
  // right-handed: (r_i x r_{i+1}) points along +axis when the helix climbs +z
  const Vec3 a = sk.coords.col(0), b = sk.coords.col(1);
  Vec3 ra(a.x(), a.y(), 0), rb(b.x(), b.y(), 0);
  CHECK(ra.cross(rb).z() > 0);
}

TEST_CASE("L straight 38 A segment yields 11 residues at 3.8 A") {
  const Sketch sk = sketch_from_curve(straight(38.0, 'L'));
  REQUIRE(sk.size() == 11);
  for (Eigen::Index i = 0; i + 1 < 11; ++i) CHECK(std::abs(dist(sk.coords, i, i + 1) - 3.8) < 1e-9);
  for (Eigen::Index i = 0; i < 11; ++i) CHECK(sk.coords.col(i).head<2>().norm() < 1e-9);
}

TEST_CASE("sketcher preconditions and short segments") {
  Points p(3, 2);
  p << 0, 0, 0, 0, 0, 1.0;
  CHECK_THROWS_AS(sketch_from_curve(Curve(p)), PreconditionError);
  const Sketch sk = sketch_from_curve(Curve(p, SseLabels("LL")));
  CHECK(sk.size() == 1);
  CHECK(sk.short_segments.size() == 1);
}

TEST_CASE("sketch properties on random bundle curves") {
  std::mt19937_64 rng(404);
  BundleParams bp;
  bp.hairpin_probability = 0.5;
  for (int trial = 0; trial < 15; ++trial) {
    const Curve c = random_bundle_curve(rng, bp, "b" + std::to_string(trial));
    const Sketch sk = sketch_from_curve(c);
    CHECK(sk.source_curve_id == c.id());
    CHECK(sk.coords.allFinite());
    for (Eigen::Index i = 0; i + 1 < sk.coords.cols(); ++i) CHECK(dist(sk.coords, i, i + 1) <= 4.5);

    // equivariance and bitwise determinism
    const Mat3 r = oracle::random_rotation(rng);
    const Vec3 t(4, -7, 2);
    const Sketch moved = sketch_from_curve(c.transformed({r, t}));
    CHECK(((r * sk.coords).colwise() + t - moved.coords).cwiseAbs().maxCoeff() < 1e-6);
    const Sketch again = sketch_from_curve(c);
    CHECK((again.coords.array() == sk.coords.array()).all());

    // H residue counts follow the arc lengths of the H runs
    const auto segs = arc_segments(c, arc_lengths(c.points()));
    long expected_h = 0;
    int h_runs = 0;
    for (const auto& s : segs)
      if (s.label == 'H') {
        expected_h += std::lround(s.length() / 1.5);
        ++h_runs;
      }
    const long got_h = std::count(sk.labels.str().begin(), sk.labels.str().end(), 'H');
    CHECK(std::abs(got_h - expected_h) <= h_runs);
  }
}

TEST_CASE("helix residues stay 2.3 A from a gently curved axis") {
  // quarter circle of radius 30 A labeled H
  const int n = 40;
  Points p(3, n);
  for (int i = 0; i < n; ++i) {
    const double a = 0.5 * std::numbers::pi * i / (n - 1);
    p.col(i) = Vec3(30 * std::cos(a), 30 * std::sin(a), 0);
  }
  const Sketch sk = sketch_from_curve(Curve(p, SseLabels::uniform(n, 'H')));
  const Points dense = oracle::resample(p, 4000);
  for (Eigen::Index i = 0; i < sk.coords.cols(); ++i) {
    double best = 1e9;
    for (Eigen::Index j = 0; j < dense.cols(); ++j) best = std::min(best, (dense.col(j) - sk.coords.col(i)).norm());
    CHECK(std::abs(best - 2.3) < 0.05);
  }
}

TEST_CASE("pdb parsing: records, altlocs, ordering and errors") {
  std::string pdb = "HEADER    TEST\n";
  pdb += pdb_atom(1, " N  ", ' ', 'A', 1, 0, 0, 0);
  pdb += pdb_atom(2, " CA ", ' ', 'A', 1, 1.234, 2.345, 3.456);
  pdb += pdb_atom(3, " CA ", 'A', 'A', 2, 4.0, 5.0, 6.0);
  pdb += pdb_atom(4, " CA ", 'B', 'A', 2, 40.0, 50.0, 60.0);
  pdb += pdb_atom(5, " CA ", ' ', 'A', 3, 7.0, 8.0, 9.0);
  pdb += "TER\n";
  const Backbone bb = parse_pdb_calpha(pdb);
  REQUIRE(bb.size() == 3);
  CHECK(bb.labels().str() == "LLL");
  CHECK(bb.ca()(0, 0) == doctest::Approx(1.234));
  CHECK(bb.ca()(2, 0) == doctest::Approx(3.456));
  CHECK(bb.ca()(0, 1) == doctest::Approx(4.0));
  CHECK(bb.ids()[2].index == 3);

  CHECK_THROWS_AS(parse_pdb_calpha("HEADER only\n"), EmptyStructure);
  std::string bad = pdb_atom(1, " CA ", ' ', 'A', 1, 0, 0, 0);
  std::string broken = pdb_atom(2, " CA ", ' ', 'A', 2, 0, 0, 0);
  broken.replace(32, 4, "x.yz");
  try {
    parse_pdb_calpha("REMARK\n" + bad + broken);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("pdb ordering by chain then residue number, first model only") {
  std::string pdb;
  pdb += "MODEL        1\n";
  pdb += pdb_atom(1, " CA ", ' ', 'B', 5, 0, 0, 0);
  pdb += pdb_atom(2, " CA ", ' ', 'B', 4, 0, 0, 3.8);
  pdb += pdb_atom(3, " CA ", ' ', 'C', 1, 0, 0, 7.6);
  pdb += "ENDMDL\nMODEL        2\n";
  pdb += pdb_atom(4, " CA ", ' ', 'B', 6, 0, 0, 0);
  pdb += "ENDMDL\n";
  const Backbone bb = parse_pdb_calpha(pdb);
  REQUIRE(bb.size() == 3);
  CHECK(bb.ids()[0] == ResidueId{"B", 4});
  CHECK(bb.ids()[1] == ResidueId{"B", 5});
  CHECK(bb.ids()[2] == ResidueId{"C", 1});
  CHECK(bb.chain_ranges().size() == 2);
  CHECK(bb.chain_breaks() == std::vector<std::size_t>{1});
}

TEST_CASE("pdb writer round trip matches an independent reading of the columns") {
  std::mt19937_64 rng(8);
  const Backbone bb = bundle_backbone(random_bundle_curve(rng));
  const std::string text = write_pdb_calpha(bb);
  const Backbone back = parse_pdb_calpha(text);
  REQUIRE(back.size() == bb.size());
  // independent column reader: sscanf on the raw lines
  std::multiset<std::tuple<long, long, long>> a, b;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("ATOM", 0) != 0) continue;
    double x, y, z;
    REQUIRE(std::sscanf(line.c_str() + 30, "%8lf%8lf%8lf", &x, &y, &z) == 3);
    a.insert({std::lround(x * 1000), std::lround(y * 1000), std::lround(z * 1000)});
  }
  for (Eigen::Index i = 0; i < back.ca().cols(); ++i)
    b.insert({std::lround(back.ca()(0, i) * 1000), std::lround(back.ca()(1, i) * 1000), std::lround(back.ca()(2, i) * 1000)});
  CHECK(a == b);
  CHECK((back.ca() - bb.ca()).cwiseAbs().maxCoeff() < 6e-4);
}

TEST_CASE("geometric SSE assignment") {
  const Sketch helix = sketch_from_curve(straight(30.0, 'H'));
  REQUIRE(helix.size() == 20);
  const auto h = assign_sse_geometric(Backbone::single_chain(helix.coords, SseLabels::uniform(20, 'L')));
  CHECK(std::count(h.labels.str().begin(), h.labels.str().end(), 'H') >= 16);

  Points line(3, 20);
  for (int i = 0; i < 20; ++i) line.col(i) = Vec3(3.8 * i, 0, 0);
  const auto l = assign_sse_geometric(Backbone::single_chain(line, SseLabels::uniform(20, 'L')));
  CHECK(l.labels.str().find('H') == std::string::npos);

  const auto s = assign_sse_geometric(Backbone::single_chain(line.leftCols(4), SseLabels::uniform(4, 'L')));
  CHECK(s.labels.str() == "LLLL");
  CHECK(s.too_short);

  // rigid invariance
  std::mt19937_64 rng(3);
  const Backbone bb = bundle_backbone(random_bundle_curve(rng));
  const Mat3 r = oracle::random_rotation(rng);
  const auto a0 = assign_sse_geometric(bb);
  const auto a1 = assign_sse_geometric(bb.with_coords((r * bb.ca()).colwise() + Vec3(1, 2, 3)));
  CHECK(a0.labels == a1.labels);
  // the sketch helices are recovered
  long agree = 0, total_h = 0;
  for (std::size_t i = 0; i < bb.size(); ++i)
    if (bb.labels()[i] == 'H') {
      ++total_h;
      agree += a0.labels[i] == 'H';
    }
  CHECK(static_cast<double>(agree) / static_cast<double>(total_h) >= 0.8);
}

TEST_CASE("helix fraction") {
  CHECK(helix_fraction(SseLabels("HHHHH")) == 1.0);
  CHECK(helix_fraction(SseLabels("LLLL")) == 0.0);
  CHECK(helix_fraction(SseLabels("HHHLLHHHLL")) == doctest::Approx(0.6));
  CHECK_THROWS_AS(helix_fraction(SseLabels("")), PreconditionError);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 2), len(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    for (int i = len(rng); i > 0; --i) a.push_back("HEL"[pick(rng)]);
    for (int i = len(rng); i > 0; --i) b.push_back("HEL"[pick(rng)]);
    const double fa = helix_fraction(SseLabels(a)), fb = helix_fraction(SseLabels(b));
    const double fab = helix_fraction(SseLabels(a + b));
    CHECK(fab >= std::min(fa, fb) - 1e-12);
    CHECK(fab <= std::max(fa, fb) + 1e-12);
  }
}

TEST_CASE("extract_curve contracts") {
  std::mt19937_64 rng(12);
  const Backbone bb = bundle_backbone(random_bundle_curve(rng));
  for (double rate : {0.4, 0.8, 1.2, 0.13}) {
    const Curve c = extract_curve(bb, rate);
    CHECK(c.size() == static_cast<std::size_t>(std::lround(rate * static_cast<double>(bb.size()))));
    CHECK(c.labeled());
  }
  CHECK_THROWS_AS(extract_curve(Backbone({{"A", 1}, {"A", 2}}, Points::Random(3, 2), SseLabels()), 1.0),
                  PreconditionError);

  const Mat3 r = oracle::random_rotation(rng);
  const Vec3 t(-3, 9, 1);
  const Curve c0 = extract_curve(bb);
  const Curve c1 = extract_curve(bb.with_coords((r * bb.ca()).colwise() + t));
  CHECK(((r * c0.points()).colwise() + t - c1.points()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("all-loop backbone keeps points on the trace") {
  const int n = 50;
  Points p(3, n);
  for (int i = 0; i < n; ++i) {
    const double a = 0.08 * i;
    p.col(i) = Vec3(20 * std::cos(a), 20 * std::sin(a), 1.5 * i);
  }
  const Curve c = extract_curve(Backbone::single_chain(p, SseLabels::uniform(n, 'L')), 0.4);
  REQUIRE(c.size() == 20);
  const Points dense = oracle::resample(p, 5000);
  for (Eigen::Index i = 0; i < c.points().cols(); ++i) {
    double best = 1e9;
    for (Eigen::Index j = 0; j < dense.cols(); ++j) best = std::min(best, (dense.col(j) - c.points().col(i)).norm());
    CHECK(best < 1.0);
  }
}

TEST_CASE("single 36-residue helix extracts to a straight axis") {
  const Sketch sk = sketch_from_curve(straight(54.0, 'H'));
  const Curve c = extract_curve(sk.to_backbone(), 0.4);
  // principal-axis oracle: distance of every point from the best-fit line
  const Eigen::Matrix3Xd cen = oracle::centred(c.points());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cen * cen.transpose());
  const Eigen::Vector3d axis = es.eigenvectors().col(2);
  for (Eigen::Index i = 0; i < cen.cols(); ++i) CHECK((cen.col(i) - axis * axis.dot(cen.col(i))).norm() < 0.2);
  CHECK(c.labels()->str() == std::string(c.size(), 'H'));
}

TEST_CASE("bundle round trip: extract(sketch(C)) stays close to C") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const Curve c = random_bundle_curve(rng);
    const Curve back = extract_curve(sketch_from_curve(c).to_backbone(), 0.4);
    CHECK(topology_fitness(back, c) > 0.95);
  }
}

TEST_CASE("backbone json round trip") {
  std::mt19937_64 rng(5);
  const Backbone bb = bundle_backbone(random_bundle_curve(rng));
  const Backbone back = backbone_from_json(Json::parse(backbone_to_json(bb).dump()));
  CHECK(back.labels() == bb.labels());
  CHECK(back.ids() == bb.ids());
  CHECK((back.ca() - bb.ca()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(backbone_from_json(Json::parse(R"({"residues":[["A",1,0,0]]})")), ValidationError);
}

TEST_CASE("bundle generator is deterministic and covers all labels") {
  BundleParams bp;
  bp.hairpin_probability = 0.5;
  std::mt19937_64 r1(9), r2(9);
  std::set<char> seen;
  for (int i = 0; i < 10; ++i) {
    const Curve a = random_bundle_curve(r1, bp), b = random_bundle_curve(r2, bp);
    CHECK((a.points().array() == b.points().array()).all());
    for (char ch : a.labels()->str()) seen.insert(ch);
  }
  CHECK(seen == std::set<char>{'E', 'H', 'L'});
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
