// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/superpose.hpp"
#include "curvefold/simd/kernels.hpp"

namespace curvefold {

std::size_t fitness_point_count(std::size_t a, std::size_t b) {
  return std::max({a, b, std::size_t{32}});
}

double procrustes_fitness(const Points& a, const Points& b) {
  if (a.cols() != b.cols()) throw DimensionError("fitness needs equal point counts");
  Points ac = a.colwise() - Vec3(a.rowwise().mean());
  Points bc = b.colwise() - Vec3(b.rowwise().mean());
  const double na = ac.norm();
  const double nb = bc.norm();
  if (na < 1e-12 || nb < 1e-12) throw DegenerateShape("curve collapses to a single point");
  ac /= na;
  bc /= nb;
  const Superposition s = kabsch_superpose(ac, bc, true);
  const double disparity = s.residual * s.residual * static_cast<double>(a.cols());
  return 1.0 - disparity;
}

double topology_fitness(const Curve& a, const Curve& b) {
  const std::size_t n = fitness_point_count(a.size(), b.size());
  const Points pa = resample_points(a.points(), n).points;
  const Points pb = resample_points(b.points(), n).points;
  return procrustes_fitness(pa, pb);
}

double tm_d0(std::size_t length) {
  const double d0 = 1.24 * std::cbrt(static_cast<double>(length) - 15.0) - 1.8;
  return std::max(d0, 0.5);
}

namespace {

struct TmSearch {
  const Points& a;
  const Points& b;
  double inv_d0sq;
  double d_cut;
  std::vector<double> d2;

  // TM-score of the superposition fitted on `sel`; fills `d2`.
  double score(const std::vector<Eigen::Index>& sel, Superposition& fit) {
    Points sa(3, static_cast<Eigen::Index>(sel.size()));
    Points sb(3, static_cast<Eigen::Index>(sel.size()));
    for (std::size_t k = 0; k < sel.size(); ++k) {
      sa.col(static_cast<Eigen::Index>(k)) = a.col(sel[k]);
      sb.col(static_cast<Eigen::Index>(k)) = b.col(sel[k]);
    }
    fit = kabsch_superpose(sa, sb, false);
    const Points moved = fit.apply(a);
    simd::point_sq_dists(flat(moved), flat(b), d2);
    return simd::tm_sum(d2, inv_d0sq) / static_cast<double>(a.cols());
  }

  std::vector<Eigen::Index> within_cutoff() const {
    std::vector<Eigen::Index> sel;
    for (double cut = d_cut;; cut += 0.5) {
      sel.clear();
      const double c2 = cut * cut;
      for (std::size_t i = 0; i < d2.size(); ++i)
        if (d2[i] < c2) sel.push_back(static_cast<Eigen::Index>(i));
      if (sel.size() >= 3 || sel.size() == d2.size()) return sel;
    }
  }
};

}  // namespace

double tm_score_sequential(const Points& a, const Points& b) {
  if (a.cols() != b.cols()) throw DimensionError("TM-score needs equal residue counts");
  const auto len = static_cast<std::size_t>(a.cols());
  if (len < 16) throw LengthTooShort("TM-score needs at least 16 residues");
  const double d0 = tm_d0(len);
  TmSearch search{a, b, 1.0 / (d0 * d0), std::clamp(d0, 4.5, 8.0), std::vector<double>(len)};

  double best = 0.0;
  constexpr int kMaxIterations = 20;
  for (std::size_t frag = len; frag >= 4; frag /= 2) {
    const std::size_t step = std::max<std::size_t>(1, frag / 2);
    for (std::size_t start = 0; start + frag <= len; start += step) {
      std::vector<Eigen::Index> sel(frag);
      for (std::size_t k = 0; k < frag; ++k) sel[k] = static_cast<Eigen::Index>(start + k);
      Superposition fit;
      double tm = 0.0;
      try {
        tm = search.score(sel, fit);
      } catch (const DegenerateShape&) {
        continue;
      }
      best = std::max(best, tm);
      for (int it = 0; it < kMaxIterations; ++it) {
        auto next = search.within_cutoff();
        if (next == sel) break;
        sel = std::move(next);
        try {
          tm = search.score(sel, fit);
        } catch (const DegenerateShape&) {
          break;
        }
        best = std::max(best, tm);
      }
    }
    if (frag == 4) break;
  }
  return best;
}

}  // namespace curvefold
