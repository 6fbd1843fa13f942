// SPDX-License-Identifier: Apache-2.0
#include "curvefold/backbone/extract.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/apportion.hpp"

namespace curvefold {

std::size_t extracted_point_count(std::size_t residues, double rate) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(residues)));
}

Points axis_polyline(const Backbone& bb, std::size_t begin, std::size_t end) {
  const auto& ca = bb.ca();
  Points out = ca.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  const std::string seg_labels = bb.labels().str().substr(begin, end - begin);
  for (const auto& seg : SseLabels(seg_labels).segments()) {
    if (seg.label == 'L' || seg.length < 3) continue;
    const auto cols = out.middleCols(static_cast<Eigen::Index>(seg.begin), static_cast<Eigen::Index>(seg.length));
    const Vec3 centre = cols.rowwise().mean();
    const Points centred = cols.colwise() - centre;
    Eigen::SelfAdjointEigenSolver<Mat3> es(centred * centred.transpose());
    const Vec3 axis = es.eigenvectors().col(2);
    const Eigen::RowVectorXd proj = axis.transpose() * centred;
    out.middleCols(static_cast<Eigen::Index>(seg.begin), static_cast<Eigen::Index>(seg.length)) =
        (axis * proj).colwise() + centre;
  }
  return out;
}

namespace {

char majority(char a, char b, char c) {
  if (a == c) return a;  // covers a == b == c too
  return b;              // b agrees with a or c, or all differ
}

}  // namespace

Curve extract_curve(const Backbone& bb, double rate) {
  if (!bb.labeled() || bb.size() == 0) throw PreconditionError("curve extraction needs a labeled backbone");
  if (!(rate > 0.0 && rate <= 4.0)) throw PreconditionError("extraction rate must lie in (0, 4]");
  const std::size_t total = extracted_point_count(bb.size(), rate);
  if (total < 2) throw PreconditionError("extraction would produce fewer than 2 points");

  const auto ranges = bb.chain_ranges();
  std::vector<double> weights;
  for (const auto& [b, e] : ranges) weights.push_back(static_cast<double>(e - b));
  const auto counts = apportion(total, weights);

  const auto& labels = bb.labels();
  Points out(3, static_cast<Eigen::Index>(total));
  std::string out_labels;
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < ranges.size(); ++c) {
    const auto [begin, end] = ranges[c];
    const std::size_t m = counts[c];
    if (m == 0) continue;
    const Points poly = axis_polyline(bb, begin, end);
    const std::size_t len = end - begin;
    auto label_at = [&](std::size_t j) {
      const char mid = labels[begin + j];
      const char lo = labels[begin + (j > 0 ? j - 1 : j)];
      const char hi = labels[begin + (j + 1 < len ? j + 1 : j)];
      return majority(lo, mid, hi);
    };
    if (m == 1 || len == 1) {
      // Too few points for a polyline: emit arc-midpoints of the chain.
      const auto cum = arc_lengths(poly);
      for (std::size_t k = 0; k < m; ++k) {
        const double s = cum.back() * (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        out.col(col++) = point_at_arc(poly, cum, s);
        const auto j = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), s) - cum.begin());
        out_labels.push_back(label_at(std::min(j, len - 1)));
      }
      continue;
    }
    const auto r = resample_points(poly, m);
    Points smooth = r.points;
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      smooth.col(i) = (r.points.col(i - 1) + r.points.col(i) + r.points.col(i + 1)) / 3.0;
    }
    out.middleCols(col, static_cast<Eigen::Index>(m)) = smooth;
    col += static_cast<Eigen::Index>(m);
    for (std::size_t k = 0; k < m; ++k) out_labels.push_back(label_at(r.nearest_source[k]));
  }
  return Curve(std::move(out), SseLabels(std::move(out_labels)));
}

}  // namespace curvefold
