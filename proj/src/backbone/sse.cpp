// SPDX-License-Identifier: Apache-2.0
#include "curvefold/backbone/sse.hpp"

#include <algorithm>
#include <vector>

#include "curvefold/errors.hpp"

namespace curvefold {
namespace {

void drop_short_runs(std::string& s, char label, std::size_t min_run) {
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != label) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] == label) ++j;
    if (j - i < min_run) std::fill(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(j), 'L');
    i = j;
  }
}

}  // namespace

SseAssignment assign_sse_geometric(const Backbone& bb, const SseBands& bands) {
  const std::size_t n = bb.size();
  if (n < 5) return {SseLabels::uniform(n, 'L'), true};

  // segment_id[i] changes after every chain break so windows can be checked
  // for contiguity in O(1).
  std::vector<std::size_t> segment_id(n, 0);
  {
    const auto breaks = bb.chain_breaks();
    std::size_t b = 0;
    for (std::size_t i = 1; i < n; ++i) {
      segment_id[i] = segment_id[i - 1];
      if (b < breaks.size() && breaks[b] == i - 1) {
        ++segment_id[i];
        ++b;
      }
    }
  }
  const auto& ca = bb.ca();
  auto dist = [&](std::size_t i, std::size_t j) {
    return (ca.col(static_cast<Eigen::Index>(i)) - ca.col(static_cast<Eigen::Index>(j))).norm();
  };

  std::vector<bool> helix(n, false);
  std::vector<bool> strand(n, false);
  for (std::size_t i = 0; i + 3 < n; ++i) {
    if (segment_id[i] != segment_id[i + 3]) continue;
    const double d3 = dist(i, i + 3);
    if (i + 4 < n && segment_id[i] == segment_id[i + 4]) {
      const double d4 = dist(i, i + 4);
      if (d3 >= bands.helix_d3_min && d3 <= bands.helix_d3_max && d4 >= bands.helix_d4_min &&
          d4 <= bands.helix_d4_max)
        std::fill(helix.begin() + static_cast<std::ptrdiff_t>(i), helix.begin() + static_cast<std::ptrdiff_t>(i + 5), true);
    }
    if (d3 > bands.strand_d3_min && dist(i, i + 2) > bands.strand_d2_min &&
        dist(i + 1, i + 3) > bands.strand_d2_min)
      std::fill(strand.begin() + static_cast<std::ptrdiff_t>(i), strand.begin() + static_cast<std::ptrdiff_t>(i + 4), true);
  }

  std::string s(n, 'L');
  for (std::size_t i = 0; i < n; ++i) s[i] = helix[i] ? 'H' : (strand[i] ? 'E' : 'L');
  drop_short_runs(s, 'H', bands.helix_min_run);
  drop_short_runs(s, 'E', bands.strand_min_run);
  return {SseLabels(std::move(s)), false};
}

double helix_fraction(const SseLabels& labels) {
  if (labels.empty()) throw PreconditionError("helix fraction of empty label sequence");
  const auto h = std::count(labels.str().begin(), labels.str().end(), 'H');
  return static_cast<double>(h) / static_cast<double>(labels.size());
}

}  // namespace curvefold
