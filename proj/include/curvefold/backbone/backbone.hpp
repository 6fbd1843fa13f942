// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "curvefold/geometry/types.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

struct ResidueId {
  std::string chain;
  int index = 0;
  bool operator==(const ResidueId&) const = default;
};

/// C-alpha trace with per-residue SSE labels. Sketches and generated
/// structures share this representation.
class Backbone {
 public:
  static constexpr double kMinBond = 2.0;
  static constexpr double kMaxBond = 4.5;

  Backbone() = default;
  /// Throws DimensionError unless ids and coordinates agree in length and the
  /// labels are either empty (unlabeled) or one per residue.
  Backbone(std::vector<ResidueId> ids, Points ca, SseLabels labels);
  /// Single chain "A" numbered from 1.
  static Backbone single_chain(Points ca, SseLabels labels);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<ResidueId>& ids() const noexcept { return ids_; }
  const Points& ca() const noexcept { return ca_; }
  const SseLabels& labels() const noexcept { return labels_; }
  bool labeled() const noexcept { return !labels_.empty() || ids_.empty(); }

  Backbone with_labels(SseLabels labels) const { return {ids_, ca_, std::move(labels)}; }
  Backbone with_coords(Points ca) const { return {ids_, std::move(ca), labels_}; }

  /// Index i such that residues i and i+1 are not bonded neighbours: a chain
  /// change, a numbering gap, or a C-alpha distance outside [2.0, 4.5] A.
  std::vector<std::size_t> chain_breaks() const;
  /// [begin, end) residue ranges per chain id, in order of appearance.
  std::vector<std::pair<std::size_t, std::size_t>> chain_ranges() const;

 private:
  std::vector<ResidueId> ids_;
  Points ca_;
  SseLabels labels_;
};

}  // namespace curvefold
