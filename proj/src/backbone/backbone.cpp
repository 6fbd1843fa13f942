// SPDX-License-Identifier: Apache-2.0
#include "curvefold/backbone/backbone.hpp"

#include "curvefold/errors.hpp"

namespace curvefold {

Backbone::Backbone(std::vector<ResidueId> ids, Points ca, SseLabels labels)
    : ids_(std::move(ids)), ca_(std::move(ca)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(ca_.cols()) != ids_.size())
    throw DimensionError("residue id count does not match coordinate count");
  if (!labels_.empty() && labels_.size() != ids_.size())
    throw DimensionError("label count " + std::to_string(labels_.size()) +
                         " does not match residue count " + std::to_string(ids_.size()));
}

Backbone Backbone::single_chain(Points ca, SseLabels labels) {
  std::vector<ResidueId> ids(static_cast<std::size_t>(ca.cols()));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = {"A", static_cast<int>(i + 1)};
  return {std::move(ids), std::move(ca), std::move(labels)};
}

std::vector<std::size_t> Backbone::chain_breaks() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < ids_.size(); ++i) {
    const auto a = static_cast<Eigen::Index>(i);
    const double d = (ca_.col(a + 1) - ca_.col(a)).norm();
    if (ids_[i].chain != ids_[i + 1].chain || ids_[i + 1].index - ids_[i].index > 1 ||
        d < kMinBond || d > kMaxBond)
      out.push_back(i);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Backbone::chain_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < ids_.size();) {
    std::size_t j = i;
    while (j < ids_.size() && ids_[j].chain == ids_[i].chain) ++j;
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

}  // namespace curvefold
