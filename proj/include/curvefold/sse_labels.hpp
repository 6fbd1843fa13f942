// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace curvefold {

/// Secondary-structure label sequence over {H, E, L}.
class SseLabels {
 public:
  struct Segment {
    char label;
    std::size_t begin;
    std::size_t length;
    std::size_t end() const { return begin + length; }
  };

  SseLabels() = default;
  /// Throws DataError if any character is outside "HEL".
  explicit SseLabels(std::string labels);
  static SseLabels uniform(std::size_t n, char label);

  const std::string& str() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  char operator[](std::size_t i) const { return labels_[i]; }

  /// Run-length view: maximal runs of identical labels, in order.
  std::vector<Segment> segments() const;

  bool operator==(const SseLabels&) const = default;

 private:
  std::string labels_;
};

bool is_sse_label(char c) noexcept;

}  // namespace curvefold
