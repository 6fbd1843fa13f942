// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curvefold {

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> out(weights.size(), 0);
  if (weights.empty() || total == 0) return out;
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::pair<long long, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = wsum > 0.0 ? static_cast<double>(total) * weights[i] / wsum
                              : static_cast<double>(total) / static_cast<double>(weights.size());
    const double nearest = std::round(exact);
    if (std::abs(exact - nearest) < 1e-9) exact = nearest;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(std::llround((exact - std::floor(exact)) * 1e9), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace curvefold
