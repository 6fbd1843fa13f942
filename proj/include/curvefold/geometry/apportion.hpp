// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace curvefold {

/// Splits `total` items across bins in proportion to `weights` by the
/// largest-remainder rule. Quotas and remainders are compared on a 1e-9 grid
/// and ties go to the lower index, so weights that differ only by rounding
/// noise (for example after a rigid motion) give the same split.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights);

}  // namespace curvefold
