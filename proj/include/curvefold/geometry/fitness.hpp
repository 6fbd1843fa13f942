// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "curvefold/geometry/curve.hpp"
#include "curvefold/geometry/types.hpp"

namespace curvefold {

/// Both curves are resampled to this many points before comparison.
std::size_t fitness_point_count(std::size_t a, std::size_t b);

/// Topology Fitness: 1 - Procrustes disparity.
///
/// Both curves are resampled to fitness_point_count(), centred and scaled to
/// unit Frobenius norm, then superposed by the optimal similarity transform
/// (no reflections). The disparity is the summed squared distance left over,
/// so TF is 1 exactly when the shapes agree up to similarity. Symmetric.
/// Throws DegenerateShape if either curve collapses to a point.
double topology_fitness(const Curve& a, const Curve& b);

/// Same as above on equal-size point sets, without resampling.
double procrustes_fitness(const Points& a, const Points& b);

/// TM-score normalisation length d0 for a chain of length L (>= 0.5 A).
double tm_d0(std::size_t length);

/// TM-score under sequential residue correspondence, maximised over Kabsch
/// superpositions seeded from fragments and refined iteratively on the
/// residues inside the distance cutoff. Throws LengthTooShort for L < 16 and
/// DimensionError for unequal lengths.
double tm_score_sequential(const Points& a, const Points& b);

}  // namespace curvefold
