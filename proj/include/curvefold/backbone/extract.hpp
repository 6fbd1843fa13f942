// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/curve.hpp"

namespace curvefold {

inline constexpr double kDefaultExtractRate = 0.4;

/// Number of curve points produced for `residues` residues at `rate`.
std::size_t extracted_point_count(std::size_t residues, double rate);

/// Abstracts a labeled backbone to a topology curve.
///
/// Within each chain, every H or E segment is replaced by the projections of
/// its C-alpha atoms onto the segment's principal axis; loop residues keep
/// their coordinates. The chains' polylines are resampled to
/// round(rate * residues) points in total (split across chains by residue
/// count, largest remainder), smoothed once with a 3-point moving average that
/// keeps chain ends fixed, and labeled by majority over the three
/// arc-length-nearest residues.
///
/// Throws PreconditionError for an unlabeled backbone, a rate outside
/// (0, 4], or fewer than 2 output points.
Curve extract_curve(const Backbone& bb, double rate = kDefaultExtractRate);

/// The intermediate polyline (one point per residue, axis projections for
/// H/E segments) before resampling, for a single chain range.
Points axis_polyline(const Backbone& bb, std::size_t begin, std::size_t end);

}  // namespace curvefold
