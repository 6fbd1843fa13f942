// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "curvefold/geometry/types.hpp"

namespace curvefold {

/// Dense samples of an interpolating curve together with the parameter values
/// and (when a spline was fitted) the analytic first and second derivatives.
struct SplineSample {
  Points points;
  std::vector<double> t;
  Points d1;
  Points d2;
  /// Column index in `points` of every input vertex.
  std::vector<std::size_t> knot_index;
  /// Set when fewer than 4 input points forced piecewise-linear sampling;
  /// d1/d2 then hold finite-difference estimates.
  bool linear_fallback = false;
};

/// Cubic spline through the input vertices, chord-length parametrised with
/// not-a-knot end conditions. Emits round(factor * M) samples that include
/// every input vertex; the remaining samples are spread over the spans in
/// proportion to their parameter length.
SplineSample spline_interpolate(const Points& p, double factor);

/// Same spline, with every span cut into `per_span` equal parameter steps, so
/// the output has (M - 1) * per_span + 1 samples and local sample spacing
/// follows the input spacing.
SplineSample spline_subdivide(const Points& p, std::size_t per_span);

struct CurvatureResult {
  std::vector<double> kappa;
  /// Samples where |r'|^3 < 1e-12; kappa is 0 there.
  std::vector<std::size_t> singular;
};

/// kappa = |r' x r''| / |r'|^3 from the sample's derivatives.
CurvatureResult curvature(const SplineSample& s);

/// Same formula with derivatives estimated by three-point Lagrange stencils on
/// a non-uniform parameter grid. Needs at least 3 samples.
CurvatureResult curvature(const Points& p, const std::vector<double>& t);

}  // namespace curvefold
