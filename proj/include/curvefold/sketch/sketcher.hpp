// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/curve.hpp"

namespace curvefold {

struct SketchParams {
  double helix_radius = 2.3;        // A
  double helix_rise = 1.5;          // A per residue
  double residues_per_turn = 3.6;   // 100 degrees per residue
  double coil_spacing = 3.8;        // A between loop/strand residues
  double dense_spacing = 0.25;      // target spacing of the internal axis polyline
};

/// Per-residue C-alpha placement realising a labeled curve.
struct Sketch {
  Points coords;
  SseLabels labels;
  std::string source_curve_id;
  /// Indices (into the curve's label runs) of segments too short for one
  /// residue spacing; each produced a single residue.
  std::vector<std::size_t> short_segments;

  std::size_t size() const { return labels.size(); }
  Backbone to_backbone() const { return Backbone::single_chain(coords, labels); }
};

/// One label run of a curve expressed in arc length along the axis.
struct ArcSegment {
  char label;
  double begin;  // arc length at the start (A)
  double end;
  double length() const { return end - begin; }
};

/// Splits a labeled curve into label runs whose borders sit halfway (in arc
/// length) between the last point of one run and the first of the next.
std::vector<ArcSegment> arc_segments(const Curve& curve, const std::vector<double>& knot_arc);

/// Residue count the sketcher emits for a segment of the given label and
/// arc length.
std::size_t sketch_residue_count(char label, double arc, const SketchParams& params = {});

/// Builds the naive sketch of a labeled curve.
///
/// The curve is interpolated densely (cubic spline when it has at least four
/// points) and carries rotation-minimizing frames. H runs become right-handed
/// helices of the given radius wound about the axis, round(arc / rise)
/// residues centred on the run, phase zero on the transported normal at the
/// first residue. L and E runs get residues on the axis every coil_spacing,
/// also centred. Throws PreconditionError for an unlabeled curve.
Sketch sketch_from_curve(const Curve& curve, const SketchParams& params = {});

}  // namespace curvefold
