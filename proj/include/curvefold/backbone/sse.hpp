// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/sse_labels.hpp"

namespace curvefold {

/// Distance bands (Angstrom) for the C-alpha-trace assigner.
struct SseBands {
  double helix_d3_min = 5.0;
  double helix_d3_max = 6.0;
  double helix_d4_min = 5.8;
  double helix_d4_max = 6.7;
  std::size_t helix_min_run = 5;
  double strand_d3_min = 9.0;
  double strand_d2_min = 6.0;
  std::size_t strand_min_run = 3;
};

struct SseAssignment {
  SseLabels labels;
  /// Set when the chain was shorter than 5 residues and left all-L.
  bool too_short = false;
};

/// Distance-only secondary-structure assignment on a C-alpha trace.
///
/// A window starting at i votes H for residues i..i+4 when d(i,i+3) and
/// d(i,i+4) both fall inside the helical bands, and E for i..i+3 when
/// d(i,i+3) exceeds the strand threshold while d(i,i+2) shows a near-straight
/// turn. Windows never straddle a chain break. H wins over E; runs shorter
/// than the minimum length revert to L.
SseAssignment assign_sse_geometric(const Backbone& bb, const SseBands& bands = {});

/// Fraction of H labels. Throws PreconditionError on empty input.
double helix_fraction(const SseLabels& labels);

}  // namespace curvefold
