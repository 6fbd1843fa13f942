// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "curvefold/geometry/types.hpp"

namespace curvefold {

/// x -> scale * rotation * x + translation, mapping the first point set onto
/// the second. `residual` is the RMSD after the transform.
struct Superposition {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;
  double residual = 0.0;

  Points apply(const Points& p) const {
    return ((scale * rotation) * p).colwise() + translation;
  }
  RigidTransform rigid() const { return {rotation, translation}; }
};

/// Optimal superposition of `a` onto `b` (same size, >= 3 points). Proper
/// rotations only; with `with_scale` the similarity transform is optimised.
/// Throws DimensionError on size mismatch and DegenerateShape when either set
/// has all points coincident.
Superposition kabsch_superpose(const Points& a, const Points& b, bool with_scale = false);

/// Root-mean-square deviation after optimal rigid superposition.
double rmsd_superposed(const Points& a, const Points& b);

/// Plain RMSD without superposition.
double rmsd(const Points& a, const Points& b);

/// Uniformly distributed proper rotation from three uniforms in [0,1).
Mat3 rotation_from_uniforms(double u1, double u2, double u3);

}  // namespace curvefold
