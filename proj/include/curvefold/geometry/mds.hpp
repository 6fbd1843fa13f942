// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace curvefold {

/// Classical (Torgerson) MDS into two dimensions.
///
/// Input must be square, symmetric and zero on the diagonal (ValidationError
/// otherwise). Each eigenvector is oriented so that its largest-magnitude
/// entry is positive; negative eigenvalues contribute a zero coordinate.
/// Returns an n x 2 matrix.
Eigen::MatrixX2d mds_embed(const Eigen::MatrixXd& distances);

/// Kruskal stress-1 of an embedding against the target distances.
double embedding_stress(const Eigen::MatrixXd& distances, const Eigen::MatrixX2d& coords);

}  // namespace curvefold
