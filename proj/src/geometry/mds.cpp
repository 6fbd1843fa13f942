// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/mds.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "curvefold/errors.hpp"

namespace curvefold {

Eigen::MatrixX2d mds_embed(const Eigen::MatrixXd& d) {
  if (d.rows() != d.cols()) throw ValidationError("distances", "matrix is not square");
  const Eigen::Index n = d.rows();
  if (n < 1) throw ValidationError("distances", "matrix is empty");
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(d(i, i)) > 1e-12 * scale)
      throw ValidationError("distances/" + std::to_string(i), "diagonal entry is not zero");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(d(i, j) - d(j, i)) > 1e-9 * scale)
        throw ValidationError("distances/" + std::to_string(i) + "/" + std::to_string(j),
                              "matrix is not symmetric");
      if (d(i, j) < 0.0)
        throw ValidationError("distances/" + std::to_string(i) + "/" + std::to_string(j),
                              "negative distance");
    }
  }

  const Eigen::MatrixXd sq = d.cwiseProduct(d);
  const Eigen::MatrixXd j =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd b = -0.5 * j * sq * j;
  b = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);

  Eigen::MatrixX2d out = Eigen::MatrixX2d::Zero(n, 2);
  for (int k = 0; k < 2 && k < n; ++k) {
    const Eigen::Index idx = n - 1 - k;  // eigenvalues ascend
    const double lambda = es.eigenvalues()(idx);
    Eigen::VectorXd v = es.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.col(k) = v * std::sqrt(std::max(lambda, 0.0));
  }
  return out;
}

double embedding_stress(const Eigen::MatrixXd& d, const Eigen::MatrixX2d& y) {
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      const double e = (y.row(i) - y.row(j)).norm();
      num += (d(i, j) - e) * (d(i, j) - e);
      den += d(i, j) * d(i, j);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace curvefold
