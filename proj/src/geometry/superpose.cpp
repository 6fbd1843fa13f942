// SPDX-License-Identifier: Apache-2.0
#include "curvefold/geometry/superpose.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "curvefold/errors.hpp"
#include "curvefold/simd/kernels.hpp"

namespace curvefold {

Superposition kabsch_superpose(const Points& a, const Points& b, bool with_scale) {
  if (a.cols() != b.cols())
    throw DimensionError("superposition needs equal point counts (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()) + ")");
  if (a.cols() < 3) throw DimensionError("superposition needs at least 3 points");
  const Vec3 ca = a.rowwise().mean();
  const Vec3 cb = b.rowwise().mean();
  const Points ac = a.colwise() - ca;
  const Points bc = b.colwise() - cb;
  const double na = ac.squaredNorm();
  const double nb = bc.squaredNorm();
  if (na < 1e-18 || nb < 1e-18) throw DegenerateShape("point set collapses to a single point");

  const Mat3 h = ac * bc.transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  const double d = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 dm = Mat3::Identity();
  dm(2, 2) = d;

  Superposition s;
  s.rotation = v * dm * u.transpose();
  if (with_scale) {
    const Vec3 sv = svd.singularValues();
    const double tr = sv(0) + sv(1) + d * sv(2);
    // tr can only vanish when the cross-covariance is rank deficient in a
    // way that makes every rotation equally bad; keep the rigid fit then.
    s.scale = tr > 0.0 ? tr / na : 1.0;
  }
  s.translation = cb - s.scale * s.rotation * ca;
  const Points moved = s.apply(a);
  s.residual = std::sqrt(simd::sum_sq_diff(flat(moved), flat(b)) / static_cast<double>(a.cols()));
  return s;
}

double rmsd_superposed(const Points& a, const Points& b) { return kabsch_superpose(a, b).residual; }

double rmsd(const Points& a, const Points& b) {
  if (a.cols() != b.cols()) throw DimensionError("rmsd needs equal point counts");
  if (a.cols() == 0) return 0.0;
  return std::sqrt(simd::sum_sq_diff(flat(a), flat(b)) / static_cast<double>(a.cols()));
}

Mat3 rotation_from_uniforms(double u1, double u2, double u3) {
  // Shoemake's uniform quaternion.
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double t1 = 2.0 * std::numbers::pi * u2;
  const double t2 = 2.0 * std::numbers::pi * u3;
  Eigen::Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
  return q.normalized().toRotationMatrix();
}

}  // namespace curvefold
