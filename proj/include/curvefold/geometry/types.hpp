// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>

namespace curvefold {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// Point sets are 3xN, column-major, so coordinates are xyz-interleaved in
/// memory and can be handed to the SIMD kernels as flat spans.
using Points = Eigen::Matrix3Xd;

inline std::span<const double> flat(const Points& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}
inline std::span<double> flat(Points& p) { return {p.data(), static_cast<std::size_t>(p.size())}; }

/// x -> R x + t
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Points apply(const Points& p) const {
    return (rotation * p).colwise() + translation;
  }
  Vec3 apply(const Vec3& v) const { return rotation * v + translation; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

}  // namespace curvefold
