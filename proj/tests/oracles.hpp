// SPDX-License-Identifier: Apache-2.0
// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's own geometry routines.
#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Mat = Eigen::Matrix3Xd;

inline Mat centred(const Mat& a) { return a.colwise() - a.rowwise().mean(); }

/// Horn's quaternion method: largest eigenvalue of the 4x4 symmetric matrix
/// built from the cross-covariance of centred sets a -> b.
inline double horn_lambda_max(const Mat& a, const Mat& b) {
  const Eigen::Matrix3d s = centred(a) * centred(b).transpose();
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
  const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
  const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(n);
  return es.eigenvalues()(3);
}

/// Rigid-superposition RMSD from Horn's eigenvalue.
inline double horn_rmsd(const Mat& a, const Mat& b) {
  const double ga = centred(a).squaredNorm();
  const double gb = centred(b).squaredNorm();
  const double e = std::max(0.0, ga + gb - 2.0 * horn_lambda_max(a, b));
  return std::sqrt(e / static_cast<double>(a.cols()));
}

/// 1 - Procrustes disparity for equal-size sets, shapes normalised to unit
/// Frobenius norm, optimal scale and proper rotation.
inline double procrustes_tf(const Mat& a, const Mat& b) {
  Mat ac = centred(a);
  Mat bc = centred(b);
  ac /= ac.norm();
  bc /= bc.norm();
  const double l = horn_lambda_max(ac, bc);
  return l * l;
}

/// Arc-length resampling of a polyline by brute-force walking.
inline Mat resample(const Mat& p, int n) {
  std::vector<double> cum(static_cast<std::size_t>(p.cols()), 0.0);
  for (Eigen::Index i = 1; i < p.cols(); ++i)
    cum[static_cast<std::size_t>(i)] = cum[static_cast<std::size_t>(i - 1)] + (p.col(i) - p.col(i - 1)).norm();
  Mat out(3, n);
  for (int k = 0; k < n; ++k) {
    const double s = cum.back() * k / (n - 1);
    Eigen::Index i = 0;
    while (i + 2 < p.cols() && cum[static_cast<std::size_t>(i + 1)] < s) ++i;
    const double seg = cum[static_cast<std::size_t>(i + 1)] - cum[static_cast<std::size_t>(i)];
    const double f = seg > 0 ? (s - cum[static_cast<std::size_t>(i)]) / seg : 0.0;
    out.col(k) = (1 - f) * p.col(i) + f * p.col(i + 1);
  }
  return out;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

/// Smooth random space curve: sum of a few low-frequency sinusoids.
inline Mat random_smooth_curve(std::mt19937_64& rng, int n, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat p(3, n);
  double coef[3][3][2];
  for (auto& c : coef)
    for (auto& k : c)
      for (double& v : k) v = u(rng);
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1) * std::numbers::pi;
    for (int d = 0; d < 3; ++d) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += coef[d][k][0] * std::sin((k + 1) * s) + coef[d][k][1] * std::cos((k + 1) * s);
      p(d, i) = scale * v + 2.0 * scale * s * (d == 0);
    }
  }
  return p;
}

/// Largest (algebraic) eigenpairs of a symmetric matrix by shifted power
/// iteration with deflation.
inline std::vector<std::pair<double, Eigen::VectorXd>> power_eigs(Eigen::MatrixXd b, int k) {
  std::vector<std::pair<double, Eigen::VectorXd>> out;
  const double shift = b.cwiseAbs().rowwise().sum().maxCoeff();
  for (int e = 0; e < k; ++e) {
    const Eigen::MatrixXd shifted = b + shift * Eigen::MatrixXd::Identity(b.rows(), b.cols());
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(b.rows(), 1.0, 2.0);
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = shifted * v;
      const double nrm = w.norm();
      if (nrm == 0.0) break;
      w /= nrm;
      lambda = w.dot(b * w);
      if ((w - v).norm() < 1e-15) {
        v = w;
        break;
      }
      v = w;
    }
    out.emplace_back(lambda, v);
    b -= lambda * v * v.transpose();
  }
  return out;
}

inline std::string temp_dir(const std::string& leaf) {
  const char* base = std::getenv("CURVEFOLD_TEST_TMP");
  std::filesystem::path p = base ? base : std::filesystem::temp_directory_path() / "curvefold_tests";
  p /= leaf;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic, with the usual
/// small-sample correction of the scaled statistic).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lam = (ne + 0.12 + 0.11 / ne) * d;
  if (lam < 0.2) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 200; ++k) q += (k % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle
