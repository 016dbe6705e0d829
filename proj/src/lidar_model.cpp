#include "lar/lidar_model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "lar/errors.hpp"

namespace lar {

void KeypointSet::validate(int minimum) const {
  if (rover.size() != reference.size()) {
    throw ArgumentError("rover and reference keypoint lists differ in length");
  }
  if (count() < minimum) {
    throw ArgumentError("need at least " + std::to_string(minimum) + " keypoints, got " +
                        std::to_string(count()));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DegenerateWeightError("lidar sigma must be positive");
  }
}

KeypointSet KeypointSet::subset(const std::vector<int>& indices) const {
  KeypointSet out;
  out.sigma = sigma;
  out.rover.reserve(indices.size());
  out.reference.reserve(indices.size());
  for (int i : indices) {
    out.rover.push_back(rover.at(i));
    out.reference.push_back(reference.at(i));
  }
  return out;
}

Eigen::Matrix<double, 9, 1> RigidPose::rotation_params() const {
  return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rotation.data());
}

Matrix3d RigidPose::rotation_from_params(const Eigen::Ref<const VectorXd>& r) {
  if (r.size() != 9) throw ArgumentError("rotation parameter vector must have 9 entries");
  Matrix3d m;
  for (int c = 0; c < 3; ++c)
    for (int row = 0; row < 3; ++row) m(row, c) = r(3 * c + row);
  return m;
}

Matrix3d nearest_rotation(const Matrix3d& m) {
  Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d d = Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

RigidPose RigidPose::projected() const {
  RigidPose p = *this;
  p.rotation = nearest_rotation(rotation);
  return p;
}

LidarJacobians lidar_jacobians(const KeypointSet& keypoints, const RigidPose& pose) {
  if (keypoints.rover.size() != keypoints.reference.size()) {
    throw ArgumentError("rover and reference keypoint lists differ in length");
  }
  const int n = keypoints.count();
  LidarJacobians j;
  j.A = MatrixXd::Zero(3 * n, 12);
  j.B_transpose = MatrixXd::Zero(3 * n, 3 * n);
  j.misclosure.resize(3 * n);
  for (int k = 0; k < n; ++k) {
    const Vector3d& y = keypoints.rover[k];
    j.A.block<3, 3>(3 * k, 0).setIdentity();
    for (int c = 0; c < 3; ++c) {
      j.A.block<3, 3>(3 * k, 3 + 3 * c) = y(c) * Matrix3d::Identity();
    }
    j.B_transpose.block<3, 3>(3 * k, 3 * k) = pose.rotation;
    j.misclosure.segment<3>(3 * k) = pose.apply(y) - keypoints.reference[k];
  }
  return j;
}

MatrixXd lidar_weight_matrix(const KeypointSet& keypoints) {
  if (!(keypoints.sigma > 0.0)) throw DegenerateWeightError("lidar sigma must be positive");
  const int n = 3 * keypoints.count();
  return MatrixXd::Identity(n, n) / (keypoints.sigma * keypoints.sigma);
}

RigidPose estimate_rigid_transform(const KeypointSet& correspondences) {
  if (correspondences.rover.size() != correspondences.reference.size()) {
    throw ArgumentError("rover and reference keypoint lists differ in length");
  }
  const int n = correspondences.count();
  if (n < 3) throw DegenerateGeometryError("rigid fit needs at least three points");

  Vector3d ybar = Vector3d::Zero(), cbar = Vector3d::Zero();
  for (int k = 0; k < n; ++k) {
    ybar += correspondences.rover[k];
    cbar += correspondences.reference[k];
  }
  ybar /= n;
  cbar /= n;

  Matrix3d h = Matrix3d::Zero();
  Matrix3d spread = Matrix3d::Zero();
  for (int k = 0; k < n; ++k) {
    const Vector3d dy = correspondences.rover[k] - ybar;
    h += dy * (correspondences.reference[k] - cbar).transpose();
    spread += dy * dy.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(spread);
  const Vector3d ev = es.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-14 * ev(2)) {
    throw DegenerateGeometryError("keypoints are collinear or coincident");
  }

  Eigen::JacobiSVD<Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3d& u = svd.matrixU();
  const Matrix3d& v = svd.matrixV();
  Matrix3d d = Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0) d(2, 2) = -1.0;

  RigidPose pose;
  pose.rotation = v * d * u.transpose();
  pose.translation = cbar - pose.rotation * ybar;
  return pose;
}

namespace {

double residual_distance(const RigidPose& pose, const KeypointSet& set, int k) {
  return (pose.apply(set.rover[k]) - set.reference[k]).norm();
}

std::vector<int> consensus(const RigidPose& pose, const KeypointSet& set, double threshold,
                           double* residual_sum) {
  std::vector<int> in;
  double sum = 0.0;
  for (int k = 0; k < set.count(); ++k) {
    const double r = residual_distance(pose, set, k);
    if (r < threshold) {
      in.push_back(k);
      sum += r;
    }
  }
  if (residual_sum) *residual_sum = sum;
  return in;
}

}  // namespace

RegistrationReport ransac_register(const KeypointSet& correspondences, const RansacOptions& options) {
  if (correspondences.rover.size() != correspondences.reference.size()) {
    throw ArgumentError("rover and reference keypoint lists differ in length");
  }
  const int n = correspondences.count();
  if (n < 4) throw ArgumentError("RANSAC registration needs at least four keypoints");
  if (options.sample_size < 3 || options.sample_size > n) {
    throw ArgumentError("RANSAC sample size must be in [3, n]");
  }
  if (options.max_iterations < 1 || !(options.inlier_threshold > 0.0)) {
    throw ArgumentError("RANSAC needs a positive threshold and at least one iteration");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<int> idx(n);
  std::vector<int> best;
  double best_sum = 0.0;

  for (int it = 0; it < options.max_iterations; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates; std::shuffle would draw more than needed.
    for (int s = 0; s < options.sample_size; ++s) {
      std::uniform_int_distribution<int> pick(s, n - 1);
      std::swap(idx[s], idx[pick(rng)]);
    }
    RigidPose hypothesis;
    try {
      hypothesis = estimate_rigid_transform(
          correspondences.subset({idx.begin(), idx.begin() + options.sample_size}));
    } catch (const DegenerateGeometryError&) {
      continue;
    }
    double sum = 0.0;
    auto in = consensus(hypothesis, correspondences, options.inlier_threshold, &sum);
    if (in.size() > best.size() || (in.size() == best.size() && sum < best_sum)) {
      best = std::move(in);
      best_sum = sum;
    }
    if (static_cast<int>(best.size()) == n) break;
  }
  if (best.size() < 4) throw RegistrationFailure("no consensus set of at least four keypoints");

  RegistrationReport report;
  report.pose = estimate_rigid_transform(correspondences.subset(best));
  auto refined = consensus(report.pose, correspondences, options.inlier_threshold, nullptr);
  if (refined != best && refined.size() >= 4) {
    try {
      report.pose = estimate_rigid_transform(correspondences.subset(refined));
      best = std::move(refined);
    } catch (const DegenerateGeometryError&) {
    }
  }
  report.inliers = best;

  double ss = 0.0;
  PointList registered, truth;
  for (int k : best) {
    const double r = residual_distance(report.pose, correspondences, k);
    ss += r * r;
    registered.push_back(report.pose.apply(correspondences.rover[k]));
    truth.push_back(correspondences.reference[k]);
  }
  report.sigma = std::sqrt(ss / static_cast<double>(best.size()));
  report.sre = scaled_registration_error(registered, truth);
  return report;
}

double scaled_registration_error(const PointList& registered, const PointList& ground_truth) {
  if (registered.size() != ground_truth.size() || registered.empty()) {
    throw ArgumentError("SRE needs two non-empty point lists of equal length");
  }
  Vector3d centroid = Vector3d::Zero();
  for (const auto& p : registered) centroid += p;
  centroid /= static_cast<double>(registered.size());

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < registered.size(); ++k) {
    const double spread = (registered[k] - centroid).norm();
    if (spread < 1e-12) {
      std::cerr << "warning: SRE skips point " << k << " at the centroid\n";
      continue;
    }
    sum += (registered[k] - ground_truth[k]).norm() / spread;
    ++used;
  }
  if (used == 0) throw DegenerateGeometryError("SRE undefined: every point lies at the centroid");
  return sum / static_cast<double>(used);
}

}  // namespace lar
