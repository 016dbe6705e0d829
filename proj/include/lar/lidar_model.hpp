#pragma once

// Lidar keypoint observations. Each matched keypoint j gives three equations
//   b + R y_j - c_j = 0
// with y_j measured in the lidar frame and c_j known in the reference frame.

#include <cstdint>
#include <vector>

#include "lar/types.hpp"

namespace lar {

struct KeypointSet {
  PointList rover;      // y_j, lidar frame, meters
  PointList reference;  // c_j, reference frame, meters
  double sigma = 0.15;  // per-coordinate standard deviation, meters

  int count() const { return static_cast<int>(rover.size()); }
  void validate(int minimum = 4) const;
  KeypointSet subset(const std::vector<int>& indices) const;
};

struct RigidPose {
  Vector3d translation = Vector3d::Zero();
  Matrix3d rotation = Matrix3d::Identity();  // not necessarily orthonormal during WLS

  // vec(R), column-stacked.
  Eigen::Matrix<double, 9, 1> rotation_params() const;
  static Matrix3d rotation_from_params(const Eigen::Ref<const VectorXd>& r);
  // Nearest proper rotation (orthogonal Procrustes).
  RigidPose projected() const;
  Vector3d apply(const Vector3d& y) const { return translation + rotation * y; }
};

Matrix3d nearest_rotation(const Matrix3d& m);

struct LidarJacobians {
  MatrixXd A;            // 3n x 12: [I3, y_j^T (x) I3] per keypoint
  MatrixXd B_transpose;  // 3n x 3n: I_n (x) R
  VectorXd misclosure;   // b + R y_j - c_j
};

LidarJacobians lidar_jacobians(const KeypointSet& keypoints, const RigidPose& pose);

// (1 / sigma^2) I_3n
MatrixXd lidar_weight_matrix(const KeypointSet& keypoints);

// Least-squares rigid fit minimizing sum |b + R y_j - c_j|^2, det R = +1.
RigidPose estimate_rigid_transform(const KeypointSet& correspondences);

struct RansacOptions {
  double inlier_threshold = 0.5;
  int max_iterations = 1000;
  int sample_size = 4;
  std::uint64_t seed = 1;
};

struct RegistrationReport {
  RigidPose pose;
  std::vector<int> inliers;
  double sigma = 0.0;  // RMS of inlier residual distances
  double sre = 0.0;
};

RegistrationReport ransac_register(const KeypointSet& correspondences, const RansacOptions& options = {});

// Points closer to the centroid than 1e-12 m are skipped with a warning on
// stderr since the per-point ratio is undefined there.
double scaled_registration_error(const PointList& registered, const PointList& ground_truth);

}  // namespace lar
