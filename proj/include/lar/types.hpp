#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace lar {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

using PointList = std::vector<Vector3d>;

}  // namespace lar
