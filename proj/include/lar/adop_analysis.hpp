#pragma once

// Closed-form variance matrices, ADOP and the ADOP-ratio for single-epoch
// GNSS and lidar-aided GNSS models.

#include <array>
#include <optional>

#include "lar/gnss_model.hpp"
#include "lar/types.hpp"

namespace lar {

struct LidarScenario {
  PointList points;  // keypoint coordinates in the lidar frame
  double sigma = 0.15;
  Matrix3d rotation = Matrix3d::Identity();
};

struct AnalysisScenario {
  GnssConfig config;
  SatelliteGeometry geometry;
  WeightMode weights = WeightMode::Elevation;
  std::optional<LidarScenario> lidar;

  int ambiguity_count() const { return config.frequencies() * (geometry.count() - 1); }
};

// Unit-weight lidar normal matrix A_L^T M_L A_L (12 x 12), M_L = [B_L^T B_L]^-1.
MatrixXd lidar_normal_matrix(const PointList& points, const Matrix3d& rotation = Matrix3d::Identity());

// Position block after eliminating the rotation parameters.
Matrix3d reduced_lidar_normal(const PointList& points, const Matrix3d& rotation = Matrix3d::Identity());

Matrix3d lidar_position_variance(const PointList& points, double sigma,
                                 const Matrix3d& rotation = Matrix3d::Identity());

// (f / (2 sigma_p^2)) G^T (D^T W_G^-1 D)^-1 G; always defined, possibly singular.
Matrix3d gnss_position_normal(const GnssConfig& config, const SatelliteGeometry& geometry,
                              WeightMode mode = WeightMode::Elevation);

// Raises DegenerateGeometryError when rank(G) < 3.
Matrix3d gnss_position_variance(const GnssConfig& config, const SatelliteGeometry& geometry,
                                WeightMode mode = WeightMode::Elevation);

struct IntegratedVariances {
  Matrix3d Qbb;
  MatrixXd Qaa;
};

IntegratedVariances integrated_variances(const AnalysisScenario& scenario);

// |Q|^(1 / (2 dim)), via the Cholesky log-determinant.
double adop(const MatrixXd& Q);
double adop(const MatrixXd& Q, int frequencies, int satellites);
double log_determinant(const MatrixXd& Q);

double adop_gnss_closed_form(const GnssConfig& config, const VectorXd& weights);
double adop_gnss_closed_form(const GnssConfig& config, const SatelliteGeometry& geometry,
                             WeightMode mode = WeightMode::Elevation);
// Equal weights with m satellites.
double adop_gnss_closed_form(const GnssConfig& config, int satellites);

// Roots of |Q_L - gamma Q| = 0, ascending.
Vector3d generalized_eigenvalues(const Matrix3d& Q_lidar, const Matrix3d& Q_integrated);

struct AdopRatio {
  double exact = 1.0;       // determinant form
  double eigen_form = 1.0;  // product over gamma_i
  std::array<double, 3> approx{1.0, 1.0, 1.0};
  Vector3d gamma = Vector3d::Ones();
};

AdopRatio adop_ratio(const AnalysisScenario& scenario);

struct AdopReport {
  double adop_g = 0.0;
  std::optional<double> adop_gl;
  std::optional<AdopRatio> ratio;
  double success_rate = 0.0;  // bootstrapped, of whichever model applies; 0 if undefined
};

AdopReport analyze(const AnalysisScenario& scenario);

struct IdentityCheck {
  double log_direct = 0.0;
  double log_factorized = 0.0;
  double log_adop = 0.0;
  double max_discrepancy = 0.0;  // relative, on the determinants
};

IdentityCheck appendix_identity_check(const AnalysisScenario& scenario);

}  // namespace lar
