#pragma once

// Mixed-model weighted least squares combining DD GNSS and lidar keypoints.
//
// Unknowns are ordered x = [a, b, r]: f(m-1) float ambiguities (cycles), the
// position b (meters, same frame as the reference keypoints and the satellite
// unit vectors), then the nine entries of vec(R). Sections that are absent
// drop their columns: a GNSS-only epoch has no rotation unknowns and a
// lidar-only epoch has no ambiguities.

#include <functional>
#include <optional>
#include <vector>

#include "lar/gnss_model.hpp"
#include "lar/lidar_model.hpp"
#include "lar/types.hpp"

namespace lar {

struct GnssEpoch {
  GnssConfig config;
  SatelliteGeometry geometry;
  DdObservations observations;
  WeightMode weights = WeightMode::Elevation;
};

struct EpochData {
  std::optional<GnssEpoch> gnss;
  std::optional<KeypointSet> lidar;

  int ambiguity_count() const;
  bool has_rotation() const { return lidar.has_value(); }
  int unknown_count() const { return ambiguity_count() + 3 + (has_rotation() ? 9 : 0); }
  void validate() const;
};

struct MixedModel {
  MatrixXd A;            // rows: lidar (3n), code f(m-1), phase f(m-1)
  MatrixXd B_transpose;  // blkdiag(I (x) R, -I)
  MatrixXd W;            // blkdiag(W_L, W_p, W_phi)
  MatrixXd M;            // [B^T W^-1 B]^-1
  VectorXd w;            // misclosure at the linearization point
};

// `corrections` are the current observation residuals (empty means zero); the
// lidar rotation columns of A are evaluated at the corrected rover points.
MixedModel assemble_mixed_model(const EpochData& epoch, const VectorXd& x,
                                const VectorXd& corrections = {});

struct WlsOptions {
  double position_tolerance = 1e-8;   // meters and rotation entries, infinity norm
  double ambiguity_tolerance = 1e-6;  // cycles
  int max_iterations = 50;
  int max_halvings = 30;
  double rcond_floor = 1e-14;
};

struct FloatSolution {
  VectorXd x;
  MatrixXd Q;
  int ambiguity_count = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective;  // w^T M w at each iterate, final one last

  VectorXd ambiguities() const { return x.head(ambiguity_count); }
  Vector3d position() const { return x.segment<3>(ambiguity_count); }
  bool has_rotation() const { return x.size() == ambiguity_count + 12; }
  Matrix3d rotation() const;
  // g = [b, r]
  VectorXd rest() const { return x.tail(x.size() - ambiguity_count); }

  MatrixXd Qaa() const { return Q.topLeftCorner(ambiguity_count, ambiguity_count); }
  MatrixXd Qgg() const;
  MatrixXd Qga() const;
  Matrix3d Qbb() const { return Q.block<3, 3>(ambiguity_count, ambiguity_count); }
};

// Called with the unknowns and the current observation corrections.
using ModelBuilder = std::function<MixedModel(const VectorXd&, const VectorXd&)>;

// Gauss-Helmert iteration of dx = -(A^T M A)^-1 A^T M w, relinearized at the
// corrected observations after every step and halved while it would raise
// w^T M w. Raises
// RankDeficiencyError if the Jacobi-scaled normal matrix has a reciprocal
// condition number below the floor. `ambiguity_count` only selects which
// entries use the cycle tolerance.
FloatSolution wls_iterate(const ModelBuilder& builder, const VectorXd& x0, int ambiguity_count,
                          const WlsOptions& options = {});

// Starting point: rigid fit on the keypoints (or code-only least squares,
// falling back to the approximate position), then ambiguities from the phase.
VectorXd initial_unknowns(const EpochData& epoch);

FloatSolution solve_float(const EpochData& epoch, const WlsOptions& options = {});

struct PositionEstimate {
  Vector3d position;
  Matrix3d covariance;
};

PositionEstimate float_position_only(const EpochData& epoch, const WlsOptions& options = {});

}  // namespace lar
