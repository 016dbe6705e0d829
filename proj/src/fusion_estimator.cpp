#include "lar/fusion_estimator.hpp"

#include <cmath>

#include "lar/errors.hpp"

namespace lar {

int EpochData::ambiguity_count() const {
  if (!gnss) return 0;
  return gnss->config.frequencies() * (gnss->geometry.count() - 1);
}

void EpochData::validate() const {
  if (!gnss && !lidar) throw ArgumentError("epoch has neither GNSS nor lidar observations");
  if (gnss) {
    gnss->config.validate();
    gnss->geometry.validate();
    const int k = ambiguity_count();
    if (gnss->observations.code.size() != k || gnss->observations.phase.size() != k) {
      throw ArgumentError("DD observation vectors must have length f(m-1) = " + std::to_string(k));
    }
    if (!gnss->observations.stacked().allFinite()) {
      throw ArgumentError("DD observations contain non-finite values");
    }
  }
  if (lidar) lidar->validate(1);
}

Matrix3d FloatSolution::rotation() const {
  if (!has_rotation()) return Matrix3d::Identity();
  return RigidPose::rotation_from_params(x.segment(ambiguity_count + 3, 9));
}

MatrixXd FloatSolution::Qgg() const {
  const int g = static_cast<int>(x.size()) - ambiguity_count;
  return Q.bottomRightCorner(g, g);
}

MatrixXd FloatSolution::Qga() const {
  const int g = static_cast<int>(x.size()) - ambiguity_count;
  return Q.bottomLeftCorner(g, ambiguity_count);
}

MixedModel assemble_mixed_model(const EpochData& epoch, const VectorXd& x, const VectorXd& corrections) {
  epoch.validate();
  const int k = epoch.ambiguity_count();
  const int u = epoch.unknown_count();
  if (x.size() != u) {
    throw ArgumentError("unknown vector has length " + std::to_string(x.size()) + ", expected " +
                        std::to_string(u));
  }
  const int nl = epoch.lidar ? 3 * epoch.lidar->count() : 0;
  const int ng = 2 * k;
  const int rows = nl + ng;
  const Vector3d b = x.segment<3>(k);
  if (corrections.size() != 0 && corrections.size() != rows) {
    throw ArgumentError("observation corrections have length " + std::to_string(corrections.size()) +
                        ", expected " + std::to_string(rows));
  }

  MixedModel model;
  model.A = MatrixXd::Zero(rows, u);
  model.B_transpose = MatrixXd::Zero(rows, rows);
  model.W = MatrixXd::Zero(rows, rows);
  model.M = MatrixXd::Zero(rows, rows);
  model.w.resize(rows);

  if (epoch.lidar) {
    RigidPose pose;
    pose.translation = b;
    pose.rotation = RigidPose::rotation_from_params(x.segment(k + 3, 9));
    const LidarJacobians lj = lidar_jacobians(*epoch.lidar, pose);
    model.A.block(0, k, nl, 12) = lj.A;
    if (corrections.size() != 0) {
      for (int j = 0; j < nl / 3; ++j) {
        const Vector3d y = epoch.lidar->rover[j] + corrections.segment<3>(3 * j);
        for (int c = 0; c < 3; ++c) model.A.block<3, 3>(3 * j, k + 3 + 3 * c) = y(c) * Matrix3d::Identity();
      }
    }
    model.B_transpose.topLeftCorner(nl, nl) = lj.B_transpose;
    model.W.topLeftCorner(nl, nl) = lidar_weight_matrix(*epoch.lidar);
    model.w.head(nl) = lj.misclosure;

    const double s2 = epoch.lidar->sigma * epoch.lidar->sigma;
    const Matrix3d rrt = pose.rotation * pose.rotation.transpose();
    Eigen::LLT<Matrix3d> llt(rrt);
    if (llt.info() != Eigen::Success) throw RankDeficiencyError("rotation estimate is singular");
    const Matrix3d block = llt.solve(Matrix3d::Identity()) / s2;
    for (int j = 0; j < nl / 3; ++j) model.M.block<3, 3>(3 * j, 3 * j) = block;
  }

  if (epoch.gnss) {
    const GnssEpoch& g = *epoch.gnss;
    const GnssDesign design = gnss_design_matrices(g.config, g.geometry);
    const DdWeights weights = dd_weight_matrices(g.config, g.geometry, g.weights);
    model.A.block(nl, 0, ng, k) = design.ambiguity_map;
    model.A.block(nl, k, ng, 3) = design.position_map.leftCols(3);
    model.B_transpose.bottomRightCorner(ng, ng) = -MatrixXd::Identity(ng, ng);
    model.W.block(nl, nl, k, k) = weights.code;
    model.W.block(nl + k, nl + k, k, k) = weights.phase;
    model.M.block(nl, nl, ng, ng) = model.W.block(nl, nl, ng, ng);

    const VectorXd predicted = design.ambiguity_map * x.head(k) +
                               design.position_map.leftCols(3) * (b - g.observations.approx_position);
    model.w.tail(ng) = predicted - g.observations.stacked();
  }
  return model;
}

namespace {

// Solves the normal equations through a Jacobi-scaled Cholesky factor.
MatrixXd guarded_inverse(const MatrixXd& n, double rcond_floor) {
  const int u = static_cast<int>(n.rows());
  VectorXd s(u);
  for (int i = 0; i < u; ++i) {
    if (!(n(i, i) > 0.0)) {
      throw RankDeficiencyError("normal matrix has a non-positive diagonal entry at unknown " +
                                std::to_string(i));
    }
    s(i) = 1.0 / std::sqrt(n(i, i));
  }
  const MatrixXd scaled = s.asDiagonal() * n * s.asDiagonal();
  Eigen::LLT<MatrixXd> llt(scaled);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= rcond_floor)) {
    throw RankDeficiencyError("normal matrix is rank deficient (too few satellites or keypoints)");
  }
  MatrixXd inv = s.asDiagonal() * llt.solve(MatrixXd::Identity(u, u)) * s.asDiagonal();
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

FloatSolution wls_iterate(const ModelBuilder& builder, const VectorXd& x0, int ambiguity_count,
                          const WlsOptions& options) {
  if (options.max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  FloatSolution sol;
  sol.x = x0;
  sol.ambiguity_count = ambiguity_count;
  VectorXd e;

  auto objective_at = [&builder](const VectorXd& x) {
    const MixedModel m = builder(x, VectorXd());
    return m.w.dot(m.M * m.w);
  };

  for (int it = 0; it < options.max_iterations; ++it) {
    const MixedModel model = builder(sol.x, e);
    const MatrixXd atm = model.A.transpose() * model.M;
    const MatrixXd q = guarded_inverse(atm * model.A, options.rcond_floor);
    VectorXd dx = -q * (atm * model.w);
    // smallest e^T W e compatible with the current unknowns
    const double current = model.w.dot(model.M * model.w);
    sol.objective.push_back(current);
    sol.iterations = it + 1;

    // halve the step until the objective does not grow
    bool descended = false;
    for (int h = 0; h < options.max_halvings; ++h, dx *= 0.5) {
      if (objective_at(sol.x + dx) <= current * (1.0 + 1e-10) + 1e-12) {
        descended = true;
        break;
      }
    }
    if (!descended) break;

    // e = -W^-1 B M (w + A dx)
    const VectorXd lambda = model.M * (model.w + model.A * dx);
    e = -model.W.ldlt().solve(model.B_transpose.transpose() * lambda);
    sol.x += dx;

    const double da = ambiguity_count > 0 ? dx.head(ambiguity_count).cwiseAbs().maxCoeff() : 0.0;
    const double dg = dx.tail(dx.size() - ambiguity_count).cwiseAbs().maxCoeff();
    if (da < options.ambiguity_tolerance && dg < options.position_tolerance) {
      sol.converged = true;
      break;
    }
  }
  // Covariance at the final iterate.
  const MixedModel final_model = builder(sol.x, e);
  sol.objective.push_back(final_model.w.dot(final_model.M * final_model.w));
  sol.Q = guarded_inverse(final_model.A.transpose() * final_model.M * final_model.A,
                          options.rcond_floor);
  return sol;
}

VectorXd initial_unknowns(const EpochData& epoch) {
  epoch.validate();
  const int k = epoch.ambiguity_count();
  VectorXd x = VectorXd::Zero(epoch.unknown_count());

  Vector3d b0 = Vector3d::Zero();
  if (epoch.lidar) {
    const RigidPose pose = estimate_rigid_transform(*epoch.lidar);
    b0 = pose.translation;
    x.segment(k + 3, 9) = pose.rotation_params();
  } else if (epoch.gnss) {
    const GnssEpoch& g = *epoch.gnss;
    b0 = g.observations.approx_position;
    const MatrixXd gm = differencing_matrix(g.geometry.count(), g.geometry.pivot).transpose() *
                        g.geometry.unit_vectors;
    const MatrixXd wp = dd_weight_matrices(g.config, g.geometry, g.weights).code;
    const int m1 = static_cast<int>(gm.rows());
    Matrix3d n = Matrix3d::Zero();
    Vector3d rhs = Vector3d::Zero();
    for (int t = 0; t < g.config.frequencies(); ++t) {
      const MatrixXd wt = wp.block(t * m1, t * m1, m1, m1);
      n += gm.transpose() * wt * gm;
      rhs += gm.transpose() * wt * g.observations.code.segment(t * m1, m1);
    }
    Eigen::FullPivLU<Matrix3d> lu(n);
    if (lu.rank() == 3) b0 += lu.solve(rhs);
  }
  x.segment<3>(k) = b0;

  if (epoch.gnss) {
    const GnssEpoch& g = *epoch.gnss;
    const MatrixXd gm = differencing_matrix(g.geometry.count(), g.geometry.pivot).transpose() *
                        g.geometry.unit_vectors;
    const VectorXd range = gm * (b0 - g.observations.approx_position);
    const int m1 = static_cast<int>(gm.rows());
    for (int t = 0; t < g.config.frequencies(); ++t) {
      x.segment(t * m1, m1) =
          (g.observations.phase.segment(t * m1, m1) - range) / g.config.wavelengths[t];
    }
  }
  return x;
}

FloatSolution solve_float(const EpochData& epoch, const WlsOptions& options) {
  const VectorXd x0 = initial_unknowns(epoch);
  return wls_iterate([&epoch](const VectorXd& x, const VectorXd& e) { return assemble_mixed_model(epoch, x, e); }, x0,
                     epoch.ambiguity_count(), options);
}

PositionEstimate float_position_only(const EpochData& epoch, const WlsOptions& options) {
  const FloatSolution sol = solve_float(epoch, options);
  return {sol.position(), sol.Qbb()};
}

}  // namespace lar
