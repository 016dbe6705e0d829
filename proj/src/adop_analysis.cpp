#include "lar/adop_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "lar/ambiguity.hpp"
#include "lar/errors.hpp"

namespace lar {

MatrixXd lidar_normal_matrix(const PointList& points, const Matrix3d& rotation) {
  const Matrix3d rrt = rotation * rotation.transpose();
  Eigen::LLT<Matrix3d> llt(rrt);
  if (llt.info() != Eigen::Success) throw DegenerateGeometryError("rotation matrix is singular");
  const Matrix3d m = llt.solve(Matrix3d::Identity());

  MatrixXd n = MatrixXd::Zero(12, 12);
  Eigen::Matrix<double, 3, 12> a;
  for (const Vector3d& y : points) {
    a.leftCols<3>().setIdentity();
    for (int c = 0; c < 3; ++c) a.block<3, 3>(0, 3 + 3 * c) = y(c) * Matrix3d::Identity();
    n.noalias() += a.transpose() * m * a;
  }
  return n;
}

Matrix3d reduced_lidar_normal(const PointList& points, const Matrix3d& rotation) {
  if (points.size() < 4) throw DegenerateGeometryError("lidar positioning needs at least four keypoints");
  const MatrixXd n = lidar_normal_matrix(points, rotation);
  const MatrixXd nrr = n.bottomRightCorner(9, 9);
  Eigen::LLT<MatrixXd> llt(nrr);
  if (llt.info() != Eigen::Success) {
    throw DegenerateGeometryError("keypoints do not constrain the rotation (coplanar through the sensor)");
  }
  const MatrixXd nbr = n.topRightCorner(3, 9);
  Matrix3d reduced = n.topLeftCorner(3, 3) - nbr * llt.solve(nbr.transpose());
  reduced = (0.5 * (reduced + reduced.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(reduced);
  if (!(es.eigenvalues()(0) > 1e-10 * static_cast<double>(points.size()))) {
    throw DegenerateGeometryError("reduced lidar normal matrix is singular");
  }
  return reduced;
}

Matrix3d lidar_position_variance(const PointList& points, double sigma, const Matrix3d& rotation) {
  if (!(sigma > 0.0)) throw DegenerateWeightError("lidar sigma must be positive");
  const Matrix3d nbar = reduced_lidar_normal(points, rotation);
  return sigma * sigma * nbar.llt().solve(Matrix3d::Identity());
}

namespace {

MatrixXd dd_geometry(const SatelliteGeometry& geometry) {
  return differencing_matrix(geometry.count(), geometry.pivot).transpose() * geometry.unit_vectors;
}

bool full_rank(const Matrix3d& n) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(n);
  const Vector3d ev = es.eigenvalues();
  return ev(2) > 0.0 && ev(0) > 1e-10 * ev(2);
}

double log_abs_det3(const Matrix3d& m) {
  const double d = m.determinant();
  if (!(d > 0.0)) throw NumericalError("determinant factor is not positive");
  return std::log(d);
}

double relative_gap(double la, double lb) { return std::abs(std::expm1(la - lb)); }

}  // namespace

Matrix3d gnss_position_normal(const GnssConfig& config, const SatelliteGeometry& geometry, WeightMode mode) {
  config.validate();
  geometry.validate();
  const MatrixXd g = dd_geometry(geometry);
  const MatrixXd c = dd_cofactor(geometry, mode);
  const double scale = config.frequencies() / (2.0 * config.sigma_code * config.sigma_code);
  Matrix3d n = scale * g.transpose() * c.llt().solve(g);
  return 0.5 * (n + n.transpose());
}

Matrix3d gnss_position_variance(const GnssConfig& config, const SatelliteGeometry& geometry, WeightMode mode) {
  const Matrix3d n = gnss_position_normal(config, geometry, mode);
  if (geometry.count() < 4 || !full_rank(n)) {
    throw DegenerateGeometryError("GNSS-only position needs rank(G) = 3 (at least four non-coplanar satellites)");
  }
  return n.llt().solve(Matrix3d::Identity());
}

IntegratedVariances integrated_variances(const AnalysisScenario& s) {
  const Matrix3d ng = gnss_position_normal(s.config, s.geometry, s.weights);
  Matrix3d n = ng;
  if (s.lidar) {
    n += reduced_lidar_normal(s.lidar->points, s.lidar->rotation) / (s.lidar->sigma * s.lidar->sigma);
  }
  if (!full_rank(n)) {
    throw RankDeficiencyError("position is not estimable: GNSS geometry is rank deficient and there is no lidar");
  }
  IntegratedVariances out;
  out.Qbb = n.llt().solve(Matrix3d::Identity());
  out.Qbb = (0.5 * (out.Qbb + out.Qbb.transpose())).eval();

  const MatrixXd g = dd_geometry(s.geometry);
  const MatrixXd c = dd_cofactor(s.geometry, s.weights);
  const MatrixXd gqg = g * out.Qbb * g.transpose();
  const int f = s.config.frequencies();
  const int k = s.geometry.count() - 1;
  const double sf2 = s.config.sigma_phase * s.config.sigma_phase;
  out.Qaa = MatrixXd::Zero(f * k, f * k);
  for (int i = 0; i < f; ++i) {
    const double li = s.config.wavelengths[i];
    for (int j = 0; j < f; ++j) {
      const double lj = s.config.wavelengths[j];
      out.Qaa.block(i * k, j * k, k, k) = gqg / (li * lj);
    }
    out.Qaa.block(i * k, i * k, k, k) += 2.0 * sf2 / (li * li) * c;
  }
  out.Qaa = (0.5 * (out.Qaa + out.Qaa.transpose())).eval();
  return out;
}

double log_determinant(const MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw ArgumentError("log-determinant needs a square matrix");
  Eigen::LLT<MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) throw ArgumentError("matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double adop(const MatrixXd& Q) {
  return std::exp(log_determinant(Q) / (2.0 * static_cast<double>(Q.rows())));
}

double adop(const MatrixXd& Q, int frequencies, int satellites) {
  if (Q.rows() != frequencies * (satellites - 1)) {
    throw ArgumentError("ambiguity covariance must be f(m-1) square");
  }
  return adop(Q);
}

double adop_gnss_closed_form(const GnssConfig& config, const VectorXd& weights) {
  config.validate();
  const int m = static_cast<int>(weights.size());
  if (m < 2) throw ArgumentError("ADOP needs at least two satellites");
  const double k = static_cast<double>(config.frequencies() * (m - 1));
  const double eps = config.variance_ratio();
  return std::sqrt(2.0) * weight_factor(weights) * (config.sigma_phase / config.mean_wavelength()) *
         std::pow(1.0 + 1.0 / eps, 3.0 / (2.0 * k));
}

double adop_gnss_closed_form(const GnssConfig& config, const SatelliteGeometry& geometry, WeightMode mode) {
  return adop_gnss_closed_form(config, elevation_weights(geometry, mode));
}

double adop_gnss_closed_form(const GnssConfig& config, int satellites) {
  return adop_gnss_closed_form(config, VectorXd::Ones(satellites));
}

Vector3d generalized_eigenvalues(const Matrix3d& Q_lidar, const Matrix3d& Q_integrated) {
  if (Q_lidar.llt().info() != Eigen::Success || Q_integrated.llt().info() != Eigen::Success) {
    throw ArgumentError("generalized eigenvalues need two positive definite matrices");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix3d> es(Q_lidar, Q_integrated);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed");
  return es.eigenvalues();
}

AdopRatio adop_ratio(const AnalysisScenario& s) {
  if (!s.lidar) throw ArgumentError("ADOP-ratio needs a lidar scenario");
  const Matrix3d ql = lidar_position_variance(s.lidar->points, s.lidar->sigma, s.lidar->rotation);
  const Matrix3d q = integrated_variances(s).Qbb;
  const double c = 1.0 / (1.0 + s.config.variance_ratio());
  const double inv_2k = 1.0 / (2.0 * s.ambiguity_count());

  AdopRatio r;
  r.gamma = generalized_eigenvalues(ql, q);
  const Matrix3d nl = ql.llt().solve(Matrix3d::Identity());
  r.exact = std::exp(log_abs_det3(Matrix3d::Identity() - c * nl * q) * inv_2k);
  double log_prod = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double term = std::log1p(-c / r.gamma(i));
    log_prod += term;
    r.approx[i] = std::exp(3.0 * term * inv_2k);
  }
  r.eigen_form = std::exp(log_prod * inv_2k);
  return r;
}

AdopReport analyze(const AnalysisScenario& s) {
  AdopReport report;
  report.adop_g = adop_gnss_closed_form(s.config, s.geometry, s.weights);
  if (s.lidar) {
    const IntegratedVariances iv = integrated_variances(s);
    report.adop_gl = adop(iv.Qaa);
    report.ratio = adop_ratio(s);
    report.success_rate = bootstrapped_success_rate(iv.Qaa);
  } else if (s.geometry.count() >= 4) {
    try {
      report.success_rate = bootstrapped_success_rate(integrated_variances(s).Qaa);
    } catch (const RankDeficiencyError&) {
      report.success_rate = 0.0;
    }
  }
  return report;
}

IdentityCheck appendix_identity_check(const AnalysisScenario& s) {
  const IntegratedVariances iv = integrated_variances(s);
  const int f = s.config.frequencies();
  const int m = s.geometry.count();
  const double k = static_cast<double>(f * (m - 1));
  const double eps = s.config.variance_ratio();

  IdentityCheck out;
  out.log_direct = log_determinant(iv.Qaa);

  double log_lambda = 0.0;
  for (double l : s.config.wavelengths) log_lambda += std::log(l);
  const Matrix3d ng = gnss_position_normal(s.config, s.geometry, s.weights);
  out.log_factorized = k * std::log(2.0 * s.config.sigma_phase * s.config.sigma_phase) -
                       2.0 * (m - 1) * log_lambda +
                       f * log_determinant(dd_cofactor(s.geometry, s.weights)) +
                       log_abs_det3(Matrix3d::Identity() + ng * iv.Qbb / eps);

  double adop_value = adop_gnss_closed_form(s.config, s.geometry, s.weights);
  if (s.lidar) adop_value *= adop_ratio(s).exact;
  out.log_adop = 2.0 * k * std::log(adop_value);

  out.max_discrepancy = std::max({relative_gap(out.log_direct, out.log_factorized),
                                  relative_gap(out.log_direct, out.log_adop),
                                  relative_gap(out.log_factorized, out.log_adop)});
  return out;
}

}  // namespace lar
