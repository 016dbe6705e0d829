#include "lar/gnss_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lar/errors.hpp"

namespace lar {

namespace {

int highest_elevation(const std::vector<double>& elevations) {
  return static_cast<int>(std::distance(
      elevations.begin(), std::max_element(elevations.begin(), elevations.end())));
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

double GnssConfig::variance_ratio() const {
  return (sigma_phase * sigma_phase) / (sigma_code * sigma_code);
}

double GnssConfig::mean_wavelength() const {
  double log_sum = 0.0;
  for (double l : wavelengths) log_sum += std::log(l);
  return std::exp(log_sum / static_cast<double>(wavelengths.size()));
}

void GnssConfig::validate() const {
  if (wavelengths.empty()) throw ArgumentError("GNSS config needs at least one frequency");
  for (double l : wavelengths) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ArgumentError("wavelengths must be positive");
  }
  if (!(sigma_code > 0.0) || !(sigma_phase > 0.0)) {
    throw ArgumentError("code and phase standard deviations must be positive");
  }
  if (!(variance_ratio() < 1.0)) {
    throw ArgumentError("phase must be more precise than code (variance ratio in (0, 1))");
  }
}

GnssConfig GnssConfig::gps(int frequencies, double sigma_code, double sigma_phase) {
  static const double physical[] = {kGpsL1Wavelength, kGpsL2Wavelength, kGpsL5Wavelength};
  if (frequencies < 1 || frequencies > 3) {
    throw ArgumentError("GPS preset supports 1 to 3 frequencies");
  }
  GnssConfig c;
  c.wavelengths.assign(physical, physical + frequencies);
  c.sigma_code = sigma_code;
  c.sigma_phase = sigma_phase;
  c.validate();
  return c;
}

GnssConfig GnssConfig::normalized(int frequencies, double sigma_code, double sigma_phase,
                                  double phase_to_wavelength) {
  GnssConfig c = gps(frequencies, sigma_code, sigma_phase);
  if (!(phase_to_wavelength > 0.0)) throw ArgumentError("phase-to-wavelength ratio must be positive");
  const double scale = (sigma_phase / phase_to_wavelength) / c.mean_wavelength();
  for (double& l : c.wavelengths) l *= scale;
  return c;
}

void SatelliteGeometry::validate() const {
  const int m = count();
  if (m < 2) throw ArgumentError("need at least two satellites");
  if (unit_vectors.rows() != m || unit_vectors.cols() != 3 ||
      azimuths.size() != elevations.size()) {
    throw ArgumentError("satellite geometry arrays disagree in size");
  }
  if (!ids.empty() && static_cast<int>(ids.size()) != m) {
    throw ArgumentError("satellite id list disagrees in size");
  }
  if (pivot < 0 || pivot >= m) throw ArgumentError("pivot index out of range");
  for (int s = 0; s < m; ++s) {
    if (std::abs(unit_vectors.row(s).norm() - 1.0) > 1e-12) {
      throw ArgumentError("satellite direction is not a unit vector");
    }
    if (!(elevations[s] >= 0.0) || elevations[s] > M_PI / 2 + 1e-12) {
      throw ArgumentError("elevation outside [0, 90] degrees");
    }
  }
}

SatelliteGeometry SatelliteGeometry::from_angles(const std::vector<double>& elevations_rad,
                                                 const std::vector<double>& azimuths_rad,
                                                 std::optional<int> pivot) {
  if (elevations_rad.size() != azimuths_rad.size()) {
    throw ArgumentError("elevation and azimuth lists differ in length");
  }
  SatelliteGeometry g;
  const int m = static_cast<int>(elevations_rad.size());
  g.elevations = elevations_rad;
  g.azimuths = azimuths_rad;
  g.unit_vectors.resize(m, 3);
  for (int s = 0; s < m; ++s) {
    const double ce = std::cos(elevations_rad[s]);
    // Receiver-to-satellite line of sight is (ce sin az, ce cos az, sin el);
    // the model uses the opposite direction.
    g.unit_vectors.row(s) << -ce * std::sin(azimuths_rad[s]), -ce * std::cos(azimuths_rad[s]),
        -std::sin(elevations_rad[s]);
  }
  g.pivot = m > 0 ? pivot.value_or(highest_elevation(elevations_rad)) : 0;
  g.validate();
  return g;
}

SatelliteGeometry SatelliteGeometry::rotated(const Matrix3d& rotation) const {
  SatelliteGeometry g = *this;
  g.unit_vectors = unit_vectors * rotation.transpose();
  // Re-normalize so the 1e-12 unit-norm invariant survives the rotation.
  g.unit_vectors.rowwise().normalize();
  return g;
}

SatelliteGeometry SatelliteGeometry::first(int m) const {
  if (m < 2 || m > count()) throw ArgumentError("subset size out of range");
  SatelliteGeometry g;
  g.unit_vectors = unit_vectors.topRows(m);
  g.elevations.assign(elevations.begin(), elevations.begin() + m);
  g.azimuths.assign(azimuths.begin(), azimuths.begin() + m);
  if (!ids.empty()) g.ids.assign(ids.begin(), ids.begin() + m);
  g.pivot = highest_elevation(g.elevations);
  return g;
}

SatelliteGeometry apply_elevation_mask(const SatelliteGeometry& geometry, double mask_rad) {
  SatelliteGeometry g;
  std::vector<int> keep;
  for (int s = 0; s < geometry.count(); ++s) {
    if (geometry.elevations[s] >= mask_rad) keep.push_back(s);
  }
  const int m = static_cast<int>(keep.size());
  g.unit_vectors.resize(m, 3);
  for (int i = 0; i < m; ++i) {
    const int s = keep[i];
    g.unit_vectors.row(i) = geometry.unit_vectors.row(s);
    g.elevations.push_back(geometry.elevations[s]);
    g.azimuths.push_back(geometry.azimuths[s]);
    if (!geometry.ids.empty()) g.ids.push_back(geometry.ids[s]);
  }
  g.pivot = m > 0 ? highest_elevation(g.elevations) : 0;
  return g;
}

SatelliteGeometry read_geometry_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "sat_id,elevation_deg,azimuth_deg") {
    throw ConfigError("geometry CSV header must be exactly 'sat_id,elevation_deg,azimuth_deg'");
  }
  std::vector<double> el, az;
  std::vector<std::string> ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string id, e, a;
    if (!std::getline(ss, id, ',') || !std::getline(ss, e, ',') || !std::getline(ss, a)) {
      throw ConfigError("geometry CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      std::size_t pos_e = 0, pos_a = 0;
      const double ev = std::stod(e, &pos_e);
      const double av = std::stod(a, &pos_a);
      if (trim(e.substr(pos_e)) != "" || trim(a.substr(pos_a)) != "") throw std::invalid_argument("");
      if (!(ev > 0.0 && ev <= 90.0)) {
        throw ConfigError("geometry CSV line " + std::to_string(line_no) +
                          ": elevation must be in (0, 90] degrees");
      }
      el.push_back(ev * M_PI / 180.0);
      az.push_back(av * M_PI / 180.0);
      ids.push_back(trim(id));
    } catch (const std::logic_error&) {
      throw ConfigError("geometry CSV line " + std::to_string(line_no) + ": invalid number");
    }
  }
  if (el.size() < 2) throw ConfigError("geometry CSV needs at least two satellites");
  SatelliteGeometry g = SatelliteGeometry::from_angles(el, az);
  g.ids = std::move(ids);
  return g;
}

SatelliteGeometry read_geometry_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open geometry CSV '" + path + "'");
  return read_geometry_csv(in);
}

MatrixXd differencing_matrix(int m, int pivot) {
  if (m < 2) throw ArgumentError("differencing needs at least two satellites");
  if (pivot < 0 || pivot >= m) throw ArgumentError("pivot index out of range");
  MatrixXd d = MatrixXd::Zero(m, m - 1);
  int col = 0;
  for (int s = 0; s < m; ++s) {
    if (s == pivot) continue;
    d(s, col) = 1.0;
    d(pivot, col) = -1.0;
    ++col;
  }
  return d;
}

VectorXd elevation_weights(const SatelliteGeometry& geometry, WeightMode mode) {
  const int m = geometry.count();
  if (mode == WeightMode::Equal) return VectorXd::Ones(m);
  VectorXd w(m);
  for (int s = 0; s < m; ++s) {
    const double sn = std::sin(geometry.elevations[s]);
    w(s) = sn * sn;
    if (!(w(s) > 0.0)) {
      throw DegenerateWeightError("satellite at zero elevation has zero weight");
    }
  }
  return w;
}

MatrixXd elevation_weight_matrix(const SatelliteGeometry& geometry, WeightMode mode) {
  return elevation_weights(geometry, mode).asDiagonal();
}

double weight_factor(const VectorXd& weights) {
  const auto m = weights.size();
  if (m < 2) throw ArgumentError("weight factor needs at least two satellites");
  const double log_ratio = std::log(weights.sum()) - weights.array().log().sum();
  return std::exp(log_ratio / (2.0 * static_cast<double>(m - 1)));
}

MatrixXd dd_cofactor(const SatelliteGeometry& geometry, WeightMode mode) {
  const MatrixXd d = differencing_matrix(geometry.count(), geometry.pivot);
  const VectorXd inv_w = elevation_weights(geometry, mode).cwiseInverse();
  return d.transpose() * inv_w.asDiagonal() * d;
}

DdWeights dd_weight_matrices(const GnssConfig& config, const SatelliteGeometry& geometry,
                             WeightMode mode) {
  config.validate();
  const MatrixXd cof = dd_cofactor(geometry, mode);
  Eigen::LLT<MatrixXd> llt(cof);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("DD cofactor matrix is not positive definite");
  }
  const MatrixXd cof_inv = llt.solve(MatrixXd::Identity(cof.rows(), cof.cols()));
  const int k = static_cast<int>(cof.rows());
  const int f = config.frequencies();
  DdWeights w;
  w.code = MatrixXd::Zero(f * k, f * k);
  w.phase = MatrixXd::Zero(f * k, f * k);
  const double sp2 = config.sigma_code * config.sigma_code;
  const double sf2 = config.sigma_phase * config.sigma_phase;
  for (int t = 0; t < f; ++t) {
    w.code.block(t * k, t * k, k, k) = cof_inv / (2.0 * sp2);
    w.phase.block(t * k, t * k, k, k) = cof_inv / (2.0 * sf2);
  }
  return w;
}

GnssDesign gnss_design_matrices(const GnssConfig& config, const SatelliteGeometry& geometry) {
  config.validate();
  geometry.validate();
  const int m = geometry.count();
  const int k = m - 1;
  const int f = config.frequencies();
  GnssDesign d;
  d.dd_geometry = differencing_matrix(m, geometry.pivot).transpose() * geometry.unit_vectors;
  d.ambiguity_map = MatrixXd::Zero(2 * f * k, f * k);
  d.position_map = MatrixXd::Zero(2 * f * k, 12);
  for (int t = 0; t < f; ++t) {
    d.ambiguity_map.block(f * k + t * k, t * k, k, k) =
        config.wavelengths[t] * MatrixXd::Identity(k, k);
  }
  for (int blk = 0; blk < 2 * f; ++blk) {
    d.position_map.block(blk * k, 0, k, 3) = d.dd_geometry;
  }
  return d;
}

VectorXd DdObservations::stacked() const {
  VectorXd y(code.size() + phase.size());
  y << code, phase;
  return y;
}

DdObservations simulate_dd_observations(const GnssConfig& config, const SatelliteGeometry& geometry,
                                        const Vector3d& true_position_offset,
                                        const IntVector& true_ambiguities, std::uint64_t noise_seed,
                                        WeightMode mode, double noise_scale) {
  config.validate();
  geometry.validate();
  const int m = geometry.count();
  const int k = m - 1;
  const int f = config.frequencies();
  if (true_ambiguities.size() != f * k) {
    throw ArgumentError("true ambiguity vector must have length f(m-1)");
  }
  const MatrixXd d = differencing_matrix(m, geometry.pivot);
  const MatrixXd g = d.transpose() * geometry.unit_vectors;
  const VectorXd w = elevation_weights(geometry, mode);
  const VectorXd range = g * true_position_offset;

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Between-receiver then between-satellite differenced noise.
  auto dd_noise = [&](double sigma) {
    VectorXd single(m);
    for (int s = 0; s < m; ++s) {
      const double sd = sigma / std::sqrt(w(s));
      const double rover = normal(rng) * sd;
      const double base = normal(rng) * sd;
      single(s) = rover - base;
    }
    return VectorXd(d.transpose() * single);
  };

  DdObservations obs;
  obs.code.resize(f * k);
  obs.phase.resize(f * k);
  for (int t = 0; t < f; ++t) {
    const VectorXd code_noise = dd_noise(config.sigma_code) * noise_scale;
    const VectorXd phase_noise = dd_noise(config.sigma_phase) * noise_scale;
    obs.code.segment(t * k, k) = range + code_noise;
    obs.phase.segment(t * k, k) =
        range + config.wavelengths[t] * true_ambiguities.segment(t * k, k).cast<double>() +
        phase_noise;
  }
  return obs;
}

}  // namespace lar
