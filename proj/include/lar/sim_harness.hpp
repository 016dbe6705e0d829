#pragma once

// Synthetic scenarios and Monte-Carlo positioning runs.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lar/ambiguity.hpp"
#include "lar/fusion_estimator.hpp"
#include "lar/gnss_model.hpp"
#include "lar/lidar_model.hpp"
#include "lar/types.hpp"

namespace lar {

// SplitMix64 step; also used to derive independent per-epoch seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// ECEF -> local East-North-Up rotation.
Matrix3d enu_rotation(double latitude_rad, double longitude_rad);
// WGS84.
Vector3d geodetic_to_ecef(double latitude_rad, double longitude_rad, double height_m);

struct ConstellationSpec {
  // Explicit skyplot; when empty a random constellation of `count` satellites
  // is drawn above the mask.
  std::vector<double> elevations_deg;
  std::vector<double> azimuths_deg;
  int count = 6;
  double mask_deg = 40.0;
  double min_separation_deg = 15.0;
};

SatelliteGeometry generate_constellation(const ConstellationSpec& spec, std::uint64_t seed);

struct ScenarioSpec {
  ConstellationSpec constellation;
  int frequencies = 1;
  bool normalized_wavelengths = false;  // sigma_phi / mean wavelength = phase_to_wavelength
  double phase_to_wavelength = 0.01;
  double sigma_code = 0.2;
  double sigma_phase = 0.002;
  WeightMode weights = WeightMode::Elevation;

  bool use_lidar = true;
  int keypoints = 44;  // correct matches
  double sigma_lidar = 0.15;
  double annulus_inner = 5.0;
  double annulus_outer = 50.0;
  double height_spread = 2.0;       // keypoint heights uniform in +-spread
  double outlier_fraction = 0.0;    // of the full correspondence set
  double ransac_threshold = 0.5;
  int ransac_iterations = 1000;

  int epochs = 1000;
  double latitude_deg = -37.8136;
  double longitude_deg = 144.9631;
  double height_m = 30.0;
  double approx_offset = 5.0;  // a-priori position error bound per axis, meters
  double noise_scale = 1.0;    // 0 gives noise-free GNSS and lidar data

  double threshold = 0.999;
  bool full_resolution = false;
  std::uint64_t seed = 1;
  int threads = 1;

  GnssConfig gnss_config() const;
  void validate() const;
};

struct SimulatedKeypoints {
  KeypointSet set;
  std::vector<bool> outlier;
};

SimulatedKeypoints simulate_keypoints(const ScenarioSpec& spec, const RigidPose& truth, std::uint64_t seed);

struct SimulatedEpoch {
  EpochData data;  // lidar section holds the RANSAC inliers
  Vector3d true_position;
  Matrix3d true_rotation;
  IntVector true_ambiguities;
  std::optional<RegistrationReport> registration;
};

// Everything one epoch needs, generated from the epoch's own substream.
SimulatedEpoch simulate_epoch(const ScenarioSpec& spec, const SatelliteGeometry& enu_geometry, int epoch);

struct EpochResult {
  int epoch = 0;
  bool ok = false;
  std::string error;
  Vector3d float_error = Vector3d::Constant(std::nan(""));  // ENU, meters
  std::optional<Vector3d> fixed_error;
  bool accepted = false;
  bool correct = false;  // fixed integers equal the truth
  double success_rate = std::nan("");
  double adop = std::nan("");
  int satellites = 0;
  int keypoints = 0;
  Vector3d float_std = Vector3d::Constant(std::nan(""));
  std::optional<Vector3d> fixed_std;

  Vector3d reported_error() const { return fixed_error.value_or(float_error); }
};

struct ErrorStats {
  int count = 0;
  double horizontal = std::nan("");
  double vertical = std::nan("");
  double three_d = std::nan("");
};

struct RunSummary {
  int epochs = 0;
  int failed = 0;
  int accepted = 0;
  ErrorStats reported;
  ErrorStats float_solution;
  ErrorStats fixed_solution;
  double empirical_success_rate = 0.0;
  double mean_success_rate = std::nan("");
  double mean_adop = std::nan("");
  Vector3d precision_gain = Vector3d::Constant(std::nan(""));  // mean over accepted epochs
  std::vector<double> cdf_2d;  // sorted reported horizontal errors
  std::vector<double> cdf_3d;
};

// Per-axis sqrt of float over fixed variance in ENU.
Vector3d precision_gain(const Matrix3d& Q_float, const Matrix3d& Q_fixed, const Matrix3d& enu_from_ecef);

RunSummary summarize(const std::vector<EpochResult>& epochs);

struct ExperimentResult {
  SatelliteGeometry geometry;  // ENU
  std::vector<EpochResult> epochs;
  RunSummary summary;
};

// Throws NumericalError only if every epoch failed.
ExperimentResult run_experiment(const ScenarioSpec& spec);

}  // namespace lar
