#pragma once

// Grid evaluations behind the adop-scan, ratio-curve and success-grid
// commands.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "lar/gnss_model.hpp"
#include "lar/types.hpp"

namespace lar {

class Config;

struct SweepSettings {
  std::vector<int> frequencies{1};
  std::vector<double> sigma_p{0.2};
  double sigma_phi = 0.002;
  bool normalized = true;
  double phase_to_wavelength = 0.01;
  WeightMode weights = WeightMode::Equal;
  // Explicit skyplot in inclusion order; random above `mask_deg` if empty.
  std::vector<double> elevations_deg;
  std::vector<double> azimuths_deg;
  double mask_deg = 40.0;
  double min_separation_deg = 15.0;

  bool lidar = true;
  int keypoints = 44;
  double sigma_L = 0.15;
  double annulus_inner = 5.0;
  double annulus_outer = 50.0;
  double height_spread = 2.0;

  int m_min = 2;
  int m_max = 15;
  double sigma_L_min = 0.05;
  double sigma_L_max = 0.84;
  double sigma_L_step = 0.01;
  int trials = 1;
  std::uint64_t seed = 1;

  static SweepSettings from_config(const Config& config);
  void validate() const;
  GnssConfig gnss(int f, double sigma_code) const;
  // First m satellites of the sweep constellation.
  SatelliteGeometry geometry(int m) const;
  std::vector<double> sigma_L_grid() const;
};

// Keypoints in a horizontal annulus around the sensor; resampled until the
// layout constrains position and rotation.
PointList random_keypoint_layout(int n, double inner, double outer, double height, std::mt19937_64& rng);

struct SweepRow {
  int m = 0;
  int f = 0;
  int n = 0;
  double sigma_p = 0.0;
  double sigma_phi = 0.0;
  double sigma_L = 0.0;
  double adop_g = 0.0;
  double adop_gl = 0.0;  // nan without lidar
  double ratio = 0.0;
  double gamma[3] = {0.0, 0.0, 0.0};
  double ps = 0.0;
};

struct RatioRow {
  int m = 0;
  int f = 0;
  int n = 0;
  double sigma_p = 0.0;
  double sigma_phi = 0.0;
  double sigma_L = 0.0;
  double ratio = 0.0;
  double approx[3] = {0.0, 0.0, 0.0};
};

// GNSS-only (n = 0) and lidar-aided rows for every (f, sigma_p, m).
std::vector<SweepRow> adop_scan(const SweepSettings& settings);
std::vector<RatioRow> ratio_curve(const SweepSettings& settings);
// Lidar-aided rows over (f, sigma_p, m, sigma_L), averaged over trials with
// one seed per cell.
std::vector<SweepRow> success_grid(const SweepSettings& settings);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows);

}  // namespace lar
