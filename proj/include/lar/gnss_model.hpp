#pragma once

// Double-differenced (DD) GNSS observation model for short baselines.
//
// Observations are ordered frequency-major: for f frequencies and m
// satellites, the code vector holds f blocks of (m - 1) between-satellite
// differences, and so does the phase vector. Lengths are in meters,
// ambiguities in cycles.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lar/types.hpp"

namespace lar {

inline constexpr double kGpsL1Wavelength = 0.190293672798;
inline constexpr double kGpsL2Wavelength = 0.244210213425;
inline constexpr double kGpsL5Wavelength = 0.254828048791;

struct GnssConfig {
  std::vector<double> wavelengths;  // meters per cycle, one per frequency
  double sigma_code = 0.2;          // zenith-referenced undifferenced code std, m
  double sigma_phase = 0.002;       // zenith-referenced undifferenced phase std, m

  int frequencies() const { return static_cast<int>(wavelengths.size()); }
  // Phase-to-code variance ratio.
  double variance_ratio() const;
  // Geometric mean of the wavelengths.
  double mean_wavelength() const;
  void validate() const;

  // Physical GPS wavelengths (L1, L2, L5 in that order) for 1 <= f <= 3.
  static GnssConfig gps(int frequencies, double sigma_code, double sigma_phase);

  // Physical GPS wavelength ratios rescaled so that sigma_phase / mean
  // wavelength equals `phase_to_wavelength`. With f = 1 and a ratio of 0.01
  // this is the idealized 0.2 m wavelength used by the closed-form analysis.
  static GnssConfig normalized(int frequencies, double sigma_code, double sigma_phase,
                               double phase_to_wavelength = 0.01);
};

struct SatelliteGeometry {
  // Rows are satellite-to-receiver unit vectors, expressed in the frame of
  // the estimated position.
  MatrixXd unit_vectors;            // m x 3
  std::vector<double> elevations;   // radians, (0, pi/2]
  std::vector<double> azimuths;     // radians
  std::vector<std::string> ids;     // optional labels, empty or size m
  int pivot = 0;

  int count() const { return static_cast<int>(elevations.size()); }
  void validate() const;

  // Unit vectors in the local East-North-Up frame of the receiver. The pivot
  // defaults to the highest-elevation satellite.
  static SatelliteGeometry from_angles(const std::vector<double>& elevations_rad,
                                       const std::vector<double>& azimuths_rad,
                                       std::optional<int> pivot = std::nullopt);

  // Same satellites with unit vectors re-expressed through `rotation`
  // (for example ENU -> ECEF).
  SatelliteGeometry rotated(const Matrix3d& rotation) const;

  // The first `m` satellites; pivot moves to the highest one among them.
  SatelliteGeometry first(int m) const;
};

enum class WeightMode { Elevation, Equal };

// Drops satellites below `mask_rad`. Pivot is re-selected.
SatelliteGeometry apply_elevation_mask(const SatelliteGeometry& geometry, double mask_rad);

// Reads `sat_id,elevation_deg,azimuth_deg`. Receiver at the origin of a local
// ENU frame.
SatelliteGeometry read_geometry_csv(std::istream& in);
SatelliteGeometry read_geometry_csv(const std::string& path);

// m x (m-1); D^T x gives x_s - x_pivot for every s != pivot, in index order.
MatrixXd differencing_matrix(int m, int pivot);

// Undifferenced weights sin^2(elevation), or ones in equal-weights mode.
VectorXd elevation_weights(const SatelliteGeometry& geometry, WeightMode mode = WeightMode::Elevation);
MatrixXd elevation_weight_matrix(const SatelliteGeometry& geometry,
                                 WeightMode mode = WeightMode::Elevation);

// w_o = [(sum w) / (prod w)]^(1 / (2(m-1))).
double weight_factor(const VectorXd& weights);

// D^T W_G^-1 D, the single-frequency DD cofactor matrix.
MatrixXd dd_cofactor(const SatelliteGeometry& geometry, WeightMode mode = WeightMode::Elevation);

struct DdWeights {
  MatrixXd code;   // f(m-1) square, block diagonal per frequency
  MatrixXd phase;  // f(m-1) square
};

DdWeights dd_weight_matrices(const GnssConfig& config, const SatelliteGeometry& geometry,
                             WeightMode mode = WeightMode::Elevation);

struct GnssDesign {
  MatrixXd ambiguity_map;  // 2f(m-1) x f(m-1); zero on code rows, Lambda (x) I on phase rows
  MatrixXd position_map;   // 2f(m-1) x 12; 1_2f (x) G followed by nine zero rotation columns
  MatrixXd dd_geometry;    // G = D^T Gbar, (m-1) x 3
};

GnssDesign gnss_design_matrices(const GnssConfig& config, const SatelliteGeometry& geometry);

struct DdObservations {
  VectorXd code;   // f(m-1), observed minus computed, meters
  VectorXd phase;  // f(m-1), meters
  // Position the observed-minus-computed values were formed at.
  Vector3d approx_position = Vector3d::Zero();

  VectorXd stacked() const;
  int size() const { return static_cast<int>(code.size()); }
};

// Synthesizes one epoch. Noise is drawn per satellite at both receivers with
// variance sigma^2 / w_s, differenced between receivers and then between
// satellites. `noise_scale` = 0 gives exact observations.
DdObservations simulate_dd_observations(const GnssConfig& config, const SatelliteGeometry& geometry,
                                        const Vector3d& true_position_offset,
                                        const IntVector& true_ambiguities, std::uint64_t noise_seed,
                                        WeightMode mode = WeightMode::Elevation,
                                        double noise_scale = 1.0);

}  // namespace lar
