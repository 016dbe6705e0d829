#pragma once

// Config files, CSV and JSON emission, epoch bundles.
//
// Config format: flat sections of `key = value` lines.
//
//   # comment
//   [gnss]
//   frequencies = 1, 2
//   sigma_p = 0.2
//
// Keys are addressed as `section.key`. Later sources override earlier ones
// (preset, then --config file, then --set).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lar/ambiguity.hpp"
#include "lar/fusion_estimator.hpp"
#include "lar/lidar_model.hpp"
#include "lar/sim_harness.hpp"

namespace lar {

class Config {
 public:
  static Config parse(std::istream& in, const std::string& source);
  static Config parse_string(const std::string& text, const std::string& source);
  static Config parse_file(const std::string& path);

  void merge(const Config& other);
  // `section.key=value`
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

  // Rejects keys outside the documented set.
  void check_known_keys() const;

 private:
  struct Entry {
    std::string value;
    std::string origin;  // "file:line" or "--set"
  };
  const Entry* find(const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& key, const std::string& what) const;

  std::map<std::string, Entry> entries_;
};

// Shortest round-trip decimal form, '.' separator regardless of locale.
std::string format_double(double v);
double parse_double(const std::string& text);

ScenarioSpec scenario_from_config(const Config& config);

// x_l,y_l,z_l,x_e,y_e,z_e
KeypointSet read_keypoints_csv(std::istream& in, double sigma);
KeypointSet read_keypoints_csv(const std::string& path, double sigma);

void write_epochs_csv(std::ostream& out, const std::vector<EpochResult>& epochs);
std::string run_summary_json(const RunSummary& summary, const ScenarioSpec& spec);
std::string registration_json(const RegistrationReport& report);
std::string solution_json(const FloatSolution& solution, const AmbiguityOutcome& outcome,
                          const EpochData& epoch);

struct EpochBundle {
  EpochData data;
  std::optional<Vector3d> true_position;
  std::optional<IntVector> true_ambiguities;
  double threshold = 0.999;
  bool full_resolution = false;
};

// The geometry of a bundle is stored as angles; with `reference_geodetic`
// present the unit vectors are rotated from ENU into ECEF.
std::string bundle_json(const SimulatedEpoch& epoch, const SatelliteGeometry& enu_geometry,
                        const ScenarioSpec& spec);
EpochBundle parse_bundle(const std::string& text);
EpochBundle read_bundle(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lar
