#include "lar/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lar/adop_analysis.hpp"
#include "lar/errors.hpp"

namespace lar {

using json = nlohmann::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "gnss.frequencies", "gnss.sigma_p", "gnss.sigma_phi", "gnss.wavelengths",
      "gnss.phase_to_wavelength", "gnss.weights", "gnss.elevations_deg", "gnss.azimuths_deg",
      "gnss.satellites", "gnss.mask_deg", "gnss.min_separation_deg",
      "lidar.enabled", "lidar.keypoints", "lidar.sigma_L", "lidar.annulus_inner", "lidar.annulus_outer",
      "lidar.height_spread", "lidar.outlier_fraction", "lidar.ransac_threshold", "lidar.ransac_iterations",
      "sweep.m_min", "sweep.m_max", "sweep.sigma_L_min", "sweep.sigma_L_max", "sweep.sigma_L_step",
      "sweep.trials",
      "run.epochs", "run.seed", "run.threads", "run.threshold", "run.full_ar", "run.latitude_deg",
      "run.longitude_deg", "run.height_m", "run.approx_offset", "run.noise_scale"};
  return keys;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"gnss", "lidar", "sweep", "run"};
  return s;
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json int_vec_json(const IntVector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json row_major(const MatrixXd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

json lower_triangle(const MatrixXd& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c <= r; ++c) a.push_back(m(r, c));
  return a;
}

json stats_json(const ErrorStats& s) {
  return {{"epochs", s.count}, {"rmse_horizontal", s.horizontal}, {"rmse_vertical", s.vertical},
          {"rmse_3d", s.three_d}};
}

// Field access with path-qualified diagnostics.
[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ConfigError("bundle field '" + path + "': " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "must be finite");
  return v;
}

VectorXd number_array(const json& j, const std::string& path, int expected = -1) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  if (expected >= 0 && static_cast<int>(j.size()) != expected) {
    schema_error(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  }
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("invalid number '" + t + "'");
  }
  return v;
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!known_sections().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    std::string value = trim(t.substr(eq + 1));
    const auto hash = value.find(" #");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    c.set(section + "." + key, value, where);
  }
  c.check_known_keys();
  return c;
}

Config Config::parse_string(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  return parse(in, source);
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void Config::merge(const Config& other) {
  for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (!known_keys().count(key)) throw ConfigError("--set: unknown key '" + key + "'");
  set(key, trim(assignment.substr(eq + 1)), "--set " + key);
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin) {
  entries_[key] = Entry{value, origin};
}

void Config::check_known_keys() const {
  for (const auto& [k, e] : entries_) {
    if (!known_keys().count(k)) throw ConfigError(e.origin + ": unknown key '" + k + "'");
  }
}

const Config::Entry* Config::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Config::bad_value(const std::string& key, const std::string& what) const {
  const Entry* e = find(key);
  throw ConfigError((e ? e->origin + ": " : std::string()) + key + ": " + what);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    return parse_double(e->value);
  } catch (const ConfigError& err) {
    bad_value(key, err.what());
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  int v = 0;
  const std::string& s = e->value;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    bad_value(key, "invalid integer '" + s + "'");
  }
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::uint64_t v = 0;
  const std::string& s = e->value;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    bad_value(key, "invalid unsigned integer '" + s + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, "expected true or false, got '" + e->value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    try {
      out.push_back(parse_double(item));
    } catch (const ConfigError& err) {
      bad_value(key, err.what());
    }
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(e->value)) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      bad_value(key, "invalid integer '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

namespace {

WeightMode weight_mode(const Config& c) {
  const std::string w = c.get_string("gnss.weights", "elevation");
  if (w == "elevation") return WeightMode::Elevation;
  if (w == "equal") return WeightMode::Equal;
  throw ConfigError("gnss.weights must be 'elevation' or 'equal', got '" + w + "'");
}

bool normalized_wavelengths(const Config& c) {
  const std::string w = c.get_string("gnss.wavelengths", "physical");
  if (w == "physical") return false;
  if (w == "normalized") return true;
  throw ConfigError("gnss.wavelengths must be 'physical' or 'normalized', got '" + w + "'");
}

}  // namespace

ScenarioSpec scenario_from_config(const Config& c) {
  ScenarioSpec s;
  s.constellation.elevations_deg = c.get_doubles("gnss.elevations_deg", {});
  s.constellation.azimuths_deg = c.get_doubles("gnss.azimuths_deg", {});
  s.constellation.count = c.get_int("gnss.satellites", s.constellation.count);
  s.constellation.mask_deg = c.get_double("gnss.mask_deg", s.constellation.mask_deg);
  s.constellation.min_separation_deg = c.get_double("gnss.min_separation_deg", s.constellation.min_separation_deg);
  if (!s.constellation.elevations_deg.empty() && c.has("gnss.satellites")) {
    const int m = s.constellation.count;
    if (m < 2 || m > static_cast<int>(s.constellation.elevations_deg.size()) ||
        s.constellation.azimuths_deg.size() != s.constellation.elevations_deg.size()) {
      throw ConfigError("gnss.satellites must select between 2 and the number of listed satellites");
    }
    s.constellation.elevations_deg.resize(m);
    s.constellation.azimuths_deg.resize(m);
  }

  const auto freqs = c.get_ints("gnss.frequencies", {1});
  const auto sps = c.get_doubles("gnss.sigma_p", {0.2});
  if (freqs.size() != 1 || sps.size() != 1) {
    throw ConfigError("simulation needs a single value for gnss.frequencies and gnss.sigma_p");
  }
  s.frequencies = freqs.front();
  s.sigma_code = sps.front();
  s.sigma_phase = c.get_double("gnss.sigma_phi", s.sigma_phase);
  s.normalized_wavelengths = normalized_wavelengths(c);
  s.phase_to_wavelength = c.get_double("gnss.phase_to_wavelength", s.phase_to_wavelength);
  s.weights = weight_mode(c);

  s.use_lidar = c.get_bool("lidar.enabled", true);
  s.keypoints = c.get_int("lidar.keypoints", s.keypoints);
  s.sigma_lidar = c.get_double("lidar.sigma_L", s.sigma_lidar);
  s.annulus_inner = c.get_double("lidar.annulus_inner", s.annulus_inner);
  s.annulus_outer = c.get_double("lidar.annulus_outer", s.annulus_outer);
  s.height_spread = c.get_double("lidar.height_spread", s.height_spread);
  s.outlier_fraction = c.get_double("lidar.outlier_fraction", s.outlier_fraction);
  s.ransac_threshold = c.get_double("lidar.ransac_threshold", s.ransac_threshold);
  s.ransac_iterations = c.get_int("lidar.ransac_iterations", s.ransac_iterations);
  if (s.use_lidar && s.keypoints == 0) s.use_lidar = false;

  s.epochs = c.get_int("run.epochs", s.epochs);
  s.seed = c.get_u64("run.seed", s.seed);
  s.threads = c.get_int("run.threads", s.threads);
  s.threshold = c.get_double("run.threshold", s.threshold);
  s.full_resolution = c.get_bool("run.full_ar", s.full_resolution);
  s.latitude_deg = c.get_double("run.latitude_deg", s.latitude_deg);
  s.longitude_deg = c.get_double("run.longitude_deg", s.longitude_deg);
  s.height_m = c.get_double("run.height_m", s.height_m);
  s.approx_offset = c.get_double("run.approx_offset", s.approx_offset);
  s.noise_scale = c.get_double("run.noise_scale", s.noise_scale);
  try {
    s.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

KeypointSet read_keypoints_csv(std::istream& in, double sigma) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x_l,y_l,z_l,x_e,y_e,z_e") {
    throw ConfigError("keypoint CSV header must be exactly 'x_l,y_l,z_l,x_e,y_e,z_e'");
  }
  KeypointSet set;
  set.sigma = sigma;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_list(line);
    if (fields.size() != 6) {
      throw ConfigError("keypoint CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    double v[6];
    for (int i = 0; i < 6; ++i) {
      try {
        v[i] = parse_double(fields[i]);
      } catch (const ConfigError& e) {
        throw ConfigError("keypoint CSV line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    set.rover.emplace_back(v[0], v[1], v[2]);
    set.reference.emplace_back(v[3], v[4], v[5]);
  }
  return set;
}

KeypointSet read_keypoints_csv(const std::string& path, double sigma) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open keypoint CSV '" + path + "'");
  return read_keypoints_csv(in, sigma);
}

void write_epochs_csv(std::ostream& out, const std::vector<EpochResult>& epochs) {
  out << "epoch,e_err,n_err,u_err,fixed,correct,ps,adop,m,n\n";
  for (const auto& e : epochs) {
    const Vector3d err = e.ok ? e.reported_error() : Vector3d::Constant(std::nan(""));
    out << e.epoch << ',' << format_double(err(0)) << ',' << format_double(err(1)) << ','
        << format_double(err(2)) << ',' << (e.accepted ? 1 : 0) << ',' << (e.accepted && e.correct ? 1 : 0)
        << ',' << format_double(e.success_rate) << ',' << format_double(e.adop) << ',' << e.satellites << ','
        << e.keypoints << '\n';
  }
}

std::string run_summary_json(const RunSummary& s, const ScenarioSpec& spec) {
  json j;
  j["epochs"] = s.epochs;
  j["failed_epochs"] = s.failed;
  j["accepted_epochs"] = s.accepted;
  j["empirical_success_rate"] = s.empirical_success_rate;
  j["mean_formal_success_rate"] = s.mean_success_rate;
  j["mean_adop"] = s.mean_adop;
  j["reported"] = stats_json(s.reported);
  j["float"] = stats_json(s.float_solution);
  j["fixed"] = stats_json(s.fixed_solution);
  j["precision_gain_enu"] = vec_json(s.precision_gain);
  j["cdf_2d"] = s.cdf_2d;
  j["cdf_3d"] = s.cdf_3d;
  j["scenario"] = {{"seed", spec.seed},
                   {"frequencies", spec.frequencies},
                   {"sigma_p", spec.sigma_code},
                   {"sigma_phi", spec.sigma_phase},
                   {"lidar", spec.use_lidar},
                   {"keypoints", spec.use_lidar ? spec.keypoints : 0},
                   {"sigma_L", spec.sigma_lidar},
                   {"outlier_fraction", spec.outlier_fraction},
                   {"threshold", spec.threshold},
                   {"full_ar", spec.full_resolution}};
  return j.dump(2) + "\n";
}

std::string registration_json(const RegistrationReport& r) {
  json j;
  j["pose"] = {{"translation", vec_json(r.pose.translation)}, {"rotation", row_major(r.pose.rotation)}};
  j["inliers"] = r.inliers;
  j["sigma_L"] = r.sigma;
  j["sre"] = r.sre;
  return j.dump(2) + "\n";
}

std::string solution_json(const FloatSolution& sol, const AmbiguityOutcome& outcome, const EpochData& epoch) {
  json fl;
  fl["ambiguities"] = vec_json(sol.ambiguities());
  fl["position"] = vec_json(sol.position());
  if (sol.has_rotation()) {
    fl["rotation_params"] = vec_json(sol.x.tail(9));
    fl["rotation"] = row_major(nearest_rotation(sol.rotation()));
  } else {
    fl["rotation"] = nullptr;
  }
  fl["unknowns"] = sol.x.size();
  fl["covariance_lower"] = lower_triangle(sol.Q);
  fl["iterations"] = sol.iterations;
  fl["converged"] = sol.converged;
  fl["objective"] = sol.objective;

  json amb;
  if (epoch.ambiguity_count() > 0) {
    amb["fixed"] = int_vec_json(outcome.fixed);
    amb["success_rate"] = outcome.success_rate;
    amb["accepted"] = outcome.accepted;
    amb["squared_norms"] = outcome.squared_norms;
    amb["adop"] = adop(sol.Qaa());
    if (outcome.rest) {
      amb["fixed_position"] = vec_json(outcome.rest->g.head<3>());
      amb["fixed_position_covariance_lower"] = lower_triangle(outcome.rest->Qgg.topLeftCorner<3, 3>());
    } else {
      amb["fixed_position"] = nullptr;
    }
  }
  json j;
  j["float"] = fl;
  j["ambiguity"] = epoch.ambiguity_count() > 0 ? amb : json(nullptr);
  return j.dump(2) + "\n";
}

std::string bundle_json(const SimulatedEpoch& epoch, const SatelliteGeometry& enu, const ScenarioSpec& spec) {
  json j;
  if (epoch.data.gnss) {
    const GnssEpoch& g = *epoch.data.gnss;
    json sats = json::array();
    for (int s = 0; s < enu.count(); ++s) {
      sats.push_back({{"id", enu.ids.empty() ? "S" + std::to_string(s + 1) : enu.ids[s]},
                      {"elevation_deg", enu.elevations[s] / kDeg},
                      {"azimuth_deg", enu.azimuths[s] / kDeg}});
    }
    j["gnss"] = {{"wavelengths", g.config.wavelengths},
                 {"sigma_p", g.config.sigma_code},
                 {"sigma_phi", g.config.sigma_phase},
                 {"weights", g.weights == WeightMode::Equal ? "equal" : "elevation"},
                 {"satellites", sats},
                 {"pivot", enu.pivot},
                 {"reference_geodetic", {{"latitude_deg", spec.latitude_deg}, {"longitude_deg", spec.longitude_deg}}},
                 {"approx_position", vec_json(g.observations.approx_position)},
                 {"dd_code", vec_json(g.observations.code)},
                 {"dd_phase", vec_json(g.observations.phase)}};
  }
  if (epoch.data.lidar) {
    json kps = json::array();
    for (int k = 0; k < epoch.data.lidar->count(); ++k) {
      const Vector3d& y = epoch.data.lidar->rover[k];
      const Vector3d& c = epoch.data.lidar->reference[k];
      kps.push_back({y(0), y(1), y(2), c(0), c(1), c(2)});
    }
    j["lidar"] = {{"sigma_L", epoch.data.lidar->sigma}, {"keypoints", kps}};
  }
  j["options"] = {{"threshold", spec.threshold}, {"full_ar", spec.full_resolution}};
  j["truth"] = {{"position", vec_json(epoch.true_position)}, {"ambiguities", int_vec_json(epoch.true_ambiguities)}};
  return j.dump(2) + "\n";
}

EpochBundle parse_bundle(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("bundle is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) schema_error("", "top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "gnss" && key != "lidar" && key != "options" && key != "truth") schema_error(key, "unknown section");
  }

  EpochBundle b;
  if (j.contains("gnss")) {
    const json& g = j["gnss"];
    GnssEpoch ge;
    const VectorXd lam = number_array(field(g, "wavelengths", "gnss"), "gnss.wavelengths");
    ge.config.wavelengths.assign(lam.data(), lam.data() + lam.size());
    ge.config.sigma_code = number(field(g, "sigma_p", "gnss"), "gnss.sigma_p");
    ge.config.sigma_phase = number(field(g, "sigma_phi", "gnss"), "gnss.sigma_phi");
    if (g.contains("weights")) {
      const json& w = g["weights"];
      if (w == "equal") ge.weights = WeightMode::Equal;
      else if (w == "elevation") ge.weights = WeightMode::Elevation;
      else schema_error("gnss.weights", "expected 'elevation' or 'equal'");
    }
    const json& sats = field(g, "satellites", "gnss");
    if (!sats.is_array()) schema_error("gnss.satellites", "expected an array");
    std::vector<double> el, az;
    std::vector<std::string> ids;
    for (std::size_t s = 0; s < sats.size(); ++s) {
      const std::string p = "gnss.satellites[" + std::to_string(s) + "]";
      const double e = number(field(sats[s], "elevation_deg", p), p + ".elevation_deg");
      if (!(e > 0.0 && e <= 90.0)) schema_error(p + ".elevation_deg", "must lie in (0, 90]");
      el.push_back(e * kDeg);
      az.push_back(number(field(sats[s], "azimuth_deg", p), p + ".azimuth_deg") * kDeg);
      ids.push_back(sats[s].contains("id") && sats[s]["id"].is_string() ? sats[s]["id"].get<std::string>()
                                                                         : "S" + std::to_string(s + 1));
    }
    if (el.size() < 2) schema_error("gnss.satellites", "need at least two satellites");
    std::optional<int> pivot;
    if (g.contains("pivot")) {
      if (!g["pivot"].is_number_integer()) schema_error("gnss.pivot", "expected an integer");
      pivot = g["pivot"].get<int>();
      if (*pivot < 0 || *pivot >= static_cast<int>(el.size())) schema_error("gnss.pivot", "out of range");
    }
    SatelliteGeometry geo = SatelliteGeometry::from_angles(el, az, pivot);
    geo.ids = ids;
    if (g.contains("reference_geodetic")) {
      const json& r = g["reference_geodetic"];
      const double lat = number(field(r, "latitude_deg", "gnss.reference_geodetic"),
                                "gnss.reference_geodetic.latitude_deg");
      const double lon = number(field(r, "longitude_deg", "gnss.reference_geodetic"),
                                "gnss.reference_geodetic.longitude_deg");
      geo = geo.rotated(enu_rotation(lat * kDeg, lon * kDeg).transpose());
    }
    ge.geometry = geo;
    const int k = static_cast<int>(lam.size()) * (static_cast<int>(el.size()) - 1);
    ge.observations.approx_position = number_array(field(g, "approx_position", "gnss"), "gnss.approx_position", 3);
    ge.observations.code = number_array(field(g, "dd_code", "gnss"), "gnss.dd_code", k);
    ge.observations.phase = number_array(field(g, "dd_phase", "gnss"), "gnss.dd_phase", k);
    try {
      ge.config.validate();
    } catch (const ArgumentError& e) {
      schema_error("gnss", e.what());
    }
    b.data.gnss = std::move(ge);
  }
  if (j.contains("lidar")) {
    const json& l = j["lidar"];
    KeypointSet set;
    set.sigma = number(field(l, "sigma_L", "lidar"), "lidar.sigma_L");
    if (!(set.sigma > 0.0)) schema_error("lidar.sigma_L", "must be positive");
    const json& kps = field(l, "keypoints", "lidar");
    if (!kps.is_array()) schema_error("lidar.keypoints", "expected an array of 6-number rows");
    for (std::size_t k = 0; k < kps.size(); ++k) {
      const VectorXd row = number_array(kps[k], "lidar.keypoints[" + std::to_string(k) + "]", 6);
      set.rover.emplace_back(row(0), row(1), row(2));
      set.reference.emplace_back(row(3), row(4), row(5));
    }
    if (set.count() < 1) schema_error("lidar.keypoints", "empty");
    b.data.lidar = std::move(set);
  }
  if (!b.data.gnss && !b.data.lidar) schema_error("", "need a 'gnss' or 'lidar' section");
  if (j.contains("options")) {
    const json& o = j["options"];
    if (o.contains("threshold")) {
      b.threshold = number(o["threshold"], "options.threshold");
      if (!(b.threshold >= 0.0 && b.threshold <= 1.0)) schema_error("options.threshold", "must lie in [0, 1]");
    }
    if (o.contains("full_ar")) {
      if (!o["full_ar"].is_boolean()) schema_error("options.full_ar", "expected true or false");
      b.full_resolution = o["full_ar"].get<bool>();
    }
  }
  if (j.contains("truth")) {
    const json& t = j["truth"];
    if (t.contains("position")) b.true_position = number_array(t["position"], "truth.position", 3);
    if (t.contains("ambiguities")) {
      const VectorXd a = number_array(t["ambiguities"], "truth.ambiguities");
      b.true_ambiguities = a.array().round().cast<std::int64_t>().matrix();
    }
  }
  return b;
}

EpochBundle read_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bundle '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bundle(ss.str());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace lar
