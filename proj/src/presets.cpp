#include "lar/presets.hpp"

#include <map>
#include <sstream>

#include "lar/errors.hpp"
#include "lar/io.hpp"

namespace lar {

namespace {

// Read off a high-elevation skyplot; the last three extend it to 15
// satellites for the equal-weight scans.
const std::vector<double> kElevations{80.6, 67.7, 61.3, 59.1, 57.9, 55.4, 50.9, 48.4,
                                      47.4, 45.5, 43.4, 40.4, 37.6, 33.1, 30.4};
const std::vector<double> kAzimuths{200.9, 32.9,  281.8, 179.0, 315.3, 95.1,  202.3, 31.8,
                                    243.0, 300.5, 342.3, 107.8, 140.2, 263.7, 12.5};

std::string join(const std::vector<double>& v, std::size_t count) {
  std::ostringstream out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out << ", ";
    out << format_double(v[i]);
  }
  return out.str();
}

std::string skyplot(std::size_t count) {
  return "elevations_deg = " + join(kElevations, count) + "\nazimuths_deg = " + join(kAzimuths, count) + "\n";
}

std::string equal_weight_scan(const std::string& sigma_p, const std::string& sigma_L) {
  return "[gnss]\n"
         "frequencies = 1, 2\n"
         "sigma_p = " + sigma_p + "\n"
         "sigma_phi = 0.002\n"
         "wavelengths = normalized\n"
         "phase_to_wavelength = 0.01\n"
         "weights = equal\n" +
         skyplot(15) +
         "[lidar]\n"
         "keypoints = 44\n"
         "sigma_L = " + sigma_L + "\n"
         "[sweep]\n"
         "m_min = 2\n"
         "m_max = 15\n"
         "trials = 1\n"
         "[run]\n"
         "seed = 1\n";
}

std::string high_elevation_grid(const std::string& frequencies, const std::string& keypoints) {
  return "[gnss]\n"
         "frequencies = " + frequencies + "\n"
         "sigma_p = 0.2\n"
         "sigma_phi = 0.002\n"
         "wavelengths = normalized\n"
         "phase_to_wavelength = 0.01\n"
         "weights = elevation\n" +
         skyplot(12) +
         "[lidar]\n"
         "keypoints = " + keypoints + "\n"
         "sigma_L = 0.15\n"
         "[sweep]\n"
         "m_min = 2\n"
         "m_max = 12\n"
         "sigma_L_min = 0.05\n"
         "sigma_L_max = 0.84\n"
         "sigma_L_step = 0.01\n"
         "trials = 100\n"
         "[run]\n"
         "seed = 1\n";
}

std::string field_run(bool lidar) {
  std::string text =
      "[gnss]\n"
      "frequencies = 1\n"
      "sigma_p = 0.2\n"
      "sigma_phi = 0.002\n"
      "wavelengths = physical\n"
      "weights = elevation\n"
      "satellites = " + std::string(lidar ? "6" : "5") + "\n"
      "mask_deg = 40\n"
      "min_separation_deg = 15\n";
  if (lidar) {
    text +=
        "[lidar]\n"
        "enabled = true\n"
        "keypoints = 44\n"
        "sigma_L = 0.15\n"
        "outlier_fraction = 0.3\n"
        "ransac_threshold = 0.5\n"
        "ransac_iterations = 1000\n";
  } else {
    text +=
        "[lidar]\n"
        "enabled = false\n";
  }
  text +=
      "[run]\n"
      "epochs = 1000\n"
      "seed = 1\n"
      "threshold = 0.999\n"
      "full_ar = " + std::string(lidar ? "false" : "true") + "\n";
  return text;
}

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> table{
      {"fig2a", equal_weight_scan("0.2", "0.15")},
      {"fig2b", equal_weight_scan("0.2", "0.84")},
      {"fig4a", equal_weight_scan("0.2", "0.15")},
      {"fig4b", equal_weight_scan("0.6", "0.84")},
      {"fig6a", high_elevation_grid("1", "4")},
      {"fig6b", high_elevation_grid("2", "4")},
      {"fig6c", high_elevation_grid("1", "44")},
      {"l1_lidar", field_run(true)},
      {"l1_only_far", field_run(false)},
  };
  return table;
}

}  // namespace

const std::vector<double>& reference_elevations_deg() { return kElevations; }
const std::vector<double>& reference_azimuths_deg() { return kAzimuths; }

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : presets()) names.push_back(name);
  return names;
}

const std::string& preset_text(const std::string& name) {
  const auto& table = presets();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string known;
    for (const auto& [n, t] : table) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

Config load_preset(const std::string& name) { return Config::parse_string(preset_text(name), "preset:" + name); }

}  // namespace lar
