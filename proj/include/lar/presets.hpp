#pragma once

#include <string>
#include <vector>

namespace lar {

class Config;

// High-elevation skyplot used by the figure presets, in inclusion order
// (descending elevation).
const std::vector<double>& reference_elevations_deg();
const std::vector<double>& reference_azimuths_deg();

std::vector<std::string> preset_names();
// Config text of a named preset; ConfigError if unknown.
const std::string& preset_text(const std::string& name);
Config load_preset(const std::string& name);

}  // namespace lar
