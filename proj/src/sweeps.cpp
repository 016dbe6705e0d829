#include "lar/sweeps.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "lar/adop_analysis.hpp"
#include "lar/errors.hpp"
#include "lar/io.hpp"
#include "lar/sim_harness.hpp"

namespace lar {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t cell_seed(std::uint64_t seed, int f, std::size_t sp, int m, std::size_t sl) {
  const std::uint64_t key = (static_cast<std::uint64_t>(f) << 48) ^ (static_cast<std::uint64_t>(sp) << 40) ^
                            (static_cast<std::uint64_t>(m) << 24) ^ static_cast<std::uint64_t>(sl);
  return substream_seed(seed, 4, key);
}

struct LidarAverages {
  double adop_gl = 0.0, ratio = 0.0, ps = 0.0;
  double gamma[3] = {0.0, 0.0, 0.0};
};

LidarAverages average_over(const std::vector<PointList>& layouts, AnalysisScenario scenario, double sigma_L) {
  LidarAverages avg;
  for (const auto& pts : layouts) {
    scenario.lidar = LidarScenario{pts, sigma_L, Matrix3d::Identity()};
    const AdopReport r = analyze(scenario);
    avg.adop_gl += *r.adop_gl;
    avg.ratio += r.ratio->exact;
    for (int i = 0; i < 3; ++i) avg.gamma[i] += r.ratio->gamma(i);
    avg.ps += r.success_rate;
  }
  const double t = static_cast<double>(layouts.size());
  avg.adop_gl /= t;
  avg.ratio /= t;
  avg.ps /= t;
  for (double& g : avg.gamma) g /= t;
  return avg;
}

// The GNSS-only float position needs four satellites; below that the closed
// form still evaluates but describes no estimable model.
double gnss_only_adop(const GnssConfig& config, const SatelliteGeometry& geo, WeightMode mode) {
  if (geo.count() < 4) return kNan;
  return adop_gnss_closed_form(config, geo, mode);
}

std::vector<PointList> shared_layouts(const SweepSettings& s) {
  std::vector<PointList> layouts;
  for (int t = 0; t < s.trials; ++t) {
    std::mt19937_64 rng(substream_seed(s.seed, 3, static_cast<std::uint64_t>(t)));
    layouts.push_back(random_keypoint_layout(s.keypoints, s.annulus_inner, s.annulus_outer, s.height_spread, rng));
  }
  return layouts;
}

}  // namespace

SweepSettings SweepSettings::from_config(const Config& c) {
  SweepSettings s;
  s.frequencies = c.get_ints("gnss.frequencies", s.frequencies);
  s.sigma_p = c.get_doubles("gnss.sigma_p", s.sigma_p);
  s.sigma_phi = c.get_double("gnss.sigma_phi", s.sigma_phi);
  const std::string wl = c.get_string("gnss.wavelengths", "normalized");
  if (wl != "normalized" && wl != "physical") {
    throw ConfigError("gnss.wavelengths must be 'physical' or 'normalized', got '" + wl + "'");
  }
  s.normalized = wl == "normalized";
  s.phase_to_wavelength = c.get_double("gnss.phase_to_wavelength", s.phase_to_wavelength);
  const std::string w = c.get_string("gnss.weights", "equal");
  if (w != "equal" && w != "elevation") {
    throw ConfigError("gnss.weights must be 'elevation' or 'equal', got '" + w + "'");
  }
  s.weights = w == "equal" ? WeightMode::Equal : WeightMode::Elevation;
  s.elevations_deg = c.get_doubles("gnss.elevations_deg", {});
  s.azimuths_deg = c.get_doubles("gnss.azimuths_deg", {});
  s.mask_deg = c.get_double("gnss.mask_deg", s.mask_deg);
  s.min_separation_deg = c.get_double("gnss.min_separation_deg", s.min_separation_deg);

  s.lidar = c.get_bool("lidar.enabled", s.lidar);
  s.keypoints = c.get_int("lidar.keypoints", s.keypoints);
  if (s.keypoints == 0) s.lidar = false;
  s.sigma_L = c.get_double("lidar.sigma_L", s.sigma_L);
  s.annulus_inner = c.get_double("lidar.annulus_inner", s.annulus_inner);
  s.annulus_outer = c.get_double("lidar.annulus_outer", s.annulus_outer);
  s.height_spread = c.get_double("lidar.height_spread", s.height_spread);

  s.m_min = c.get_int("sweep.m_min", s.m_min);
  s.m_max = c.get_int("sweep.m_max", s.m_max);
  s.sigma_L_min = c.get_double("sweep.sigma_L_min", s.sigma_L_min);
  s.sigma_L_max = c.get_double("sweep.sigma_L_max", s.sigma_L_max);
  s.sigma_L_step = c.get_double("sweep.sigma_L_step", s.sigma_L_step);
  s.trials = c.get_int("sweep.trials", s.trials);
  s.seed = c.get_u64("run.seed", s.seed);
  s.validate();
  return s;
}

void SweepSettings::validate() const {
  if (frequencies.empty() || sigma_p.empty()) {
    throw ConfigError("sweep needs at least one value for gnss.frequencies and gnss.sigma_p");
  }
  for (int f : frequencies) {
    if (f < 1 || f > 3) throw ConfigError("gnss.frequencies entries must be 1, 2 or 3");
  }
  for (double sp : sigma_p) {
    if (!(sp > sigma_phi)) throw ConfigError("gnss.sigma_p must exceed gnss.sigma_phi");
  }
  if (!(sigma_phi > 0.0)) throw ConfigError("gnss.sigma_phi must be positive");
  if (!(phase_to_wavelength > 0.0)) throw ConfigError("gnss.phase_to_wavelength must be positive");
  if (m_min < 2 || m_max < m_min) throw ConfigError("sweep needs 2 <= m_min <= m_max");
  if (!elevations_deg.empty() && static_cast<int>(elevations_deg.size()) < m_max) {
    throw ConfigError("sweep.m_max exceeds the number of listed satellites");
  }
  if (elevations_deg.size() != azimuths_deg.size()) {
    throw ConfigError("gnss.elevations_deg and gnss.azimuths_deg differ in length");
  }
  if (trials < 1) throw ConfigError("sweep.trials must be at least 1");
  if (lidar) {
    if (keypoints < 4) throw ConfigError("lidar.keypoints must be at least 4 (or 0 to disable lidar)");
    if (!(sigma_L > 0.0)) throw ConfigError("lidar.sigma_L must be positive");
    if (!(annulus_inner >= 0.0 && annulus_outer > annulus_inner)) {
      throw ConfigError("lidar annulus needs 0 <= inner < outer");
    }
  }
  if (!(sigma_L_min > 0.0 && sigma_L_max >= sigma_L_min && sigma_L_step > 0.0)) {
    throw ConfigError("sweep sigma_L range needs 0 < min <= max and a positive step");
  }
}

GnssConfig SweepSettings::gnss(int f, double sigma_code) const {
  return normalized ? GnssConfig::normalized(f, sigma_code, sigma_phi, phase_to_wavelength) : GnssConfig::gps(f, sigma_code, sigma_phi);
}

SatelliteGeometry SweepSettings::geometry(int m) const {
  ConstellationSpec spec;
  spec.elevations_deg = elevations_deg;
  spec.azimuths_deg = azimuths_deg;
  spec.count = m_max;
  spec.mask_deg = mask_deg;
  spec.min_separation_deg = min_separation_deg;
  return generate_constellation(spec, substream_seed(seed, 2, 0)).first(m);
}

std::vector<double> SweepSettings::sigma_L_grid() const {
  std::vector<double> grid;
  const int steps = static_cast<int>(std::floor((sigma_L_max - sigma_L_min) / sigma_L_step + 1e-9));
  for (int i = 0; i <= steps; ++i) {
    // Snap to 12 decimals so printed values are the intended grid values.
    grid.push_back(std::round((sigma_L_min + i * sigma_L_step) * 1e12) / 1e12);
  }
  return grid;
}

PointList random_keypoint_layout(int n, double inner, double outer, double height, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    PointList pts;
    for (int j = 0; j < n; ++j) {
      const double r = std::sqrt(inner * inner + unit(rng) * (outer * outer - inner * inner));
      const double t = 2.0 * M_PI * unit(rng);
      pts.emplace_back(r * std::cos(t), r * std::sin(t), height * (2.0 * unit(rng) - 1.0));
    }
    try {
      reduced_lidar_normal(pts);
      return pts;
    } catch (const DegenerateGeometryError&) {
    }
  }
  throw DegenerateGeometryError("could not draw a non-degenerate keypoint layout");
}

std::vector<SweepRow> adop_scan(const SweepSettings& s) {
  s.validate();
  const std::vector<PointList> layouts = s.lidar ? shared_layouts(s) : std::vector<PointList>{};
  std::vector<SweepRow> rows;
  for (int f : s.frequencies) {
    for (double sp : s.sigma_p) {
      const GnssConfig config = s.gnss(f, sp);
      for (int with_lidar = 0; with_lidar <= (s.lidar ? 1 : 0); ++with_lidar) {
        for (int m = s.m_min; m <= s.m_max; ++m) {
          AnalysisScenario scenario{config, s.geometry(m), s.weights, std::nullopt};
          SweepRow row;
          row.m = m;
          row.f = f;
          row.sigma_p = sp;
          row.sigma_phi = s.sigma_phi;
          row.adop_g = gnss_only_adop(config, scenario.geometry, s.weights);
          if (with_lidar) {
            const LidarAverages avg = average_over(layouts, scenario, s.sigma_L);
            row.n = s.keypoints;
            row.sigma_L = s.sigma_L;
            row.adop_gl = avg.adop_gl;
            row.ratio = avg.ratio;
            for (int i = 0; i < 3; ++i) row.gamma[i] = avg.gamma[i];
            row.ps = avg.ps;
          } else {
            row.n = 0;
            row.sigma_L = kNan;
            row.adop_gl = kNan;
            row.ratio = kNan;
            for (double& g : row.gamma) g = kNan;
            row.ps = analyze(scenario).success_rate;
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

std::vector<RatioRow> ratio_curve(const SweepSettings& s) {
  s.validate();
  if (!s.lidar) throw ConfigError("ratio-curve needs lidar keypoints");
  const std::vector<PointList> layouts = shared_layouts(s);
  std::vector<RatioRow> rows;
  for (int f : s.frequencies) {
    for (double sp : s.sigma_p) {
      const GnssConfig config = s.gnss(f, sp);
      for (int m = s.m_min; m <= s.m_max; ++m) {
        AnalysisScenario scenario{config, s.geometry(m), s.weights, std::nullopt};
        RatioRow row;
        row.m = m;
        row.f = f;
        row.n = s.keypoints;
        row.sigma_p = sp;
        row.sigma_phi = s.sigma_phi;
        row.sigma_L = s.sigma_L;
        for (const auto& pts : layouts) {
          scenario.lidar = LidarScenario{pts, s.sigma_L, Matrix3d::Identity()};
          const AdopRatio r = adop_ratio(scenario);
          row.ratio += r.exact;
          for (int i = 0; i < 3; ++i) row.approx[i] += r.approx[i];
        }
        row.ratio /= layouts.size();
        for (double& a : row.approx) a /= layouts.size();
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<SweepRow> success_grid(const SweepSettings& s) {
  s.validate();
  if (!s.lidar) throw ConfigError("success-grid needs lidar keypoints");
  const std::vector<double> grid = s.sigma_L_grid();
  std::vector<SweepRow> rows;
  for (int f : s.frequencies) {
    for (std::size_t spi = 0; spi < s.sigma_p.size(); ++spi) {
      const double sp = s.sigma_p[spi];
      const GnssConfig config = s.gnss(f, sp);
      for (int m = s.m_min; m <= s.m_max; ++m) {
        const AnalysisScenario scenario{config, s.geometry(m), s.weights, std::nullopt};
        const double adop_g = gnss_only_adop(config, scenario.geometry, s.weights);
        for (std::size_t li = 0; li < grid.size(); ++li) {
          std::mt19937_64 rng(cell_seed(s.seed, f, spi, m, li));
          std::vector<PointList> layouts;
          for (int t = 0; t < s.trials; ++t) {
            layouts.push_back(
                random_keypoint_layout(s.keypoints, s.annulus_inner, s.annulus_outer, s.height_spread, rng));
          }
          const LidarAverages avg = average_over(layouts, scenario, grid[li]);
          SweepRow row;
          row.m = m;
          row.f = f;
          row.n = s.keypoints;
          row.sigma_p = sp;
          row.sigma_phi = s.sigma_phi;
          row.sigma_L = grid[li];
          row.adop_g = adop_g;
          row.adop_gl = avg.adop_gl;
          row.ratio = avg.ratio;
          for (int i = 0; i < 3; ++i) row.gamma[i] = avg.gamma[i];
          row.ps = avg.ps;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "m,f,n,sigma_p,sigma_phi,sigma_L,adop_g,adop_gl,ratio,gamma1,gamma2,gamma3,ps\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.f << ',' << r.n << ',' << format_double(r.sigma_p) << ',' << format_double(r.sigma_phi)
        << ',' << format_double(r.sigma_L) << ',' << format_double(r.adop_g) << ',' << format_double(r.adop_gl)
        << ',' << format_double(r.ratio) << ',' << format_double(r.gamma[0]) << ',' << format_double(r.gamma[1])
        << ',' << format_double(r.gamma[2]) << ',' << format_double(r.ps) << '\n';
  }
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  out << "m,f,n,sigma_p,sigma_phi,sigma_L,ratio,approx_gamma1,approx_gamma2,approx_gamma3\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.f << ',' << r.n << ',' << format_double(r.sigma_p) << ',' << format_double(r.sigma_phi)
        << ',' << format_double(r.sigma_L) << ',' << format_double(r.ratio) << ',' << format_double(r.approx[0])
        << ',' << format_double(r.approx[1]) << ',' << format_double(r.approx[2]) << '\n';
  }
}

}  // namespace lar
