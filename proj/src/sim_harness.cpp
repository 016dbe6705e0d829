#include "lar/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "lar/adop_analysis.hpp"
#include "lar/errors.hpp"

namespace lar {

namespace {

constexpr double kDeg = M_PI / 180.0;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Matrix3d rotation_z(double angle) {
  Matrix3d r;
  const double c = std::cos(angle), s = std::sin(angle);
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

ErrorStats error_stats(const std::vector<Vector3d>& errors) {
  ErrorStats s;
  s.count = static_cast<int>(errors.size());
  if (errors.empty()) return s;
  double h = 0.0, v = 0.0;
  for (const auto& e : errors) {
    h += e(0) * e(0) + e(1) * e(1);
    v += e(2) * e(2);
  }
  const double n = static_cast<double>(errors.size());
  s.horizontal = std::sqrt(h / n);
  s.vertical = std::sqrt(v / n);
  s.three_d = std::sqrt((h + v) / n);
  return s;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

Matrix3d enu_rotation(double lat, double lon) {
  const double sp = std::sin(lat), cp = std::cos(lat);
  const double sl = std::sin(lon), cl = std::cos(lon);
  Matrix3d r;
  r << -sl, cl, 0.0,
       -sp * cl, -sp * sl, cp,
       cp * cl, cp * sl, sp;
  return r;
}

Vector3d geodetic_to_ecef(double lat, double lon, double h) {
  constexpr double a = 6378137.0;
  constexpr double f = 1.0 / 298.257223563;
  constexpr double e2 = f * (2.0 - f);
  const double sp = std::sin(lat);
  const double n = a / std::sqrt(1.0 - e2 * sp * sp);
  return {(n + h) * std::cos(lat) * std::cos(lon), (n + h) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - e2) + h) * sp};
}

SatelliteGeometry generate_constellation(const ConstellationSpec& spec, std::uint64_t seed) {
  if (!spec.elevations_deg.empty() || !spec.azimuths_deg.empty()) {
    if (spec.elevations_deg.size() != spec.azimuths_deg.size()) {
      throw ConfigError("constellation elevation and azimuth lists differ in length");
    }
    std::vector<double> el, az;
    for (std::size_t i = 0; i < spec.elevations_deg.size(); ++i) {
      if (!(spec.elevations_deg[i] > 0.0 && spec.elevations_deg[i] <= 90.0)) {
        throw ConfigError("constellation elevations must lie in (0, 90] degrees");
      }
      el.push_back(spec.elevations_deg[i] * kDeg);
      az.push_back(spec.azimuths_deg[i] * kDeg);
    }
    if (el.size() < 2) throw ConfigError("constellation needs at least two satellites");
    return SatelliteGeometry::from_angles(el, az);
  }

  if (!(spec.mask_deg >= 0.0 && spec.mask_deg <= 85.0)) throw ConfigError("mask angle must be in [0, 85] degrees");
  if (spec.count < 2) throw ConfigError("constellation needs at least two satellites");

  std::mt19937_64 rng(seed);
  const double smin = std::max(std::sin(spec.mask_deg * kDeg), 1e-6);
  const double cos_sep = std::cos(spec.min_separation_deg * kDeg);
  std::vector<double> el, az;
  std::vector<Vector3d> dirs;
  int attempts = 0;
  while (static_cast<int>(el.size()) < spec.count) {
    if (++attempts > 200000) {
      throw ConfigError("cannot place " + std::to_string(spec.count) + " satellites above " +
                        std::to_string(spec.mask_deg) + " deg with the separation constraint");
    }
    // sin(el) uniform gives uniform density on the sky cap.
    const double e = std::asin(uniform(rng, smin, 1.0));
    const double a = uniform(rng, 0.0, 2.0 * M_PI);
    const Vector3d d(std::cos(e) * std::sin(a), std::cos(e) * std::cos(a), std::sin(e));
    bool clear = true;
    for (const auto& other : dirs) {
      if (d.dot(other) > cos_sep) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    el.push_back(e);
    az.push_back(a);
    dirs.push_back(d);
  }
  std::vector<int> order(el.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return el[i] > el[j]; });
  std::vector<double> el_sorted, az_sorted;
  for (int i : order) {
    el_sorted.push_back(el[i]);
    az_sorted.push_back(az[i]);
  }
  return SatelliteGeometry::from_angles(el_sorted, az_sorted);
}

GnssConfig ScenarioSpec::gnss_config() const {
  return normalized_wavelengths ? GnssConfig::normalized(frequencies, sigma_code, sigma_phase, phase_to_wavelength)
                                : GnssConfig::gps(frequencies, sigma_code, sigma_phase);
}

void ScenarioSpec::validate() const {
  if (epochs < 1) throw ConfigError("run.epochs must be at least 1");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw ConfigError("lidar.outlier_fraction must be in [0, 1)");
  }
  if (use_lidar && keypoints < 4) throw ConfigError("lidar.keypoints must be at least 4");
  if (use_lidar && !(sigma_lidar > 0.0)) throw ConfigError("lidar.sigma_L must be positive");
  if (!(annulus_inner >= 0.0 && annulus_outer > annulus_inner)) {
    throw ConfigError("lidar annulus needs 0 <= inner < outer");
  }
  if (threads < 1) throw ConfigError("run.threads must be at least 1");
  if (!(noise_scale >= 0.0)) throw ConfigError("run.noise_scale must be non-negative");
  if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0)) throw ConfigError("run.latitude_deg out of range");
  if (!(phase_to_wavelength > 0.0)) throw ConfigError("gnss.phase_to_wavelength must be positive");
  gnss_config().validate();
}

SimulatedKeypoints simulate_keypoints(const ScenarioSpec& spec, const RigidPose& truth, std::uint64_t seed) {
  if (spec.keypoints < 4) throw ArgumentError("need at least four keypoints");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int outliers =
      static_cast<int>(std::lround(spec.keypoints * spec.outlier_fraction / (1.0 - spec.outlier_fraction)));
  const int total = spec.keypoints + outliers;
  const double per_axis = spec.noise_scale * spec.sigma_lidar / std::sqrt(3.0);
  const double r1 = spec.annulus_inner * spec.annulus_inner;
  const double r2 = spec.annulus_outer * spec.annulus_outer;

  SimulatedKeypoints out;
  out.set.sigma = spec.sigma_lidar;
  for (int j = 0; j < total; ++j) {
    const double r = std::sqrt(uniform(rng, r1, r2));
    const double t = uniform(rng, 0.0, 2.0 * M_PI);
    const Vector3d y(r * std::cos(t), r * std::sin(t), uniform(rng, -spec.height_spread, spec.height_spread));
    Vector3d c = truth.apply(y);
    if (j < spec.keypoints) {
      c += per_axis * Vector3d(normal(rng), normal(rng), normal(rng));
    } else {
      Vector3d dir(normal(rng), normal(rng), normal(rng));
      dir.normalize();
      c += uniform(rng, 2.0, 10.0) * dir;
    }
    out.set.rover.push_back(y);
    out.set.reference.push_back(c);
    out.outlier.push_back(j >= spec.keypoints);
  }
  // Interleave outliers with the good matches.
  std::vector<int> perm(total);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  SimulatedKeypoints shuffled;
  shuffled.set = out.set.subset(perm);
  for (int p : perm) shuffled.outlier.push_back(out.outlier[p]);
  return shuffled;
}

SimulatedEpoch simulate_epoch(const ScenarioSpec& spec, const SatelliteGeometry& enu_geometry, int epoch) {
  std::mt19937_64 rng(substream_seed(spec.seed, 1, static_cast<std::uint64_t>(epoch)));
  const double lat = spec.latitude_deg * kDeg, lon = spec.longitude_deg * kDeg;
  const Matrix3d enu = enu_rotation(lat, lon);
  const GnssConfig config = spec.gnss_config();

  SimulatedEpoch sim;
  sim.true_position = geodetic_to_ecef(lat, lon, spec.height_m);
  sim.true_rotation = enu.transpose() * rotation_z(uniform(rng, 0.0, 2.0 * M_PI));

  const int k = config.frequencies() * (enu_geometry.count() - 1);
  sim.true_ambiguities.resize(k);
  std::uniform_int_distribution<std::int64_t> amb(-100, 100);
  for (int i = 0; i < k; ++i) sim.true_ambiguities(i) = amb(rng);

  const Vector3d approx =
      sim.true_position + Vector3d(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)) *
                              spec.approx_offset;
  GnssEpoch g;
  g.config = config;
  g.geometry = enu_geometry.rotated(enu.transpose());
  g.weights = spec.weights;
  g.observations = simulate_dd_observations(config, g.geometry, sim.true_position - approx,
                                            sim.true_ambiguities, rng(), spec.weights, spec.noise_scale);
  g.observations.approx_position = approx;
  sim.data.gnss = std::move(g);

  if (spec.use_lidar) {
    RigidPose truth;
    truth.translation = sim.true_position;
    truth.rotation = sim.true_rotation;
    const SimulatedKeypoints kp = simulate_keypoints(spec, truth, rng());
    RansacOptions opts;
    opts.inlier_threshold = spec.ransac_threshold;
    opts.max_iterations = spec.ransac_iterations;
    opts.seed = rng();
    RegistrationReport reg = ransac_register(kp.set, opts);
    KeypointSet inliers = kp.set.subset(reg.inliers);
    inliers.sigma = reg.sigma > 0.0 ? reg.sigma : spec.sigma_lidar;
    sim.data.lidar = std::move(inliers);
    sim.registration = std::move(reg);
  }
  return sim;
}

Vector3d precision_gain(const Matrix3d& Q_float, const Matrix3d& Q_fixed, const Matrix3d& enu_from_ecef) {
  const Vector3d vf = (enu_from_ecef * Q_float * enu_from_ecef.transpose()).diagonal();
  const Vector3d vx = (enu_from_ecef * Q_fixed * enu_from_ecef.transpose()).diagonal();
  return (vf.array() / vx.array()).sqrt().matrix();
}

RunSummary summarize(const std::vector<EpochResult>& epochs) {
  RunSummary s;
  s.epochs = static_cast<int>(epochs.size());
  std::vector<Vector3d> reported, floats, fixed;
  double ps_sum = 0.0, adop_sum = 0.0;
  Vector3d gain_sum = Vector3d::Zero();
  int correct = 0;
  for (const auto& e : epochs) {
    if (!e.ok) {
      ++s.failed;
      continue;
    }
    reported.push_back(e.reported_error());
    floats.push_back(e.float_error);
    ps_sum += e.success_rate;
    adop_sum += e.adop;
    if (e.accepted && e.fixed_error) {
      ++s.accepted;
      fixed.push_back(*e.fixed_error);
      if (e.fixed_std) gain_sum += (e.float_std.array() / e.fixed_std->array()).matrix();
      if (e.correct) ++correct;
    }
  }
  s.reported = error_stats(reported);
  s.float_solution = error_stats(floats);
  s.fixed_solution = error_stats(fixed);
  if (s.epochs > 0) s.empirical_success_rate = static_cast<double>(correct) / s.epochs;
  const int ok = s.epochs - s.failed;
  if (ok > 0) {
    s.mean_success_rate = ps_sum / ok;
    s.mean_adop = adop_sum / ok;
  }
  if (s.accepted > 0) s.precision_gain = gain_sum / s.accepted;
  for (const auto& e : reported) {
    s.cdf_2d.push_back(e.head<2>().norm());
    s.cdf_3d.push_back(e.norm());
  }
  std::sort(s.cdf_2d.begin(), s.cdf_2d.end());
  std::sort(s.cdf_3d.begin(), s.cdf_3d.end());
  return s;
}

namespace {

EpochResult run_epoch(const ScenarioSpec& spec, const SatelliteGeometry& geometry, int epoch) {
  EpochResult r;
  r.epoch = epoch;
  r.satellites = geometry.count();
  try {
    const SimulatedEpoch sim = simulate_epoch(spec, geometry, epoch);
    r.keypoints = sim.data.lidar ? sim.data.lidar->count() : 0;
    const Matrix3d enu = enu_rotation(spec.latitude_deg * kDeg, spec.longitude_deg * kDeg);

    const FloatSolution sol = solve_float(sim.data);
    r.float_error = enu * (sol.position() - sim.true_position);
    r.float_std = (enu * sol.Qbb() * enu.transpose()).diagonal().cwiseSqrt();
    r.adop = adop(sol.Qaa());

    ResolveOptions opts;
    opts.threshold = spec.threshold;
    opts.full_resolution = spec.full_resolution;
    const AmbiguityOutcome outcome = resolve(AmbiguityProblem::from_float(sol), opts);
    r.success_rate = outcome.success_rate;
    r.accepted = outcome.accepted;
    r.correct = outcome.fixed == sim.true_ambiguities;
    if (outcome.rest) {
      r.fixed_error = enu * (outcome.rest->g.head<3>() - sim.true_position);
      const Matrix3d qb = outcome.rest->Qgg.topLeftCorner<3, 3>();
      r.fixed_std = (enu * qb * enu.transpose()).diagonal().cwiseSqrt();
    }
    r.ok = true;
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioSpec& spec) {
  spec.validate();
  ExperimentResult out;
  out.geometry = generate_constellation(spec.constellation, substream_seed(spec.seed, 0, 0));
  out.epochs.resize(spec.epochs);

  const int workers = std::min(spec.threads, spec.epochs);
  if (workers <= 1) {
    for (int e = 0; e < spec.epochs; ++e) out.epochs[e] = run_epoch(spec, out.geometry, e);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int e = next++; e < spec.epochs; e = next++) out.epochs[e] = run_epoch(spec, out.geometry, e);
      });
    }
    for (auto& t : pool) t.join();
  }
  out.summary = summarize(out.epochs);
  if (out.summary.failed == out.summary.epochs) {
    throw NumericalError("every epoch failed; first error: " + out.epochs.front().error);
  }
  return out;
}

}  // namespace lar
