#include <doctest.h>

#include <set>

#include "lar/errors.hpp"
#include "lar/sim_harness.hpp"
#include "oracles.hpp"

using namespace lar;

namespace {

ScenarioSpec small_spec() {
  ScenarioSpec s;
  s.epochs = 40;
  s.seed = 17;
  s.outlier_fraction = 0.2;
  return s;
}

}  // namespace

TEST_CASE("splitmix64 reference output") {
  // first output of the reference generator seeded with 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(substream_seed(1, 0, 0) != substream_seed(1, 1, 0));
  CHECK(substream_seed(1, 1, 0) != substream_seed(1, 1, 1));
  CHECK(substream_seed(1, 1, 5) == substream_seed(1, 1, 5));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(substream_seed(3, 1, i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("geodetic conversion") {
  const Vector3d eq = geodetic_to_ecef(0.0, 0.0, 0.0);
  CHECK(eq.x() == doctest::Approx(6378137.0));
  CHECK(std::abs(eq.y()) < 1e-9);
  const Vector3d pole = geodetic_to_ecef(oracle::kPi / 2, 0.0, 0.0);
  CHECK(pole.z() == doctest::Approx(6356752.314245).epsilon(1e-12));
  CHECK(std::abs(pole.x()) < 1e-6);

  const double lat = oracle::deg(-37.8136), lon = oracle::deg(144.9631);
  const Matrix3d r = enu_rotation(lat, lon);
  CHECK((r * r.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.determinant() == doctest::Approx(1.0));
  // up is the ellipsoid normal: moving along it changes only the height
  const Vector3d p0 = geodetic_to_ecef(lat, lon, 0.0), p1 = geodetic_to_ecef(lat, lon, 100.0);
  const Vector3d d = r * (p1 - p0);
  CHECK(d.z() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(d.head<2>().norm() < 1e-8);
  // north increases with latitude
  const Vector3d pn = geodetic_to_ecef(lat + 1e-6, lon, 0.0);
  CHECK((r * (pn - p0)).y() > 0.0);
}

TEST_CASE("random constellations respect the mask and separation") {
  ConstellationSpec c;
  c.count = 12;
  c.mask_deg = 40.0;
  c.min_separation_deg = 10.0;
  const auto g = generate_constellation(c, 5);
  CHECK(g.count() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(g.elevations[i] > oracle::deg(40.0));
    if (i) CHECK(g.elevations[i] <= g.elevations[i - 1]);
    for (int j = 0; j < i; ++j) {
      CHECK(g.unit_vectors.row(i).dot(g.unit_vectors.row(j)) < std::cos(oracle::deg(10.0)) + 1e-12);
    }
  }
  CHECK(g.pivot == 0);
  c.count = 2;
  CHECK(generate_constellation(c, 5).count() == 2);
  c.count = 40;
  c.min_separation_deg = 30.0;
  CHECK_THROWS_AS(generate_constellation(c, 5), ConfigError);

  ConstellationSpec fixed;
  fixed.elevations_deg = {50, 70};
  fixed.azimuths_deg = {10, 20};
  CHECK(generate_constellation(fixed, 1).pivot == 1);
  fixed.azimuths_deg.pop_back();
  CHECK_THROWS_AS(generate_constellation(fixed, 1), ConfigError);
}

TEST_CASE("simulated keypoints") {
  ScenarioSpec s;
  s.outlier_fraction = 0.3;
  RigidPose truth;
  truth.translation = Vector3d(1, 2, 3);
  const auto kp = simulate_keypoints(s, truth, 3);
  CHECK(kp.set.count() == 44 + 19);
  int outliers = 0;
  std::vector<double> sq;
  for (int j = 0; j < kp.set.count(); ++j) {
    const double r = (truth.apply(kp.set.rover[j]) - kp.set.reference[j]).norm();
    if (kp.outlier[j]) {
      ++outliers;
      CHECK(r > 1.5);
    } else {
      sq.push_back(r * r);
      const double horiz = kp.set.rover[j].head<2>().norm();
      CHECK(horiz >= 5.0 - 1.0);
      CHECK(horiz <= 50.0 + 1.0);
    }
  }
  CHECK(outliers == 19);

  // per-point residual variance is sigma^2 in total over the three axes
  s.outlier_fraction = 0.0;
  s.keypoints = 4000;
  const auto big = simulate_keypoints(s, truth, 4);
  double total = 0.0;
  for (int j = 0; j < big.set.count(); ++j) total += (truth.apply(big.set.rover[j]) - big.set.reference[j]).squaredNorm();
  CHECK(total / big.set.count() == doctest::Approx(0.15 * 0.15).epsilon(0.06));
}

TEST_CASE("epochs are reproducible and independent") {
  const auto spec = small_spec();
  const auto geo = generate_constellation(spec.constellation, substream_seed(spec.seed, 0, 0));
  const auto a = simulate_epoch(spec, geo, 3);
  const auto b = simulate_epoch(spec, geo, 3);
  const auto c = simulate_epoch(spec, geo, 4);
  CHECK(a.true_ambiguities == b.true_ambiguities);
  CHECK(a.data.gnss->observations.code == b.data.gnss->observations.code);
  CHECK(a.data.lidar->reference == b.data.lidar->reference);
  CHECK_FALSE(a.data.gnss->observations.code == c.data.gnss->observations.code);
  CHECK(a.registration->inliers.size() >= 40);
  CHECK((a.true_rotation * a.true_rotation.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("experiment runs and threads do not change results") {
  auto spec = small_spec();
  const auto one = run_experiment(spec);
  spec.threads = 4;
  const auto four = run_experiment(spec);
  REQUIRE(one.epochs.size() == four.epochs.size());
  for (std::size_t i = 0; i < one.epochs.size(); ++i) {
    CHECK(one.epochs[i].float_error == four.epochs[i].float_error);
    CHECK(one.epochs[i].correct == four.epochs[i].correct);
  }
  CHECK(one.summary.failed == 0);
  CHECK(one.summary.empirical_success_rate > 0.9);
  CHECK(one.summary.reported.three_d < 0.1);
}

TEST_CASE("noise-free experiment is exact") {
  auto spec = small_spec();
  spec.epochs = 5;
  spec.noise_scale = 0.0;
  spec.outlier_fraction = 0.0;
  const auto r = run_experiment(spec);
  for (const auto& e : r.epochs) {
    REQUIRE(e.ok);
    CHECK(e.correct);
    CHECK(e.reported_error().norm() < 1e-6);
  }
}

TEST_CASE("summary arithmetic") {
  std::vector<EpochResult> eps(4);
  for (int i = 0; i < 4; ++i) {
    eps[i].epoch = i;
    eps[i].ok = true;
    eps[i].float_error = Vector3d(0.3, 0.4, 0.0);
    eps[i].success_rate = 0.5;
    eps[i].adop = 0.1;
    eps[i].float_std = Vector3d(0.2, 0.2, 0.4);
  }
  eps[0].accepted = eps[1].accepted = true;
  eps[0].correct = true;
  eps[0].fixed_error = Vector3d(0.0, 0.0, 0.02);
  eps[1].fixed_error = Vector3d(0.0, 0.0, 0.04);
  eps[0].fixed_std = eps[1].fixed_std = Vector3d(0.02, 0.04, 0.1);
  eps[3].ok = false;
  const auto s = summarize(eps);
  CHECK(s.epochs == 4);
  CHECK(s.failed == 1);
  CHECK(s.accepted == 2);
  CHECK(s.empirical_success_rate == doctest::Approx(0.25));
  CHECK(s.fixed_solution.vertical == doctest::Approx(std::sqrt((0.0004 + 0.0016) / 2)));
  CHECK(s.float_solution.horizontal == doctest::Approx(0.5));
  CHECK(s.reported.count == 3);
  CHECK(s.precision_gain(0) == doctest::Approx(10.0));
  CHECK(s.precision_gain(1) == doctest::Approx(5.0));
  CHECK(s.cdf_2d.size() == 3);
  CHECK(s.cdf_2d.front() == doctest::Approx(0.0));

  const Matrix3d qf = Vector3d(4.0, 9.0, 16.0).asDiagonal();
  const Matrix3d qx = Vector3d(1.0, 1.0, 4.0).asDiagonal();
  CHECK(precision_gain(qf, qx, Matrix3d::Identity()).isApprox(Vector3d(2.0, 3.0, 2.0)));
}

TEST_CASE("scenario validation") {
  ScenarioSpec s;
  s.outlier_fraction = 1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ScenarioSpec{};
  s.keypoints = 3;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ScenarioSpec{};
  s.epochs = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ScenarioSpec{};
  s.sigma_code = 0.001;
  CHECK_THROWS(s.validate());
}
