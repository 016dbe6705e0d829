#include <doctest.h>

#include <sstream>

#include "lar/errors.hpp"
#include "lar/gnss_model.hpp"
#include "oracles.hpp"

using namespace lar;

namespace {

std::vector<double> degs(std::initializer_list<double> v) {
  std::vector<double> out;
  for (double d : v) out.push_back(oracle::deg(d));
  return out;
}

SatelliteGeometry sample_geometry() {
  return SatelliteGeometry::from_angles(degs({35.0, 72.0, 50.0, 20.0, 61.0}), degs({10.0, 120.0, 200.0, 290.0, 330.0}));
}

oracle::GnssSetup setup_of(const SatelliteGeometry& g, const GnssConfig& c, bool equal = false) {
  oracle::GnssSetup s;
  s.el = g.elevations;
  s.az = g.azimuths;
  s.lambda = c.wavelengths;
  s.sigma_p = c.sigma_code;
  s.sigma_phi = c.sigma_phase;
  s.equal_weights = equal;
  s.pivot = g.pivot;
  return s;
}

}  // namespace

TEST_CASE("pivot is the highest satellite") {
  const auto g = sample_geometry();
  CHECK(g.pivot == 1);
  CHECK(g.first(1 + 2).pivot == 1);
  const auto h = SatelliteGeometry::from_angles(degs({30, 40}), degs({0, 90}), 0);
  CHECK(h.pivot == 0);
}

TEST_CASE("differencing matrix matches the hand-built operator") {
  for (int m = 2; m <= 6; ++m) {
    for (int p = 0; p < m; ++p) {
      const MatrixXd d = differencing_matrix(m, p);
      CHECK(d.rows() == m);
      CHECK(d.cols() == m - 1);
      CHECK((d.transpose() - oracle::dd_operator(m, p)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK_THROWS_AS(differencing_matrix(1, 0), ArgumentError);
  CHECK_THROWS_AS(differencing_matrix(3, 3), ArgumentError);
}

TEST_CASE("elevation weights and the cofactor determinant identity") {
  const auto g = sample_geometry();
  const VectorXd w = elevation_weights(g);
  for (int s = 0; s < g.count(); ++s) CHECK(w(s) == doctest::Approx(std::pow(std::sin(g.elevations[s]), 2)));
  CHECK(elevation_weights(g, WeightMode::Equal).isOnes());

  // |D^T W^-1 D| = sum(w) / prod(w)
  const MatrixXd c = dd_cofactor(g);
  const double expected = w.sum() / w.prod();
  CHECK(oracle::laplace_det(c) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(weight_factor(w) == doctest::Approx(std::pow(expected, 1.0 / (2.0 * (g.count() - 1)))));
  // equal weights: |C| = m
  CHECK(oracle::laplace_det(dd_cofactor(g, WeightMode::Equal)) == doctest::Approx(5.0));
}

TEST_CASE("zero elevation gives a degenerate weight") {
  auto g = SatelliteGeometry::from_angles(degs({0.0, 50.0, 60.0}), degs({0, 100, 200}));
  CHECK_THROWS_AS(elevation_weights(g), DegenerateWeightError);
  CHECK_NOTHROW(elevation_weights(g, WeightMode::Equal));
}

TEST_CASE("DD weights are inverse DD variances") {
  const auto g = sample_geometry();
  const auto cfg = GnssConfig::gps(2, 0.3, 0.003);
  const DdWeights w = dd_weight_matrices(cfg, g);
  const auto s = setup_of(g, cfg);
  const MatrixXd qp = oracle::dd_variance(s, 0.3);
  const MatrixXd qf = oracle::dd_variance(s, 0.003);
  const int k = g.count() - 1;
  REQUIRE(w.code.rows() == 2 * k);
  for (int t = 0; t < 2; ++t) {
    CHECK((w.code.block(t * k, t * k, k, k) * qp - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((w.phase.block(t * k, t * k, k, k) * qf - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(w.code.block(0, k, k, k).isZero());
}

TEST_CASE("design matrices") {
  const auto g = sample_geometry();
  const auto cfg = GnssConfig::gps(2, 0.2, 0.002);
  const GnssDesign d = gnss_design_matrices(cfg, g);
  const auto s = setup_of(g, cfg);
  CHECK((d.dd_geometry - oracle::dd_geometry(s)).cwiseAbs().maxCoeff() < 1e-14);
  const auto lm = oracle::gnss_linear_model(s);
  const int k = g.count() - 1;
  CHECK((d.ambiguity_map - lm.A.leftCols(2 * k)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.position_map.leftCols(3) - lm.A.rightCols(3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(d.position_map.rightCols(9).isZero());
}

TEST_CASE("wavelength conventions") {
  const auto gps = GnssConfig::gps(3, 0.2, 0.002);
  CHECK(gps.wavelengths[0] == doctest::Approx(0.190293672798));
  CHECK(gps.wavelengths[1] == doctest::Approx(0.244210213425));
  CHECK(gps.wavelengths[2] == doctest::Approx(0.254828048791));
  CHECK(gps.variance_ratio() == doctest::Approx(1e-4));

  const auto n1 = GnssConfig::normalized(1, 0.2, 0.002);
  CHECK(n1.wavelengths[0] == doctest::Approx(0.2));
  const auto n2 = GnssConfig::normalized(2, 0.2, 0.002);
  CHECK(n2.sigma_phase / n2.mean_wavelength() == doctest::Approx(0.01));
  CHECK(n2.wavelengths[1] / n2.wavelengths[0] == doctest::Approx(0.244210213425 / 0.190293672798));

  CHECK_THROWS_AS(GnssConfig::gps(1, 0.002, 0.002), ArgumentError);
  CHECK_THROWS_AS(GnssConfig::gps(4, 0.2, 0.002), ArgumentError);
  GnssConfig empty;
  CHECK_THROWS_AS(empty.validate(), ArgumentError);
}

TEST_CASE("noise-free DD observations") {
  const auto g = sample_geometry();
  const auto cfg = GnssConfig::gps(2, 0.2, 0.002);
  const Vector3d off(1.5, -2.0, 0.7);
  IntVector amb(8);
  amb << 3, -7, 12, 0, 5, 5, -1, 40;
  const auto obs = simulate_dd_observations(cfg, g, off, amb, 9, WeightMode::Elevation, 0.0);
  const MatrixXd G = oracle::dd_geometry(setup_of(g, cfg));
  for (int t = 0; t < 2; ++t) {
    const VectorXd r = G * off;
    CHECK((obs.code.segment(t * 4, 4) - r).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((obs.phase.segment(t * 4, 4) - r - cfg.wavelengths[t] * amb.segment(t * 4, 4).cast<double>())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  IntVector bad(3);
  bad.setZero();
  CHECK_THROWS_AS(simulate_dd_observations(cfg, g, off, bad, 1), ArgumentError);
}

TEST_CASE("simulated DD noise has the modelled covariance") {
  const auto g = sample_geometry();
  const auto cfg = GnssConfig::gps(1, 0.2, 0.002);
  IntVector amb = IntVector::Zero(4);
  std::vector<VectorXd> code;
  for (int i = 0; i < 20000; ++i) {
    code.push_back(simulate_dd_observations(cfg, g, Vector3d::Zero(), amb, 1000 + i).code);
  }
  const MatrixXd c = oracle::sample_covariance(code);
  const MatrixXd q = oracle::dd_variance(setup_of(g, cfg), 0.2);
  // about 1% relative sampling error on the diagonal at this sample size
  for (int i = 0; i < 4; ++i) CHECK(c(i, i) == doctest::Approx(q(i, i)).epsilon(0.05));
  CHECK((c - q).cwiseAbs().maxCoeff() < 0.05 * q.cwiseAbs().maxCoeff());
}

TEST_CASE("geometry CSV") {
  std::istringstream ok("sat_id,elevation_deg,azimuth_deg\nG01,45,10\nG02, 80 ,200\nG03,30,300\n");
  const auto g = read_geometry_csv(ok);
  CHECK(g.count() == 3);
  CHECK(g.ids[1] == "G02");
  CHECK(g.pivot == 1);
  CHECK(g.unit_vectors.row(1).norm() == doctest::Approx(1.0));

  std::istringstream bad_header("id,el,az\nG01,45,10\n");
  CHECK_THROWS_AS(read_geometry_csv(bad_header), ConfigError);
  std::istringstream bad_num("sat_id,elevation_deg,azimuth_deg\nG01,4x5,10\nG02,30,20\n");
  CHECK_THROWS_AS(read_geometry_csv(bad_num), ConfigError);
  std::istringstream bad_el("sat_id,elevation_deg,azimuth_deg\nG01,95,10\nG02,30,20\n");
  CHECK_THROWS(read_geometry_csv(bad_el));
}

TEST_CASE("elevation mask") {
  const auto g = sample_geometry();
  const auto masked = apply_elevation_mask(g, oracle::deg(40.0));
  CHECK(masked.count() == 3);
  for (double e : masked.elevations) CHECK(e >= oracle::deg(40.0));
  CHECK(masked.elevations[masked.pivot] == doctest::Approx(oracle::deg(72.0)));
}

TEST_CASE("rotated geometry keeps DD cofactor and rotates G") {
  std::mt19937_64 rng(3);
  const Matrix3d r = oracle::random_rotation(rng);
  const auto g = sample_geometry();
  const auto gr = g.rotated(r);
  CHECK((dd_cofactor(g) - dd_cofactor(gr)).cwiseAbs().maxCoeff() < 1e-12);
  const auto cfg = GnssConfig::gps(1, 0.2, 0.002);
  CHECK((gnss_design_matrices(cfg, gr).dd_geometry - gnss_design_matrices(cfg, g).dd_geometry * r.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}
