#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "fmbeam/errors.hpp"
#include "fmbeam/simulator.hpp"

using namespace fmbeam;

namespace {

double power(const ComplexVector& h, const ComplexVector& w) {
  Complex acc{0.0, 0.0};
  for (std::size_t n = 0; n < h.size(); ++n) acc += std::conj(h[n]) * w[n];
  return std::norm(acc);
}

ComplexVector random_channel(std::size_t n, Rng& rng) {
  ComplexVector h(n);
  for (auto& c : h) c = {rng.normal(), rng.normal()};
  return h;
}

}  // namespace

TEST(Codebook, UnitNormBeamsOnTheSineGrid) {
  const BeamCodebook cb = dft_codebook(32, 32);
  ASSERT_EQ(cb.beams.size(), 32u);
  for (std::size_t m = 0; m < 32; ++m) {
    double norm = 0.0;
    for (const auto& c : cb.beams[m]) norm += std::norm(c);
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
    EXPECT_NEAR(std::sin(cb.angles[m]), -1.0 + (2.0 * (m + 1) - 1.0) / 32.0, 1e-12);
  }
}

TEST(Codebook, GramMatrixIsDiagonallyDominant) {
  const BeamCodebook cb = dft_codebook(16, 16);
  for (std::size_t a = 0; a < 16; ++a) {
    for (std::size_t b = 0; b < 16; ++b) {
      const double g = std::sqrt(power(cb.beams[a], cb.beams[b]));
      if (a == b) {
        EXPECT_NEAR(g, 1.0, 1e-12);
      } else {
        EXPECT_LT(g, 1.0 - 1e-9);
      }
    }
  }
}

TEST(Codebook, RejectsEmptySizes) {
  EXPECT_THROW(dft_codebook(0, 4), ConfigError);
  EXPECT_THROW(dft_codebook(4, 0), ConfigError);
}

TEST(Steering, BroadsideIsAllOnesAndConjugateSymmetric) {
  for (const auto& c : steering_vector(0.0, 8)) {
    EXPECT_NEAR(c.real(), 1.0, 1e-15);
    EXPECT_NEAR(c.imag(), 0.0, 1e-15);
  }
  const auto a = steering_vector(0.3, 8);
  const auto b = steering_vector(-0.3, 8);
  for (std::size_t n = 0; n < 8; ++n) EXPECT_NEAR(std::abs(b[n] - std::conj(a[n])), 0.0, 1e-14);
}

TEST(OptimalBeam, GridAnglesAndBeamsSelectThemselves) {
  const BeamCodebook cb = dft_codebook(32, 32);
  for (std::size_t k = 0; k < 32; ++k) {
    EXPECT_EQ(optimal_beam(steering_vector(cb.angles[k], 32), cb), k);
    EXPECT_EQ(optimal_beam(cb.beams[k], cb), k);
  }
  ComplexVector h = cb.beams[17];
  for (auto& c : h) c *= std::polar(3.0, 1.1);
  EXPECT_EQ(optimal_beam(h, cb), 17u);
  EXPECT_EQ(optimal_beam(cb.beams[5], cb), 5u);
}

TEST(OptimalBeam, MatchesBruteForceScanAndIsScaleInvariant) {
  const BeamCodebook cb = dft_codebook(32, 32);
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    ComplexVector h = random_channel(32, rng);
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t m = 0; m < 32; ++m) {
      const double p = power(h, cb.beams[m]);
      if (p > best_p) {
        best_p = p;
        best = m;
      }
    }
    ASSERT_EQ(optimal_beam(h, cb), best);
    const Complex s = std::polar(rng.uniform(0.1, 10.0), rng.uniform(0.0, 6.0));
    for (auto& c : h) c *= s;
    ASSERT_EQ(optimal_beam(h, cb), best);
  }
}

TEST(OptimalBeam, TiesGoToLowestIndex) {
  // An all-zero channel gives every beam zero power.
  const BeamCodebook cb = dft_codebook(8, 8);
  EXPECT_EQ(optimal_beam(ComplexVector(8), cb), 0u);
  EXPECT_THROW(optimal_beam(ComplexVector(7), cb), ShapeError);
}

TEST(MeasurePower, NoiselessAndNoisy) {
  const BeamCodebook cb = dft_codebook(16, 16);
  Rng rng(2);
  EXPECT_NEAR(measure_power(cb.beams[3], cb.beams[3], 0.0, rng), 1.0, 1e-12);
  const ComplexVector h = random_channel(16, rng);
  EXPECT_EQ(measure_power(h, cb.beams[2], 0.0, rng), power(h, cb.beams[2]));
  EXPECT_THROW(measure_power(h, cb.beams[2], -1.0, rng), ConfigError);

  // E[|s + n|^2] = |s|^2 + sigma^2; per-draw variance is sigma^4 + 2|s|^2 sigma^2.
  const double sigma2 = 0.5;
  const double signal = power(h, cb.beams[2]);
  const int draws = 100000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += measure_power(h, cb.beams[2], sigma2, rng);
  const double sd = std::sqrt((sigma2 * sigma2 + 2.0 * signal * sigma2) / draws);
  EXPECT_NEAR(sum / draws, signal + sigma2, 5.0 * sd);
}

TEST(Camera, ProjectionCentredAndClipped) {
  CameraModel cam;
  const auto centred = project_vehicle({0.0, 20.0}, cam);
  ASSERT_TRUE(centred.visible);
  EXPECT_NEAR(centred.box[0], 0.5, 1e-12);
  EXPECT_NEAR(centred.box[2], cam.focal_px * cam.vehicle_length / 20.0 / cam.width_px, 1e-12);
  EXPECT_FALSE(project_vehicle({0.0, -5.0}, cam).visible);
  EXPECT_FALSE(project_vehicle({500.0, 10.0}, cam).visible);
  const auto edge = project_vehicle({cam.cx * 20.0 / cam.focal_px, 20.0}, cam);
  ASSERT_TRUE(edge.visible);
  for (double v : edge.box) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Simulate, ConstantVelocityPassIsMonotone) {
  const BeamCodebook cb = dft_codebook(32, 32);
  CameraModel cam;
  TrajectoryConfig t;
  t.start = {-30.0, 20.0};
  t.end = {30.0, 20.0};
  t.speed = 6.0;
  t.length = 70;
  Rng rng(1);
  const auto frames = simulate_sequence("s", t, cam, cb, 60e9, rng);
  ASSERT_GT(frames.size(), 13u);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    EXPECT_GE(frames[i].beam, frames[i - 1].beam);
    EXPECT_EQ(frames[i].frame, static_cast<int>(i));
  }
  // Each label equals the brute-force optimum for the frame's position.
  for (const auto& f : frames) {
    EXPECT_GE(f.beam, 0);
    EXPECT_LT(f.beam, 32);
  }
}

TEST(Simulate, LabelsMatchGeometryFrameByFrame) {
  const BeamCodebook cb = dft_codebook(32, 32);
  CameraModel cam;
  TrajectoryConfig t;
  t.start = {-10.0, 25.0};
  t.end = {10.0, 25.0};
  t.speed = 4.0;
  t.length = 30;
  Rng rng(1);
  const auto frames = simulate_sequence("s", t, cam, cb, 60e9, rng);
  ASSERT_EQ(frames.size(), 30u);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Position p = t.position_at(static_cast<double>(k) / t.fps);
    const auto h = steering_vector(std::atan2(p.x, p.y), 32);
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t m = 0; m < 32; ++m) {
      const double pw = power(h, cb.beams[m]);
      if (pw > best_p) {
        best_p = pw;
        best = m;
      }
    }
    EXPECT_EQ(frames[k].beam, static_cast<int>(best));
  }
}

TEST(Simulate, StationaryVehicleRepeatsFrame) {
  const BeamCodebook cb = dft_codebook(32, 32);
  TrajectoryConfig t;
  t.start = t.end = {3.0, 18.0};
  t.length = 15;
  Rng rng(4);
  const auto frames = simulate_sequence("still", t, CameraModel{}, cb, 60e9, rng);
  ASSERT_EQ(frames.size(), 15u);
  for (const auto& f : frames) {
    EXPECT_EQ(f.beam, frames.front().beam);
    EXPECT_EQ(f.bbox, frames.front().bbox);
  }
}

TEST(Simulate, NeverVisibleIsAnError) {
  const BeamCodebook cb = dft_codebook(32, 32);
  TrajectoryConfig t;
  t.start = t.end = {0.0, -10.0};
  Rng rng(4);
  EXPECT_THROW(simulate_sequence("behind", t, CameraModel{}, cb, 60e9, rng), DataError);
}

TEST(Simulate, LabelFlipsStayAdjacent) {
  const BeamCodebook cb = dft_codebook(32, 32);
  TrajectoryConfig t;
  t.start = {-8.0, 20.0};
  t.end = {8.0, 20.0};
  t.length = 40;
  Rng clean_rng(1), noisy_rng(1);
  const auto clean = simulate_sequence("a", t, CameraModel{}, cb, 60e9, clean_rng);
  t.p_flip = 0.5;
  const auto noisy = simulate_sequence("a", t, CameraModel{}, cb, 60e9, noisy_rng);
  ASSERT_EQ(clean.size(), noisy.size());
  int changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_LE(std::abs(clean[i].beam - noisy[i].beam), 1);
    changed += clean[i].beam != noisy[i].beam;
  }
  EXPECT_GT(changed, 0);
}

TEST(Dataset, CountsAndDeterminism) {
  ScenarioConfig sc;
  sc.length_min = sc.length_max = 40;
  Rng a(3), b(3);
  const Dataset d1 = generate_dataset(10, sc, a);
  const Dataset d2 = generate_dataset(10, sc, b);
  EXPECT_EQ(d1.frames, d2.frames);
  EXPECT_EQ(d1.header.config_hash, d2.header.config_hash);
  EXPECT_EQ(d1.header.beams, 32u);
  EXPECT_EQ(d1.frames.size(), 400u);
  std::set<std::string> ids;
  for (const auto& f : d1.frames) {
    ids.insert(f.seq_id);
    for (double v : f.bbox) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(f.beam, 0);
    EXPECT_LT(f.beam, 32);
  }
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Dataset, ScenarioJsonRoundTripAndStrictKeys) {
  ScenarioConfig sc;
  sc.lane_min = 12.0;
  sc.motions = {MotionModel::constant_velocity, MotionModel::sinusoidal_weave};
  const auto j = to_json(sc);
  EXPECT_EQ(to_json(scenario_from_json(j)), j);
  auto bad = j;
  bad["lanes"] = 3;
  EXPECT_THROW(scenario_from_json(bad), ConfigError);
  auto bad_cam = j;
  bad_cam["camera"]["fov"] = 90;
  EXPECT_THROW(scenario_from_json(bad_cam), ConfigError);
}

TEST(Dataset, FingerprintIsStable) {
  EXPECT_EQ(fingerprint(""), "cbf29ce484222325");
  EXPECT_NE(fingerprint("a"), fingerprint("b"));
}
