#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ppslam/world.hpp"

using namespace ppslam;

namespace {

// Circle of the reference scenario: radius 9 m about (0, 9, 3), yaw rate 0.2.
Vec3 circle_position(double t) {
  return Vec3(9.0 * std::sin(0.2 * t), 9.0 * (1.0 - std::cos(0.2 * t)), 3.0);
}

}  // namespace

TEST(TruthStep, StationaryVehicleDoesNotMove) {
  ScenarioConfig cfg = paper_scenario();
  cfg.omega_true.setZero();
  cfg.v_true.setZero();
  TruthState s = initial_truth(cfg);
  for (int k = 0; k < 100; ++k) s = truth_step(s, cfg, 1e-3);
  EXPECT_EQ(s.pose.position, cfg.p0);
  EXPECT_EQ(s.pose.rotation.matrix(), Mat3::Identity());
  EXPECT_EQ(s.landmarks, cfg.landmarks_true);
}

TEST(TruthStep, HalfAndFullCircleHeadings) {
  const ScenarioConfig cfg = paper_scenario();
  const double dt = 1e-3;
  // Period 2 pi / 0.2 = 10 pi s; half a turn at 5 pi s.
  for (double horizon : {5.0 * std::numbers::pi, 10.0 * std::numbers::pi}) {
    const long steps = std::lround(horizon / dt);
    TruthState s = initial_truth(cfg);
    for (long k = 0; k < steps; ++k) s = truth_step(s, cfg, dt);
    const double t = static_cast<double>(steps) * dt;
    const Mat3 expected =
        oracle::series_exp<Mat3>(oracle::cross_matrix(Vec3(0, 0, 0.2 * t)), 60);
    EXPECT_LT((s.pose.rotation.matrix() - expected).cwiseAbs().maxCoeff(), 1e-9);
    const double heading = horizon < 20.0 ? -1.0 : 1.0;
    EXPECT_NEAR(s.pose.rotation.matrix()(0, 0), heading, 1e-6);
    EXPECT_LT((s.pose.position - circle_position(t)).norm(), 1e-2);
    EXPECT_EQ(s.landmarks, cfg.landmarks_true);
  }
}

TEST(TruthStep, PositionErrorIsFirstOrder) {
  const ScenarioConfig cfg = paper_scenario();
  auto error_at = [&](double dt) {
    TruthState s = initial_truth(cfg);
    const long n = std::lround(5.0 / dt);
    for (long k = 0; k < n; ++k) s = truth_step(s, cfg, dt);
    return (s.pose.position - circle_position(5.0)).norm();
  };
  const double ratio = error_at(5e-4) / error_at(1e-3);
  EXPECT_GT(ratio, 0.45);
  EXPECT_LT(ratio, 0.55);
}

TEST(ClosedFormPose, MatchesCircle) {
  const ScenarioConfig cfg = paper_scenario();
  for (double t : {0.0, 1.0, 7.3, 31.4, 40.0}) {
    EXPECT_LT((closed_form_pose(cfg, t).position - circle_position(t)).norm(), 1e-12);
  }
}

TEST(MeasureVelocity, BiasWithoutNoise) {
  ScenarioConfig cfg = paper_scenario();
  cfg.noise_std = 0.0;
  Rng rng(1);
  Vec6 expected;
  expected << 0.09, 0.1, 0.1, 2.0, 0.2, -0.2;
  EXPECT_LT((measure_velocity(cfg.twist_true(), cfg, rng).vector() - expected).norm(), 1e-15);
  cfg.bias_true = Twist::zero();
  EXPECT_EQ(measure_velocity(cfg.twist_true(), cfg, rng).vector(), cfg.twist_true().vector());
}

TEST(MeasureVelocity, SeededStreamsRepeat) {
  const ScenarioConfig cfg = paper_scenario();
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const Vec6 va = measure_velocity(cfg.twist_true(), cfg, a).vector();
    EXPECT_EQ(va, measure_velocity(cfg.twist_true(), cfg, b).vector());
    differs = differs || va != measure_velocity(cfg.twist_true(), cfg, c).vector();
  }
  EXPECT_TRUE(differs);
}

TEST(MeasureVelocity, NoiseHasRequestedSpread) {
  ScenarioConfig cfg = paper_scenario();
  cfg.bias_true = Twist::zero();
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double d = measure_velocity(cfg.twist_true(), cfg, rng).v.x() - 1.8;
    sum += d;
    sq += d * d;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(sq / n), 0.2, 0.005);
}

TEST(MeasureLandmarks, Values) {
  ScenarioConfig cfg = paper_scenario();
  Rng rng(1);
  const std::vector<Vec3> y = measure_landmarks(initial_truth(cfg), rng);
  EXPECT_EQ(y[0], Vec3(8, 8, -3));
  TruthState at_origin{Pose::identity(), cfg.landmarks_true, 0.0};
  EXPECT_EQ(measure_landmarks(at_origin, rng), cfg.landmarks_true);
}

TEST(MeasureLandmarks, ReconstructsMapFromTruth) {
  oracle::Sampler s;
  const ScenarioConfig cfg = paper_scenario();
  TruthState st{s.pose(), cfg.landmarks_true, 0.0};
  Rng rng(1);
  const auto y = measure_landmarks(st, rng);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_LT((st.pose.transform_point(y[i]) - cfg.landmarks_true[i]).norm(), 1e-13);
  }
}

TEST(PaperScenario, Values) {
  const ScenarioConfig cfg = paper_scenario();
  EXPECT_EQ(cfg.omega_true, Vec3(0, 0, 0.2));
  EXPECT_EQ(cfg.v_true, Vec3(1.8, 0, 0));
  EXPECT_EQ(cfg.noise_std, 0.2);
  EXPECT_EQ(cfg.landmarks_true.size(), 4u);
  EXPECT_EQ(cfg.p0, Vec3(0, 0, 3));
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ScenarioConfig, Validation) {
  ScenarioConfig cfg = paper_scenario();
  cfg.landmarks_true.resize(2);
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = paper_scenario();
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
  cfg = paper_scenario();
  cfg.noise_std = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigInvalid);
}
