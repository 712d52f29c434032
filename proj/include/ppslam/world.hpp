#pragma once

// Ground-truth vehicle motion with a static landmark map, and the synthetic
// velocity / feature measurements fed to the observer.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"

namespace ppslam {

/// Noise generator. mt19937_64 with std::normal_distribution: reproducible
/// bit-for-bit for a given seed on one standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian(double stddev) {
    if (stddev == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, stddev)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

struct ScenarioConfig {
  Vec3 omega_true = Vec3::Zero();   // rad/s, body frame
  Vec3 v_true = Vec3::Zero();       // m/s, body frame
  Rotation r0;
  Vec3 p0 = Vec3::Zero();
  std::vector<Vec3> landmarks_true;
  Twist bias_true;
  double noise_std = 0.0;           // per velocity axis
  double feature_noise_std = 0.0;   // per feature axis; off by default
  double duration = 40.0;           // s
  double dt = 1e-3;                 // s
  std::uint64_t seed = 1;

  [[nodiscard]] Twist twist_true() const { return Twist{omega_true, v_true}; }

  void validate() const {
    if (!landmarks_define_plane(landmarks_true)) {
      throw ConfigInvalid("need at least three non-collinear landmarks");
    }
    if (!(dt > 0.0)) throw ConfigInvalid("dt must be positive");
    if (!(duration >= 0.0)) throw ConfigInvalid("duration must be non-negative");
    if (!(noise_std >= 0.0) || !(feature_noise_std >= 0.0)) {
      throw ConfigInvalid("noise standard deviations must be non-negative");
    }
    if (!omega_true.allFinite() || !v_true.allFinite() || !p0.allFinite()) {
      throw ConfigInvalid("non-finite scenario values");
    }
  }
};

struct TruthState {
  Pose pose;
  std::vector<Vec3> landmarks;
  double t = 0.0;
};

[[nodiscard]] inline TruthState initial_truth(const ScenarioConfig& cfg) {
  return TruthState{Pose{cfg.r0, cfg.p0}, cfg.landmarks_true, 0.0};
}

/// One step of dT/dt = T [U]^ with constant body twist; landmarks are static.
[[nodiscard]] inline TruthState truth_step(const TruthState& s, const ScenarioConfig& cfg,
                                           double dt) {
  TruthState out = s;
  out.pose.position = s.pose.position + dt * (s.pose.rotation * cfg.v_true);
  out.pose.rotation =
      project_to_rotation((s.pose.rotation * so3_exp(dt * cfg.omega_true)).matrix());
  out.t = s.t + dt;
  return out;
}

/// U_m = U + b_U + n_U.
[[nodiscard]] inline Twist measure_velocity(const Twist& u_true, const ScenarioConfig& cfg,
                                            Rng& rng) {
  Twist m = u_true + cfg.bias_true;
  for (int k = 0; k < 3; ++k) m.omega[k] += rng.gaussian(cfg.noise_std);
  for (int k = 0; k < 3; ++k) m.v[k] += rng.gaussian(cfg.noise_std);
  return m;
}

/// y_i = R^T (p_i - P), plus optional Gaussian feature noise.
[[nodiscard]] inline std::vector<Vec3> measure_landmarks(const TruthState& s, Rng& rng,
                                                         double feature_noise_std = 0.0) {
  std::vector<Vec3> y;
  y.reserve(s.landmarks.size());
  const Pose inv = pose_inverse(s.pose);
  for (const auto& p : s.landmarks) {
    Vec3 yi = inv.transform_point(p);
    for (int k = 0; k < 3; ++k) yi[k] += rng.gaussian(feature_noise_std);
    y.push_back(yi);
  }
  return y;
}

/// The reference scenario: a circle of radius 9 m at 3 m height over four
/// ground features, with biased and noisy velocity measurements.
[[nodiscard]] inline ScenarioConfig paper_scenario() {
  ScenarioConfig cfg;
  cfg.omega_true = Vec3(0.0, 0.0, 0.2);
  cfg.v_true = Vec3(1.8, 0.0, 0.0);
  cfg.r0 = Rotation::identity();
  cfg.p0 = Vec3(0.0, 0.0, 3.0);
  cfg.landmarks_true = {Vec3(8, 8, 0), Vec3(-8, 8, 0), Vec3(8, -8, 0), Vec3(-8, -8, 0)};
  cfg.bias_true = Twist{Vec3(0.09, 0.1, -0.1), Vec3(0.2, 0.2, -0.2)};
  cfg.noise_std = 0.2;
  cfg.duration = 40.0;
  cfg.dt = 1e-3;
  cfg.seed = 1;
  return cfg;
}

/// Closed-form truth pose for a constant body twist, valid for any t:
/// R(t) = R0 exp(t [omega]_x), P(t) = P0 + R0 (integral of exp(s[omega]_x) ds) V.
[[nodiscard]] inline Pose closed_form_pose(const ScenarioConfig& cfg, double t) {
  const Rotation r = cfg.r0 * so3_exp(t * cfg.omega_true);
  const double w = cfg.omega_true.norm();
  Mat3 integral;
  if (w * t < 1e-8) {
    integral = t * Mat3::Identity();
  } else {
    const Mat3 k = skew(cfg.omega_true / w);
    integral = t * Mat3::Identity() + (1.0 - std::cos(w * t)) / w * k +
               (t - std::sin(w * t) / w) * k * k;
  }
  return Pose{r, cfg.p0 + cfg.r0 * (integral * cfg.v_true)};
}

}  // namespace ppslam
