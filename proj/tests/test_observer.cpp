#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ppslam/observer.hpp"

using namespace ppslam;

namespace {

PerformanceEnvelope sym(double delta, double xi0 = 1.8) {
  return PerformanceEnvelope{xi0, 0.1, 1.0, delta, delta};
}

EnvelopeSet uniform_envelopes(std::size_t n, const PerformanceEnvelope& env) {
  return EnvelopeSet(n, LandmarkEnvelopes{env, env, env});
}

Eigen::Matrix<double, 6, 3> stack(const Vec3& x) {
  Eigen::Matrix<double, 6, 3> m;
  m.topRows<3>() = oracle::cross_matrix(x);
  m.bottomRows<3>() = Mat3::Identity();
  return m;
}

}  // namespace

TEST(LandmarkError, PerfectEstimateIsZero) {
  oracle::Sampler s;
  const Pose t = s.pose();
  const Vec3 p = s.vec3(10);
  const Vec3 y = pose_inverse(t).transform_point(p);
  EXPECT_LT(landmark_error(t, p, y).norm(), 1e-13);
  EXPECT_EQ(landmark_error(Pose::identity(), Vec3(1, 1, 1), Vec3(1, 1, 1)), Vec3::Zero());
}

TEST(LandmarkError, HomogeneousForm) {
  oracle::Sampler s;
  for (int i = 0; i < 100; ++i) {
    const Pose t = s.pose();
    const Vec3 p = s.vec3(10), y = s.vec3(10);
    Eigen::Vector4d ph, yh;
    ph << p, 1.0;
    yh << y, 1.0;
    const Eigen::Vector4d d = ph - oracle::homogeneous(t.rotation.matrix(), t.position) * yh;
    EXPECT_EQ(d[3], 0.0);
    EXPECT_LT((landmark_error(t, p, y) - d.head<3>()).norm(), 1e-12);
  }
}

TEST(CorrectionTwist, ZeroErrorGivesZeroTwist) {
  const std::vector<Vec3> y{Vec3(1, 2, 3), Vec3(-1, 0, 2)};
  const std::vector<Vec3> e(2, Vec3::Zero());
  const std::vector<Mat3> l(2, Mat3::Identity());
  EXPECT_EQ(correction_twist(Pose::identity(), y, e, l, 3.0).vector(), Vec6::Zero());
}

TEST(CorrectionTwist, SingleLandmarkHandAssembly) {
  const Vec3 y(8, 8, -3), big_e(0.3, -0.2, 0.5);
  const std::vector<Vec3> ys{y}, es{big_e};
  const std::vector<Mat3> ls{Mat3::Identity()};
  const Vec6 expected = -3.0 * stack(y) * big_e;
  EXPECT_LT((correction_twist(Pose::identity(), ys, es, ls, 3.0).vector() - expected).norm(),
            1e-14);
  EXPECT_LT((correction_twist(Pose::identity(), ys, es, ls, 6.0).vector() - 2.0 * expected).norm(),
            1e-14);
}

TEST(CorrectionTwist, GeneralPoseDenseOracle) {
  oracle::Sampler s;
  const Pose t = s.pose();
  const std::vector<Vec3> ys{s.vec3(5), s.vec3(5)}, es{s.vec3(1), s.vec3(1)};
  const std::vector<Mat3> ls{Vec3(1.2, 0.7, 2.0).asDiagonal(), Vec3(0.9, 1.1, 1.3).asDiagonal()};
  const Mat4 tm = oracle::homogeneous(t.rotation.matrix(), t.position);
  const Mat4 ti = tm.inverse();
  Eigen::Matrix<double, 6, 6> ad_inv = Eigen::Matrix<double, 6, 6>::Zero();
  ad_inv.topLeftCorner<3, 3>() = ti.topLeftCorner<3, 3>();
  ad_inv.bottomRightCorner<3, 3>() = ti.topLeftCorner<3, 3>();
  ad_inv.bottomLeftCorner<3, 3>() =
      oracle::cross_matrix(ti.topRightCorner<3, 1>()) * ti.topLeftCorner<3, 3>();
  Vec6 sum = Vec6::Zero();
  for (int i = 0; i < 2; ++i) {
    const Vec3 x = (tm * Eigen::Vector4d(ys[i][0], ys[i][1], ys[i][2], 1.0)).head<3>();
    sum += stack(x) * ls[i] * es[i];
  }
  EXPECT_LT((correction_twist(t, ys, es, ls, 2.5).vector() + 2.5 * ad_inv * sum).norm(), 1e-12);
}

TEST(BiasRate, ZeroAndLinearInGamma) {
  const std::vector<Vec3> ys{Vec3(1, 0, 0)}, zero{Vec3::Zero()}, es{Vec3(0.1, 0.2, -0.3)};
  const std::vector<Mat3> ls{Mat3::Identity()};
  ObserverGains g = ObserverGains::uniform(1);
  EXPECT_EQ(bias_rate(Pose::identity(), ys, zero, ls, g).vector(), Vec6::Zero());
  const Vec6 a = bias_rate(Pose::identity(), ys, es, ls, g).vector();
  g.gamma *= 3.0;
  EXPECT_LT((bias_rate(Pose::identity(), ys, es, ls, g).vector() - 3.0 * a).norm(), 1e-13);
}

TEST(BiasRate, DenseMatrixOracle) {
  oracle::Sampler s;
  for (int rep = 0; rep < 50; ++rep) {
    const Pose t = s.pose();
    const Vec3 y = s.vec3(6), big_e = s.vec3(1);
    const Mat3 l = Vec3(s.uniform(0.3, 2), s.uniform(0.3, 2), s.uniform(0.3, 2)).asDiagonal();
    ObserverGains g = ObserverGains::uniform(1, 0.05);
    Mat6 a = Mat6::Random();
    g.gamma = a * a.transpose() + Mat6::Identity();
    const Mat3 r = t.rotation.matrix();
    Mat6 ad = Mat6::Zero();
    ad.topLeftCorner<3, 3>() = r;
    ad.bottomRightCorner<3, 3>() = r;
    ad.bottomLeftCorner<3, 3>() = oracle::cross_matrix(t.position) * r;
    const Vec6 expected = -(g.gamma / 0.05) * ad.transpose() * stack(r * y + t.position) * l * big_e;
    const std::vector<Vec3> ys{y}, es{big_e};
    const std::vector<Mat3> ls{l};
    const Vec6 got = bias_rate(t, ys, es, ls, g).vector();
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, expected.norm()));
  }
}

TEST(LandmarkRate, Values) {
  EXPECT_EQ(landmark_rate(Mat3::Identity(), Vec3::Zero(), 3.0), Vec3::Zero());
  EXPECT_EQ(landmark_rate(Mat3::Identity(), Vec3(1, 0, 0), 3.0), Vec3(-6, 0, 0));
  const Mat3 l = Vec3(2.0, 1.0, 0.5).asDiagonal();
  EXPECT_EQ(landmark_rate(l, Vec3(1, 1, 1), 1.0), Vec3(-2.5, -2, -2.5));
  EXPECT_THROW((void)landmark_rate(Mat3::Zero(), Vec3(1, 1, 1), 1.0), SingularLambda);
}

TEST(PoseRate, Values) {
  const Twist u{Vec3(0.1, 0.2, 0.3), Vec3(1, 2, 3)};
  EXPECT_TRUE(pose_rate(Pose::identity(), u, u, Twist::zero()).isZero(0.0));
  const Mat4 m = pose_rate(Pose::identity(), Twist{Vec3(0, 0, 1), Vec3::Zero()}, Twist::zero(),
                           Twist::zero());
  EXPECT_EQ(m, oracle::twist_matrix(Vec3(0, 0, 1), Vec3::Zero()));
  oracle::Sampler s;
  const Pose t = s.pose();
  const Twist b{s.vec3(), s.vec3()}, w{s.vec3(), s.vec3()};
  const Twist d = u - b - w;
  const Mat4 expected = oracle::homogeneous(t.rotation.matrix(), t.position) *
                        oracle::twist_matrix(d.omega, d.v);
  EXPECT_LT((pose_rate(t, u, b, w) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lyapunov, Values) {
  ObserverGains g = ObserverGains::uniform(1, 0.05);
  const std::vector<Vec3> zero{Vec3::Zero()}, one{Vec3(1, 0, 0)};
  EXPECT_EQ(lyapunov_value(zero, Twist::zero(), g), 0.0);
  EXPECT_NEAR(lyapunov_value(one, Twist::zero(), g), 10.0, 1e-12);
  EXPECT_NEAR(lyapunov_value(zero, Twist{Vec3(1, 0, 0), Vec3::Zero()}, g), 0.05, 1e-15);
}

TEST(PoseError, Cases) {
  oracle::Sampler s;
  const Pose t = s.pose();
  const PoseError same = pose_error(t, t);
  EXPECT_LT((same.rotation.matrix() - Mat3::Identity()).norm(), 1e-14);
  EXPECT_LT(same.position.norm(), 1e-13);
  const PoseError from_id = pose_error(Pose::identity(), t);
  EXPECT_EQ(from_id.rotation.matrix(), t.rotation.matrix());
  EXPECT_EQ(from_id.position, t.position);
  const Pose u = s.pose();
  const PoseError pe = pose_error(u, t);
  const Mat4 expected = t.matrix() * u.matrix().inverse();
  EXPECT_LT((Pose{pe.rotation, pe.position}.matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gains, Validation) {
  ObserverGains g = ObserverGains::uniform(4);
  EXPECT_NO_THROW(g.validate(4));
  EXPECT_THROW(g.validate(3), ConfigInvalid);
  g.gamma(0, 1) = 1.0;
  EXPECT_THROW(g.validate(4), ConfigInvalid);
  g = ObserverGains::uniform(4);
  g.gamma(2, 2) = -1.0;
  EXPECT_THROW(g.validate(4), ConfigInvalid);
  g = ObserverGains::uniform(4);
  g.k_p = 0.0;
  EXPECT_THROW(g.validate(4), ConfigInvalid);
}

TEST(Gains, ConditionMargin) {
  const EnvelopeSet envs = uniform_envelopes(2, sym(1.8));
  ObserverGains g = ObserverGains::uniform(2);
  // k_delta = 1.8, k_xi = 1.8, |mu| = 1.7/1.8
  EXPECT_NEAR(gain_condition(g, envs).c_p, 3.0 - 1.8 * 1.7, 1e-14);
  EXPECT_FALSE(gain_condition(g, envs).satisfied());
  g.k_p = 4.0;
  EXPECT_TRUE(gain_condition(g, envs).satisfied());
}

namespace {

struct Instance {
  ObserverState state;
  MeasurementFrame frame;
  EnvelopeSet envs;
  ObserverGains gains;
};

Instance perfect_instance() {
  Instance in;
  const std::vector<Vec3> map{Vec3(8, 8, 0), Vec3(-8, 8, 0), Vec3(8, -8, 0)};
  const Pose truth{so3_exp(Vec3(0.1, -0.2, 0.3)), Vec3(1, 2, 3)};
  in.state = ObserverState{truth, map, Twist::zero()};
  for (const auto& p : map) in.frame.y.push_back(pose_inverse(truth).transform_point(p));
  in.envs = uniform_envelopes(3, sym(1.8));
  in.gains = ObserverGains::uniform(3);
  return in;
}

}  // namespace

TEST(Step, FixedPointWithPerfectEstimate) {
  for (StepScheme scheme : {StepScheme::explicit_euler, StepScheme::linearly_implicit}) {
    const Instance in = perfect_instance();
    const StepResult r = step(in.state, in.frame, in.envs, in.gains, 1e-3, scheme);
    EXPECT_LT((r.state.pose_est.matrix() - in.state.pose_est.matrix()).cwiseAbs().maxCoeff(),
              1e-12);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_LT((r.state.landmark_est[i] - in.state.landmark_est[i]).norm(), 1e-12);
    }
    EXPECT_LT(r.state.bias_est.vector().norm(), 1e-12);
  }
}

TEST(Step, ExplicitEulerMatchesHandComputation) {
  const double dt = 1e-3, kp = 3.0, kw = 3.0, alpha = 0.05, gamma = 10.0;
  const PerformanceEnvelope env = sym(2.0, 2.0);
  const Vec3 p_hat(7.5, 8.4, 0.2), y(8, 8, -3);
  const Twist u_m{Vec3(0.09, 0.1, 0.1), Vec3(2.0, 0.2, -0.2)};
  const Twist b_hat{Vec3(0.01, 0.0, -0.02), Vec3(0.1, 0.0, 0.05)};

  // Hand computation, identity pose estimate, t = 0 so xi = 2.
  const Vec3 e = p_hat - y;
  Vec3 big_e, lam;
  for (int k = 0; k < 3; ++k) {
    const double r = e[k] / 2.0;
    big_e[k] = 0.5 * std::log((2.0 + r) / (2.0 - r));
    lam[k] = (1.0 / 4.0) * (1.0 / (2.0 + r) + 1.0 / (2.0 - r));
  }
  const Vec3 le = lam.cwiseProduct(big_e);
  Vec6 pile;
  pile << y.cross(le), le;
  const Vec6 w = -kw * pile;
  const Vec6 b_dot = -(gamma / alpha) * pile;
  Vec3 p_dot;
  for (int k = 0; k < 3; ++k) p_dot[k] = -kp * (lam[k] + 1.0 / lam[k]) * big_e[k];
  const Vec6 xi = u_m.vector() - b_hat.vector() - w;
  const Mat3 r_next = oracle::series_exp<Mat3>(oracle::cross_matrix(dt * xi.head<3>()));
  const Vec3 p_next = dt * xi.tail<3>();

  ObserverState s{Pose::identity(), {p_hat}, b_hat};
  MeasurementFrame f{u_m, {y}, 0.0};
  ObserverGains g = ObserverGains::uniform(1, alpha);
  g.k_p = kp;
  g.k_w = kw;
  g.gamma = gamma * Mat6::Identity();
  const StepResult out = step(s, f, EnvelopeSet{{env, env, env}}, g, dt, StepScheme::explicit_euler);

  EXPECT_LT((out.state.pose_est.rotation.matrix() - r_next).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((out.state.pose_est.position - p_next).norm(), 1e-15);
  EXPECT_LT((out.state.landmark_est[0] - (p_hat + dt * p_dot)).norm(), 1e-14);
  EXPECT_LT((out.state.bias_est.vector() - (b_hat.vector() + dt * b_dot)).norm(), 1e-13);
  EXPECT_LT((out.diagnostics.big_e[0] - big_e).norm(), 1e-15);
  EXPECT_LT((out.diagnostics.correction.vector() - w).norm(), 1e-13);
}

TEST(Step, ThrowsOutsideEnvelope) {
  Instance in = perfect_instance();
  in.state.landmark_est[1] += Vec3(0, 0, 5.0);
  try {
    (void)step(in.state, in.frame, in.envs, in.gains, 1e-3);
    FAIL();
  } catch (const EnvelopeViolation& v) {
    EXPECT_EQ(v.landmark(), 1);
    EXPECT_EQ(v.axis(), 2);
  }
}

TEST(Step, BackendsAgreeOnOneStep) {
  Instance in = perfect_instance();
  in.state.landmark_est[0] += Vec3(0.5, -0.3, 0.2);
  in.state.bias_est = Twist{Vec3(0.01, 0.02, 0.03), Vec3(0.1, -0.1, 0.2)};
  in.frame.u_m = Twist{Vec3(0.0, 0.0, 0.2), Vec3(1.8, 0.0, 0.0)};
  for (StepScheme scheme : {StepScheme::explicit_euler, StepScheme::linearly_implicit}) {
    const StepResult a = step(in.state, in.frame, in.envs, in.gains, 1e-3, scheme);
    QuaternionObserverState q{quat_from_rotation(in.state.pose_est.rotation),
                              in.state.pose_est.position, in.state.landmark_est,
                              in.state.bias_est};
    const QuaternionStepResult b = quaternion_step(q, in.frame, in.envs, in.gains, 1e-3, scheme);
    EXPECT_LT((quat_to_rotation(b.state.attitude).matrix() - a.state.pose_est.rotation.matrix())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_LT((b.state.position - a.state.pose_est.position).norm(), 1e-12);
    EXPECT_LT((b.state.bias_est.vector() - a.state.bias_est.vector()).norm(), 1e-12);
    EXPECT_NEAR(b.state.attitude.norm(), 1.0, 1e-15);
  }
}

TEST(Step, DiagnosticsDescribeInputState) {
  Instance in = perfect_instance();
  in.state.landmark_est[2] += Vec3(0.2, 0.1, -0.4);
  in.frame.t = 0.5;
  const ErrorDiagnostics d = diagnose(in.state, in.frame, in.envs, in.gains);
  EXPECT_EQ(d.t, 0.5);
  EXPECT_LT((d.e[2] - Vec3(0.2, 0.1, -0.4)).norm(), 1e-13);
  EXPECT_NEAR(d.xi[2][0], envelope_at(in.envs[2][0], 0.5), 1e-15);
  EXPECT_LT(d.big_e[0].norm(), 1e-13);
}

TEST(Step, RejectsNonPositiveDt) {
  const Instance in = perfect_instance();
  EXPECT_THROW((void)step(in.state, in.frame, in.envs, in.gains, 0.0), ConfigInvalid);
}
