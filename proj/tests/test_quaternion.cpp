#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "ppslam/quaternion.hpp"

using namespace ppslam;

namespace {

UnitQuaternion random_quaternion(oracle::Sampler& s) {
  std::normal_distribution<double> n(0.0, 1.0);
  UnitQuaternion q{n(s.engine()), Vec3(n(s.engine()), n(s.engine()), n(s.engine()))};
  return q.normalized();
}

// Axis-angle of a unit quaternion, used as an independent route to SO(3).
Vec3 rotation_vector(const UnitQuaternion& q) {
  const double sign = q.q0 < 0.0 ? -1.0 : 1.0;
  const double s = q.q.norm();
  if (s == 0.0) return Vec3::Zero();
  return 2.0 * std::atan2(s, sign * q.q0) * sign * q.q / s;
}

}  // namespace

TEST(QuatToRotation, IdentityAndQuarterTurn) {
  EXPECT_EQ(quat_to_rotation(UnitQuaternion::identity()).matrix(), Mat3::Identity());
  const double c = std::cos(std::numbers::pi / 4);
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Mat3 r = quat_to_rotation(UnitQuaternion{c, Vec3(0, 0, c)}).matrix();
  EXPECT_LT((r - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(QuatToRotation, MatchesAxisAngleExponential) {
  oracle::Sampler s;
  for (int i = 0; i < 500; ++i) {
    const UnitQuaternion q = random_quaternion(s);
    const Mat3 ref = oracle::series_exp<Mat3>(oracle::cross_matrix(rotation_vector(q)), 40);
    EXPECT_LT((quat_to_rotation(q).matrix() - ref).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(QuatToRotation, RejectsNonUnit) {
  EXPECT_THROW((void)quat_to_rotation(UnitQuaternion{2.0, Vec3::Zero()}), NonUnitQuaternion);
}

TEST(QuatFromRotation, RoundTrip) {
  oracle::Sampler s;
  for (int i = 0; i < 500; ++i) {
    const Mat3 r = s.rotation();
    EXPECT_LT((quat_to_rotation(quat_from_rotation(Rotation::from_matrix_unchecked(r))).matrix() - r)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
  }
  const Mat3 half_turn = so3_exp(Vec3(std::numbers::pi, 0, 0)).matrix();
  EXPECT_LT((quat_to_rotation(quat_from_rotation(Rotation::from_matrix_unchecked(half_turn)))
                 .matrix() -
             half_turn)
                .norm(),
            1e-14);
}

TEST(QuatMultiply, IdentityAndInverse) {
  oracle::Sampler s;
  const UnitQuaternion q = random_quaternion(s);
  const UnitQuaternion a = quat_multiply(q, UnitQuaternion::identity());
  EXPECT_LT((a.vector() - q.vector()).norm(), 1e-15);
  const UnitQuaternion b = quat_multiply(q, q.inverse());
  EXPECT_NEAR(std::abs(b.q0), 1.0, 1e-15);
  EXPECT_LT(b.q.norm(), 1e-15);
}

TEST(QuatMultiply, Homomorphism) {
  oracle::Sampler s;
  for (int i = 0; i < 500; ++i) {
    const UnitQuaternion a = random_quaternion(s), b = random_quaternion(s);
    const Mat3 lhs = quat_to_rotation(quat_multiply(a, b)).matrix();
    const Mat3 rhs = quat_to_rotation(a).matrix() * quat_to_rotation(b).matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(QuatRotate, IdentityQuarterTurnAndMatrixProduct) {
  EXPECT_EQ(quat_rotate(UnitQuaternion::identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3));
  const double c = std::cos(std::numbers::pi / 4);
  EXPECT_LT((quat_rotate(UnitQuaternion{c, Vec3(0, 0, c)}, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm(),
            1e-15);
  oracle::Sampler s;
  for (int i = 0; i < 500; ++i) {
    const UnitQuaternion q = random_quaternion(s);
    const Vec3 x = s.vec3(10);
    EXPECT_LT((quat_rotate(q, x) - quat_to_rotation(q).matrix() * x).norm(), 1e-13);
  }
}

TEST(QuatIntegrate, ZeroRateLeavesAttitude) {
  oracle::Sampler s;
  const UnitQuaternion q = random_quaternion(s);
  EXPECT_LT((quat_integrate(q, Vec3::Zero()).vector() - q.vector()).norm(), 1e-16);
}

TEST(QuatIntegrate, AgreesWithRightExponential) {
  oracle::Sampler s;
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = random_quaternion(s);
    const Vec3 w = s.vec3(0.5);
    const Mat3 ref = quat_to_rotation(q).matrix() * oracle::series_exp<Mat3>(oracle::cross_matrix(w));
    EXPECT_LT((quat_to_rotation(quat_integrate(q, w)).matrix() - ref).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(QuatIntegrate, NormStaysUnitOverManySteps) {
  UnitQuaternion q;
  const Vec3 w(0.3, -0.1, 0.2);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    q = quat_integrate(q, 1e-3 * w);
    worst = std::max(worst, std::abs(q.norm() - 1.0));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(QuatRate, MatchesFiniteDifferenceOfFlow) {
  oracle::Sampler s;
  const UnitQuaternion q = random_quaternion(s);
  const Vec3 w(0.4, -0.7, 1.1);
  const double h = 1e-6;
  const Vec4 fd = (quat_integrate(q, h * w).vector() - quat_integrate(q, -h * w).vector()) / (2 * h);
  EXPECT_LT((quat_rate(q, w) - fd).norm(), 1e-8);
}
