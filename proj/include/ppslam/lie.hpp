#pragma once

// Rigid-body primitives: SO(3), SE(3), their algebras, the augmented adjoint,
// and the pose-plus-landmarks product state.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ppslam/errors.hpp"
#include "ppslam/tolerances.hpp"

namespace ppslam {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

/// [y]_x, so that skew(y) * z == y.cross(z).
[[nodiscard]] inline Mat3 skew(const Vec3& y) {
  Mat3 s;
  // clang-format off
  s <<   0.0, -y.z(),  y.y(),
       y.z(),    0.0, -y.x(),
      -y.y(),  y.x(),    0.0;
  // clang-format on
  return s;
}

/// Inverse of skew(). Throws NonAntisymmetric when ||M + M^T|| >= tolerance.
[[nodiscard]] inline Vec3 vee(const Mat3& m) {
  if (!((m + m.transpose()).norm() < tol::kAntisymmetry)) {
    throw NonAntisymmetric("vee: matrix is not antisymmetric");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

[[nodiscard]] inline bool is_rotation_matrix(const Mat3& m,
                                             double tolerance = tol::kOrthonormality) {
  if (!m.allFinite()) return false;
  return (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tolerance &&
         std::abs(m.determinant() - 1.0) <= tolerance;
}

/// Element of SO(3). Construction through from_matrix() checks orthonormality;
/// the default value is the identity.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  [[nodiscard]] static Rotation identity() { return Rotation(); }

  [[nodiscard]] static Rotation from_matrix(const Mat3& m) {
    if (!is_rotation_matrix(m)) {
      throw InvalidRotation("matrix is not in SO(3)");
    }
    return Rotation(m, Unchecked{});
  }

  /// For results that are rotations by construction (products, exponentials).
  [[nodiscard]] static Rotation from_matrix_unchecked(const Mat3& m) {
    return Rotation(m, Unchecked{});
  }

  [[nodiscard]] const Mat3& matrix() const { return m_; }
  [[nodiscard]] Rotation transpose() const {
    return Rotation(m_.transpose(), Unchecked{});
  }
  [[nodiscard]] Rotation operator*(const Rotation& other) const {
    return Rotation(m_ * other.m_, Unchecked{});
  }
  [[nodiscard]] Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

/// Element of SE(3): attitude plus position, both with respect to the inertial frame.
struct Pose {
  Rotation rotation;
  Vec3 position = Vec3::Zero();

  [[nodiscard]] static Pose identity() { return Pose{}; }

  [[nodiscard]] static Pose from_matrix(const Mat4& t) {
    if ((t.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() >
        tol::kOrthonormality) {
      throw InvalidRotation("homogeneous matrix last row must be [0 0 0 1]");
    }
    return Pose{Rotation::from_matrix(t.topLeftCorner<3, 3>()),
                t.topRightCorner<3, 1>()};
  }

  [[nodiscard]] Mat4 matrix() const {
    Mat4 t = Mat4::Identity();
    t.topLeftCorner<3, 3>() = rotation.matrix();
    t.topRightCorner<3, 1>() = position;
    return t;
  }

  [[nodiscard]] Pose operator*(const Pose& other) const {
    return Pose{rotation * other.rotation, rotation * other.position + position};
  }

  /// Maps a point (w = 1): R x + P.
  [[nodiscard]] Vec3 transform_point(const Vec3& x) const {
    return rotation * x + position;
  }
};

/// U = [omega; v], angular (rad/s) and translational (m/s) velocity.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  [[nodiscard]] static Twist zero() { return Twist{}; }

  [[nodiscard]] static Twist from_vector(const Vec6& u) {
    return Twist{u.head<3>(), u.tail<3>()};
  }

  [[nodiscard]] Vec6 vector() const {
    Vec6 u;
    u << omega, v;
    return u;
  }

  Twist& operator+=(const Twist& o) {
    omega += o.omega;
    v += o.v;
    return *this;
  }
  Twist& operator-=(const Twist& o) {
    omega -= o.omega;
    v -= o.v;
    return *this;
  }
  [[nodiscard]] friend Twist operator+(Twist a, const Twist& b) { return a += b; }
  [[nodiscard]] friend Twist operator-(Twist a, const Twist& b) { return a -= b; }
  [[nodiscard]] friend Twist operator*(double s, const Twist& a) {
    return Twist{s * a.omega, s * a.v};
  }
};

/// A vector of R^4 with w = 1 (point, M-bar) or w = 0 (direction, M-circle).
struct HomogeneousPoint {
  Vec3 p = Vec3::Zero();
  double w = 1.0;

  [[nodiscard]] static HomogeneousPoint point(const Vec3& p) { return {p, 1.0}; }
  [[nodiscard]] static HomogeneousPoint direction(const Vec3& p) { return {p, 0.0}; }

  [[nodiscard]] Vec4 vector() const {
    Vec4 out;
    out << p, w;
    return out;
  }
};

/// Pose together with n landmark positions (the product group SE(3) x M-bar^n).
struct SlamState {
  Pose pose;
  std::vector<Vec3> landmarks;

  [[nodiscard]] std::size_t size() const { return landmarks.size(); }

  [[nodiscard]] std::vector<HomogeneousPoint> homogeneous_landmarks() const {
    std::vector<HomogeneousPoint> out;
    out.reserve(landmarks.size());
    for (const auto& p : landmarks) out.push_back(HomogeneousPoint::point(p));
    return out;
  }
};

/// Feature-set requirement: at least three landmarks spanning a plane.
[[nodiscard]] inline bool landmarks_define_plane(const std::vector<Vec3>& landmarks,
                                                 double tolerance = 1e-9) {
  if (landmarks.size() < 3) return false;
  const Vec3& a = landmarks.front();
  for (std::size_t i = 1; i < landmarks.size(); ++i) {
    for (std::size_t j = i + 1; j < landmarks.size(); ++j) {
      if ((landmarks[i] - a).cross(landmarks[j] - a).norm() > tolerance) return true;
    }
  }
  return false;
}

/// [U]^ in se(3).
[[nodiscard]] inline Mat4 wedge(const Twist& u) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = skew(u.omega);
  m.topRightCorner<3, 1>() = u.v;
  return m;
}

/// Closed-form exponential of [w]_x (Rodrigues). Uses the second-order
/// series when |w| is below the small-angle threshold.
[[nodiscard]] inline Rotation so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  if (theta < tol::kSmallAngle) {
    return Rotation::from_matrix_unchecked(Mat3::Identity() + k + 0.5 * k * k);
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Rotation::from_matrix_unchecked(Mat3::Identity() + a * k + b * k * k);
}

[[nodiscard]] inline Pose pose_inverse(const Pose& t) {
  const Rotation rt = t.rotation.transpose();
  return Pose{rt, -(rt * t.position)};
}

/// 6x6 matrix form of Ad_T acting on twists ordered [omega; v]:
/// [[R, 0], [[P]_x R, R]].
[[nodiscard]] inline Mat6 aug_adjoint(const Pose& t) {
  const Mat3& r = t.rotation.matrix();
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = r;
  a.bottomRightCorner<3, 3>() = r;
  a.bottomLeftCorner<3, 3>() = skew(t.position) * r;
  return a;
}

/// Nearest rotation in the Frobenius norm (polar factor via SVD).
/// Throws DegenerateMatrix when det(M) <= 0.
[[nodiscard]] inline Rotation project_to_rotation(const Mat3& m) {
  if (!m.allFinite() || !(m.determinant() > 0.0)) {
    throw DegenerateMatrix("project_to_rotation: det(M) must be positive");
  }
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Rotation::from_matrix_unchecked(svd.matrixU() * svd.matrixV().transpose());
}

}  // namespace ppslam
