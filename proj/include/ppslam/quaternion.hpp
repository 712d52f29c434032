#pragma once

// Unit-quaternion attitude backend. Q = [q0, q], scalar first; the product
// and the map to SO(3) follow the convention R_Q = (q0^2 - |q|^2) I + 2 q q^T
// + 2 q0 [q]_x, so that quat_rotate(Q, x) == quat_to_rotation(Q) * x.

#include <cmath>

#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"
#include "ppslam/tolerances.hpp"

namespace ppslam {

struct UnitQuaternion {
  double q0 = 1.0;
  Vec3 q = Vec3::Zero();

  [[nodiscard]] static UnitQuaternion identity() { return UnitQuaternion{}; }

  [[nodiscard]] double norm() const { return std::sqrt(q0 * q0 + q.squaredNorm()); }

  [[nodiscard]] UnitQuaternion normalized() const {
    const double n = norm();
    return UnitQuaternion{q0 / n, q / n};
  }

  [[nodiscard]] UnitQuaternion inverse() const { return UnitQuaternion{q0, -q}; }

  [[nodiscard]] Vec4 vector() const {
    Vec4 out;
    out << q0, q;
    return out;
  }
};

namespace detail {

// Hamilton product on raw 4-vectors; no normalization.
[[nodiscard]] inline UnitQuaternion hamilton(const UnitQuaternion& a,
                                             const UnitQuaternion& b) {
  return UnitQuaternion{a.q0 * b.q0 - a.q.dot(b.q),
                        a.q0 * b.q + b.q0 * a.q + a.q.cross(b.q)};
}

inline void require_unit(const UnitQuaternion& quat, const char* where) {
  if (!(std::abs(quat.norm() - 1.0) <= tol::kQuaternionNorm)) {
    throw NonUnitQuaternion(std::string(where) + ": quaternion is not unit norm");
  }
}

}  // namespace detail

[[nodiscard]] inline Rotation quat_to_rotation(const UnitQuaternion& quat) {
  detail::require_unit(quat, "quat_to_rotation");
  const double s = quat.q0;
  const Vec3& v = quat.q;
  const Mat3 r = (s * s - v.squaredNorm()) * Mat3::Identity() +
                 2.0 * v * v.transpose() + 2.0 * s * skew(v);
  return Rotation::from_matrix_unchecked(r);
}

/// Inverse of quat_to_rotation with q0 >= 0 (Shepperd's method).
[[nodiscard]] inline UnitQuaternion quat_from_rotation(const Rotation& rot) {
  const Mat3& m = rot.matrix();
  const double tr = m.trace();
  UnitQuaternion out;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    out = {0.25 * s, Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) / s};
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    out = {(m(2, 1) - m(1, 2)) / s,
           Vec3(0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s)};
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    out = {(m(0, 2) - m(2, 0)) / s,
           Vec3((m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s)};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    out = {(m(1, 0) - m(0, 1)) / s,
           Vec3((m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s)};
  }
  if (out.q0 < 0.0) out = {-out.q0, -out.q};
  return out.normalized();
}

/// Q1 (.) Q2, renormalized.
[[nodiscard]] inline UnitQuaternion quat_multiply(const UnitQuaternion& a,
                                                  const UnitQuaternion& b) {
  return detail::hamilton(a, b).normalized();
}

/// Vector part of Q (.) [0, x] (.) Q^-1.
[[nodiscard]] inline Vec3 quat_rotate(const UnitQuaternion& quat, const Vec3& x) {
  const UnitQuaternion pure{0.0, x};
  return detail::hamilton(detail::hamilton(quat, pure), quat.inverse()).q;
}

/// Exact flow of dQ/dt = 1/2 [[0, -w^T], [w, -[w]_x]] Q over one step with
/// constant body rate, i.e. Q (.) [cos(|w dt|/2), sin(|w dt|/2) w/|w|].
/// The caller passes the rotation vector w * dt.
[[nodiscard]] inline UnitQuaternion quat_integrate(const UnitQuaternion& quat,
                                                   const Vec3& rotation_vector) {
  const double theta = rotation_vector.norm();
  UnitQuaternion delta;
  if (theta < tol::kSmallAngle) {
    delta = UnitQuaternion{1.0 - theta * theta / 8.0, 0.5 * rotation_vector};
  } else {
    delta = UnitQuaternion{std::cos(0.5 * theta),
                           std::sin(0.5 * theta) / theta * rotation_vector};
  }
  return quat_multiply(quat, delta);
}

/// Right-hand side of the quaternion kinematics for body rate chi.
[[nodiscard]] inline Vec4 quat_rate(const UnitQuaternion& quat, const Vec3& chi) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a.block<1, 3>(0, 1) = -chi.transpose();
  a.block<3, 1>(1, 0) = chi;
  a.block<3, 3>(1, 1) = -skew(chi);
  return 0.5 * a * quat.vector();
}

}  // namespace ppslam
