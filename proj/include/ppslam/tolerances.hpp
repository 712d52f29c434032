#pragma once

// Numeric thresholds shared by the library and its test suites. Keep every
// pass/fail threshold here so both sides agree on the exact value.

namespace ppslam::tol {

/// Orthonormality / determinant slack accepted for a Rotation.
inline constexpr double kOrthonormality = 1e-9;
/// ||M + M^T|| bound for vee().
inline constexpr double kAntisymmetry = 1e-9;
/// Below this angle so3_exp switches to its series branch.
inline constexpr double kSmallAngle = 1e-8;
/// Accepted deviation of |Q| from one on input.
inline constexpr double kQuaternionNorm = 1e-9;
/// Post-renormalization quaternion norm error.
inline constexpr double kQuaternionRenorm = 1e-12;
/// Relative guard band kept between e/xi and the envelope edge delta.
inline constexpr double kEnvelopeGuard = 1e-12;
/// Smallest admissible diagonal entry of Lambda before it is treated as singular.
inline constexpr double kLambdaFloor = 1e-300;
/// Allowed Lyapunov growth rate (per second) attributable to integration slack.
inline constexpr double kLyapunovSlackRate = 1e-6;

}  // namespace ppslam::tol
