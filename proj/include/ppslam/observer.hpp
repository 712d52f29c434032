#pragma once

// Nonlinear pose/landmark/bias observer with prescribed-performance shaped
// corrections. Two attitude backends (rotation matrix, unit quaternion) share
// one correction law; see ObserverState and QuaternionObserverState.
//
// Continuous dynamics, with Pi_i = [[R y_i + P]_x ; I3] (6x3):
//   dT/dt   = T [U_m - b - W]^
//   dp_i/dt = -k_p (Lambda_i + Lambda_i^-1) E_i
//   db/dt   = -sum_i Gamma/alpha_i Ad_T^T Pi_i Lambda_i E_i
//   W       = -sum_i k_w Ad_{T^-1} Pi_i Lambda_i E_i

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"
#include "ppslam/ppf.hpp"
#include "ppslam/quaternion.hpp"
#include "ppslam/tolerances.hpp"

namespace ppslam {

struct ObserverGains {
  double k_p = 3.0;
  double k_w = 3.0;
  Mat6 gamma = 10.0 * Mat6::Identity();
  std::vector<double> alpha;  // one per landmark

  [[nodiscard]] static ObserverGains uniform(std::size_t n, double alpha_i = 0.05) {
    ObserverGains g;
    g.alpha.assign(n, alpha_i);
    return g;
  }

  void validate(std::size_t n) const {
    if (!(k_p > 0.0 && k_w > 0.0)) throw ConfigInvalid("gains k_p and k_w must be positive");
    if (alpha.size() != n) {
      throw ConfigInvalid("expected " + std::to_string(n) + " alpha gains, got " +
                          std::to_string(alpha.size()));
    }
    for (double a : alpha) {
      if (!(a > 0.0)) throw ConfigInvalid("alpha gains must be positive");
    }
    if (!gamma.allFinite() || (gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigInvalid("Gamma must be symmetric");
    }
    if (Eigen::LLT<Mat6>(gamma).info() != Eigen::Success) {
      throw ConfigInvalid("Gamma must be positive definite");
    }
  }
};

/// Observer state with the attitude held as a rotation matrix.
struct ObserverState {
  Pose pose_est;
  std::vector<Vec3> landmark_est;
  Twist bias_est;
};

/// Observer state with the attitude held as a unit quaternion.
struct QuaternionObserverState {
  UnitQuaternion attitude;
  Vec3 position = Vec3::Zero();
  std::vector<Vec3> landmark_est;
  Twist bias_est;

  [[nodiscard]] Pose pose() const { return Pose{quat_to_rotation(attitude), position}; }
};

struct MeasurementFrame {
  Twist u_m;
  std::vector<Vec3> y;  // body-frame feature measurements
  double t = 0.0;
};

/// Per-step error quantities. The truth-dependent fields (Lyapunov value,
/// pose error, bias error) are filled by attach_truth().
struct ErrorDiagnostics {
  double t = 0.0;
  std::vector<Vec3> e;
  std::vector<Vec3> big_e;
  std::vector<Mat3> lambda;
  std::vector<Vec3> xi;
  Twist correction;
  bool has_truth = false;
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
  Rotation r_tilde;
  Vec3 p_tilde = Vec3::Zero();
  Twist b_tilde;
};

// ---------------------------------------------------------------------------
// Building blocks

/// e_i = p_hat_i - (R_hat y_i + P_hat).
[[nodiscard]] inline Vec3 landmark_error(const Pose& pose_est, const Vec3& p_hat,
                                         const Vec3& y) {
  return p_hat - pose_est.transform_point(y);
}

/// Pi_i = [[x]_x ; I3] where x = R_hat y_i + P_hat.
[[nodiscard]] inline Mat63 feature_stack(const Vec3& reconstructed) {
  Mat63 pi;
  pi.topRows<3>() = skew(reconstructed);
  pi.bottomRows<3>() = Mat3::Identity();
  return pi;
}

namespace detail {

inline void require_sizes(std::size_t y, std::size_t e, std::size_t l) {
  if (y != e || y != l) throw ConfigInvalid("mismatched landmark counts");
}

}  // namespace detail

/// W = -sum_i k_w Ad_{T^-1} Pi_i Lambda_i E_i.
[[nodiscard]] inline Twist correction_twist(const Pose& pose_est, std::span<const Vec3> y,
                                            std::span<const Vec3> big_e,
                                            std::span<const Mat3> lambda, double k_w) {
  detail::require_sizes(y.size(), big_e.size(), lambda.size());
  Vec6 sum = Vec6::Zero();
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += feature_stack(pose_est.transform_point(y[i])) * (lambda[i] * big_e[i]);
  }
  return Twist::from_vector(-k_w * (aug_adjoint(pose_inverse(pose_est)) * sum));
}

/// db/dt = -sum_i Gamma/alpha_i Ad_T^T Pi_i Lambda_i E_i.
[[nodiscard]] inline Twist bias_rate(const Pose& pose_est, std::span<const Vec3> y,
                                     std::span<const Vec3> big_e,
                                     std::span<const Mat3> lambda,
                                     const ObserverGains& gains) {
  detail::require_sizes(y.size(), big_e.size(), lambda.size());
  if (gains.alpha.size() != y.size()) throw ConfigInvalid("alpha size mismatch");
  Vec6 sum = Vec6::Zero();
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += (1.0 / gains.alpha[i]) *
           (feature_stack(pose_est.transform_point(y[i])) * (lambda[i] * big_e[i]));
  }
  return Twist::from_vector(-(gains.gamma * (aug_adjoint(pose_est).transpose() * sum)));
}

/// dp_i/dt = -k_p (Lambda_i + Lambda_i^-1) E_i, Lambda_i diagonal.
[[nodiscard]] inline Vec3 landmark_rate(const Mat3& lambda, const Vec3& big_e, double k_p) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    const double l = lambda(k, k);
    if (!(l >= tol::kLambdaFloor)) throw SingularLambda("Lambda has a vanishing diagonal");
    out[k] = -k_p * (l + 1.0 / l) * big_e[k];
  }
  return out;
}

/// dT/dt = T [U_m - b - W]^.
[[nodiscard]] inline Mat4 pose_rate(const Pose& pose_est, const Twist& u_m,
                                    const Twist& bias_est, const Twist& correction) {
  return pose_est.matrix() * wedge(u_m - bias_est - correction);
}

/// L = sum_i |E_i|^2 / (2 alpha_i) + 1/2 b~^T Gamma^-1 b~.
[[nodiscard]] inline double lyapunov_value(std::span<const Vec3> big_e, const Twist& b_tilde,
                                           const ObserverGains& gains) {
  if (gains.alpha.size() != big_e.size()) throw ConfigInvalid("alpha size mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < big_e.size(); ++i) {
    l += big_e[i].squaredNorm() / (2.0 * gains.alpha[i]);
  }
  const Vec6 b = b_tilde.vector();
  l += 0.5 * b.dot(gains.gamma.ldlt().solve(b));
  return l;
}

struct PoseError {
  Rotation rotation;          // R~ = R_hat R^T
  Vec3 position = Vec3::Zero();  // P~ = P_hat - R~ P
};

/// T~ = T_hat T^-1.
[[nodiscard]] inline PoseError pose_error(const Pose& truth, const Pose& est) {
  const Rotation r = est.rotation * truth.rotation.transpose();
  return PoseError{r, est.position - r * truth.position};
}

/// Fills the truth-dependent diagnostic fields.
inline void attach_truth(ErrorDiagnostics& diag, const Pose& est, const Twist& bias_est,
                         const Pose& truth, const Twist& bias_true,
                         const ObserverGains& gains) {
  const PoseError pe = pose_error(truth, est);
  diag.r_tilde = pe.rotation;
  diag.p_tilde = pe.position;
  diag.b_tilde = bias_true - bias_est;
  diag.lyapunov = lyapunov_value(diag.big_e, diag.b_tilde, gains);
  diag.has_truth = true;
}

/// Margin of the landmark-gain condition k_p > k_delta * k_xi * |mu_min|,
/// evaluated with the largest delta_bar, the largest xi0 and the most
/// negative mu (at t = 0).
struct GainCondition {
  double c_p = 0.0;
  [[nodiscard]] bool satisfied() const { return c_p > 0.0; }
};

[[nodiscard]] inline GainCondition gain_condition(const ObserverGains& gains,
                                                  const EnvelopeSet& envs) {
  double k_delta = 0.0;
  double k_xi = 0.0;
  double mu_min = 0.0;
  for (const auto& row : envs) {
    for (const auto& env : row) {
      k_delta = std::max(k_delta, env.delta_bar);
      k_xi = std::max(k_xi, env.xi0);
      mu_min = std::min(mu_min, envelope_rate(env, 0.0) / envelope_at(env, 0.0));
    }
  }
  return GainCondition{gains.k_p - k_delta * k_xi * std::abs(mu_min)};
}

// ---------------------------------------------------------------------------
// Discrete step

/// How step() advances the continuous dynamics over dt.
enum class StepScheme {
  /// R <- R exp(chi dt), everything else forward Euler.
  explicit_euler,
  /// Semi-implicit first-order update. The bias is advanced first; the
  /// kinematics driven by U_m minus the updated bias are propagated as in
  /// explicit_euler; the remaining corrections c (W and the landmark rates)
  /// are advanced linearly implicitly, dt (I - dt J_c)^-1 c, with J_c the
  /// Jacobian of c in the tangent coordinates at fixed measurements.
  /// Stays stable when the envelope gains grow stiff near xi_inf, and leaves
  /// a converged estimate exactly invariant like explicit_euler does.
  linearly_implicit,
};

namespace detail {

// Backend hooks. Tangent layout: [d_theta (body), d_P, d_p_1..d_p_n, d_b].
inline Mat3 attitude_matrix(const ObserverState& s) { return s.pose_est.rotation.matrix(); }
inline Mat3 attitude_matrix(const QuaternionObserverState& s) {
  return quat_to_rotation(s.attitude).matrix();
}
inline Vec3 rotate(const ObserverState& s, const Vec3& x) { return s.pose_est.rotation * x; }
inline Vec3 rotate(const QuaternionObserverState& s, const Vec3& x) {
  return quat_rotate(s.attitude, x);
}
inline Vec3& position(ObserverState& s) { return s.pose_est.position; }
inline const Vec3& position(const ObserverState& s) { return s.pose_est.position; }
inline Vec3& position(QuaternionObserverState& s) { return s.position; }
inline const Vec3& position(const QuaternionObserverState& s) { return s.position; }
inline void retract_attitude(ObserverState& s, const Vec3& d_theta) {
  s.pose_est.rotation = project_to_rotation((s.pose_est.rotation * so3_exp(d_theta)).matrix());
}
inline void retract_attitude(QuaternionObserverState& s, const Vec3& d_theta) {
  s.attitude = quat_integrate(s.attitude, d_theta);
}

struct Evaluation {
  ErrorDiagnostics diagnostics;
  Eigen::VectorXd nominal;     // tangent rate of the uncorrected kinematics
  Eigen::VectorXd correction;  // remaining part of the tangent vector field
};

template <class State>
Evaluation evaluate(const State& s, const MeasurementFrame& frame,
                           const EnvelopeSet& envs, const ObserverGains& gains) {
  const std::size_t n = s.landmark_est.size();
  if (frame.y.size() != n || envs.size() != n) {
    throw ConfigInvalid("measurement, envelope and state landmark counts differ");
  }
  const Vec3& p_hat = position(s);
  const Pose pose{Rotation::from_matrix_unchecked(attitude_matrix(s)), p_hat};

  Evaluation out;
  ErrorDiagnostics& d = out.diagnostics;
  d.t = frame.t;
  d.e.resize(n);
  d.big_e.resize(n);
  d.lambda.resize(n);
  d.xi.resize(n);

  // Reconstructed features R_hat y_i + P_hat; the quaternion backend uses the
  // sandwich product.
  std::vector<Vec3> recon(n);
  for (std::size_t i = 0; i < n; ++i) {
    recon[i] = rotate(s, frame.y[i]) + p_hat;
    d.e[i] = s.landmark_est[i] - recon[i];
    const TransformedError te =
        transform_error(envs[i], d.e[i], frame.t, static_cast<int>(i));
    d.big_e[i] = te.big_e;
    d.lambda[i] = te.lambda;
    d.xi[i] = te.xi;
  }

  Vec6 w_sum = Vec6::Zero();
  Vec6 b_sum = Vec6::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec6 term = feature_stack(recon[i]) * (d.lambda[i] * d.big_e[i]);
    w_sum += term;
    b_sum += term / gains.alpha[i];
  }
  d.correction = Twist::from_vector(-gains.k_w * (aug_adjoint(pose_inverse(pose)) * w_sum));
  const Vec6 b_dot = -(gains.gamma * (aug_adjoint(pose).transpose() * b_sum));

  const Eigen::Index m = static_cast<Eigen::Index>(12 + 3 * n);
  const Twist u = frame.u_m - s.bias_est;
  out.nominal = Eigen::VectorXd::Zero(m);
  out.nominal.segment<3>(0) = u.omega;
  out.nominal.segment<3>(3) = rotate(s, u.v);
  out.correction.resize(m);
  out.correction.segment<3>(0) = -d.correction.omega;
  out.correction.segment<3>(3) = -rotate(s, d.correction.v);
  for (std::size_t i = 0; i < n; ++i) {
    out.correction.segment<3>(static_cast<Eigen::Index>(6 + 3 * i)) =
        landmark_rate(d.lambda[i], d.big_e[i], gains.k_p);
  }
  out.correction.segment<6>(static_cast<Eigen::Index>(6 + 3 * n)) = b_dot;
  return out;
}

template <class State>
State retract(const State& s, const Eigen::VectorXd& z) {
  const std::size_t n = s.landmark_est.size();
  State out = s;
  retract_attitude(out, z.segment<3>(0));
  position(out) += z.segment<3>(3);
  for (std::size_t i = 0; i < n; ++i) {
    out.landmark_est[i] += z.segment<3>(static_cast<Eigen::Index>(6 + 3 * i));
  }
  out.bias_est += Twist::from_vector(z.segment<6>(static_cast<Eigen::Index>(6 + 3 * n)));
  return out;
}

/// Forward-difference Jacobian of the correction field around the already
/// evaluated base point. The correction does not depend on the bias
/// estimate, so those columns stay zero. Returns nullopt if a perturbed state
/// leaves an envelope.
template <class State>
std::optional<Eigen::MatrixXd> tangent_jacobian(const State& s, const MeasurementFrame& frame,
                                                const EnvelopeSet& envs,
                                                const ObserverGains& gains,
                                                const Eigen::VectorXd& base) {
  constexpr double kStep = 1e-7;
  const Eigen::Index m = base.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  try {
    for (Eigen::Index j = 0; j < m - 6; ++j) {
      z[j] = kStep;
      jac.col(j) = (evaluate(retract(s, z), frame, envs, gains).correction - base) / kStep;
      z[j] = 0.0;
    }
  } catch (const EnvelopeViolation&) {
    return std::nullopt;
  }
  return jac;
}

template <class State>
struct GenericStepResult {
  State state;
  ErrorDiagnostics diagnostics;
};

template <class State>
GenericStepResult<State> advance(const State& s, const MeasurementFrame& frame,
                                 const EnvelopeSet& envs, const ObserverGains& gains,
                                 double dt, StepScheme scheme) {
  if (!(dt > 0.0)) throw ConfigInvalid("dt must be positive");
  Evaluation ev = evaluate(s, frame, envs, gains);
  Eigen::VectorXd z = dt * (ev.nominal + ev.correction);
  if (scheme == StepScheme::linearly_implicit) {
    if (auto jac = tangent_jacobian(s, frame, envs, gains, ev.correction)) {
      const Eigen::Index m = z.size();
      // Bias first; the nominal kinematics then use the updated bias.
      const Vec6 db = dt * ev.correction.tail<6>();
      Eigen::VectorXd nominal = ev.nominal;
      nominal.segment<3>(0) -= db.head<3>();
      nominal.segment<3>(3) -= rotate(s, Vec3(db.tail<3>()));
      Eigen::VectorXd c = ev.correction;
      c.tail<6>().setZero();
      jac->bottomRows(6).setZero();
      const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) - dt * (*jac);
      z = dt * (nominal + Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(c));
      z.tail<6>() = db;
    }
  }
  return {retract(s, z), std::move(ev.diagnostics)};
}

}  // namespace detail

struct StepResult {
  ObserverState state;
  ErrorDiagnostics diagnostics;
};

struct QuaternionStepResult {
  QuaternionObserverState state;
  ErrorDiagnostics diagnostics;
};

/// Error quantities of the current state at frame.t without advancing.
[[nodiscard]] inline ErrorDiagnostics diagnose(const ObserverState& s,
                                               const MeasurementFrame& frame,
                                               const EnvelopeSet& envs,
                                               const ObserverGains& gains) {
  return detail::evaluate(s, frame, envs, gains).diagnostics;
}

[[nodiscard]] inline ErrorDiagnostics diagnose(const QuaternionObserverState& s,
                                               const MeasurementFrame& frame,
                                               const EnvelopeSet& envs,
                                               const ObserverGains& gains) {
  return detail::evaluate(s, frame, envs, gains).diagnostics;
}

/// Advances the matrix-backend observer from frame.t to frame.t + dt.
/// The returned diagnostics describe the input state at frame.t.
/// Throws EnvelopeViolation if any error component is outside its envelope.
[[nodiscard]] inline StepResult step(const ObserverState& s, const MeasurementFrame& frame,
                                     const EnvelopeSet& envs, const ObserverGains& gains,
                                     double dt,
                                     StepScheme scheme = StepScheme::linearly_implicit) {
  auto r = detail::advance(s, frame, envs, gains, dt, scheme);
  return {std::move(r.state), std::move(r.diagnostics)};
}

/// Quaternion-backend counterpart of step(); the attitude is renormalized
/// after every update.
[[nodiscard]] inline QuaternionStepResult quaternion_step(
    const QuaternionObserverState& s, const MeasurementFrame& frame, const EnvelopeSet& envs,
    const ObserverGains& gains, double dt,
    StepScheme scheme = StepScheme::linearly_implicit) {
  auto r = detail::advance(s, frame, envs, gains, dt, scheme);
  return {std::move(r.state), std::move(r.diagnostics)};
}

}  // namespace ppslam
