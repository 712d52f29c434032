#pragma once

// Prescribed-performance envelopes. Each error component e is kept inside
// (-delta_under * xi(t), delta_bar * xi(t)) by observing it through the
// transformed error E = F^-1(e / xi), which is finite exactly on that interval.

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"
#include "ppslam/tolerances.hpp"

namespace ppslam {

/// Parameters of one exponentially shrinking bound
/// xi(t) = (xi0 - xi_inf) exp(-ell t) + xi_inf, plus the transform limits.
struct PerformanceEnvelope {
  double xi0 = 1.8;
  double xi_inf = 0.1;
  double ell = 1.0;
  double delta_bar = 1.8;
  double delta_under = 1.8;

  [[nodiscard]] bool symmetric() const { return delta_bar == delta_under; }

  void validate() const {
    if (!(xi0 > xi_inf && xi_inf > 0.0)) {
      throw ConfigInvalid("envelope requires xi0 > xi_inf > 0");
    }
    if (!(ell > 0.0)) throw ConfigInvalid("envelope requires ell > 0");
    if (!(delta_bar > 0.0 && delta_under > 0.0)) {
      throw ConfigInvalid("envelope requires positive delta_bar and delta_under");
    }
  }

  /// Ordering of the two limits expected for an error starting at e0:
  /// delta_under <= delta_bar when e0 >= 0, the reverse otherwise.
  [[nodiscard]] bool consistent_with(double e0) const {
    return e0 >= 0.0 ? delta_under <= delta_bar : delta_bar <= delta_under;
  }
};

/// Envelopes for one landmark, one per axis.
using LandmarkEnvelopes = std::array<PerformanceEnvelope, 3>;
/// Envelopes for all landmarks (n x 3).
using EnvelopeSet = std::vector<LandmarkEnvelopes>;

[[nodiscard]] inline double envelope_at(const PerformanceEnvelope& env, double t) {
  return (env.xi0 - env.xi_inf) * std::exp(-env.ell * t) + env.xi_inf;
}

/// d xi / dt.
[[nodiscard]] inline double envelope_rate(const PerformanceEnvelope& env, double t) {
  return -env.ell * (env.xi0 - env.xi_inf) * std::exp(-env.ell * t);
}

/// F(E) = (delta_bar e^E - delta_under e^-E) / (e^E + e^-E), written in a
/// form that does not overflow for large |E|.
[[nodiscard]] inline double smooth_transform(double big_e, const PerformanceEnvelope& env) {
  if (big_e >= 0.0) {
    const double z = std::exp(-2.0 * big_e);
    return (env.delta_bar - env.delta_under * z) / (1.0 + z);
  }
  const double z = std::exp(2.0 * big_e);
  return (env.delta_bar * z - env.delta_under) / (z + 1.0);
}

namespace detail {

inline double checked_ratio(double e, double xi, const PerformanceEnvelope& env) {
  if (!(xi > 0.0)) throw EnvelopeViolation("envelope value xi must be positive");
  const double r = e / xi;
  const double upper = env.delta_bar * (1.0 - tol::kEnvelopeGuard);
  const double lower = -env.delta_under * (1.0 - tol::kEnvelopeGuard);
  if (!(r > lower && r < upper)) {
    std::ostringstream msg;
    msg << "error ratio e/xi = " << r << " outside (" << -env.delta_under << ", "
        << env.delta_bar << ")";
    throw EnvelopeViolation(msg.str(), -1, -1, r);
  }
  return r;
}

}  // namespace detail

/// E = 1/2 ln((delta_under + e/xi) / (delta_bar - e/xi)).
/// Throws EnvelopeViolation when e/xi is not strictly inside the envelope.
[[nodiscard]] inline double inverse_transform(double e, double xi,
                                              const PerformanceEnvelope& env) {
  const double r = detail::checked_ratio(e, xi, env);
  return 0.5 * std::log((env.delta_under + r) / (env.delta_bar - r));
}

/// dE/de = 1/(2 xi) * (1/(delta_under + e/xi) + 1/(delta_bar - e/xi)); positive.
[[nodiscard]] inline double eta(double e, double xi, const PerformanceEnvelope& env) {
  const double r = detail::checked_ratio(e, xi, env);
  return 0.5 / xi * (1.0 / (env.delta_under + r) + 1.0 / (env.delta_bar - r));
}

/// Diagonal gain matrices for one landmark: Lambda = diag(eta_k), mu = diag(xi_dot_k / xi_k).
struct LambdaMu {
  Mat3 lambda = Mat3::Identity();
  Mat3 mu = Mat3::Zero();
};

[[nodiscard]] inline LambdaMu lambda_mu(const LandmarkEnvelopes& envs, const Vec3& e,
                                        double t) {
  LambdaMu out;
  out.lambda.setZero();
  for (int k = 0; k < 3; ++k) {
    const double xi = envelope_at(envs[k], t);
    out.lambda(k, k) = eta(e[k], xi, envs[k]);
    out.mu(k, k) = envelope_rate(envs[k], t) / xi;
  }
  return out;
}

/// Transformed error and gains for one landmark at time t.
struct TransformedError {
  Vec3 big_e = Vec3::Zero();
  Mat3 lambda = Mat3::Identity();
  Mat3 mu = Mat3::Zero();
  Vec3 xi = Vec3::Zero();
};

/// Evaluates E, Lambda and mu for one landmark. The thrown EnvelopeViolation
/// carries the axis; the landmark index is filled in by the caller.
[[nodiscard]] inline TransformedError transform_error(const LandmarkEnvelopes& envs,
                                                      const Vec3& e, double t,
                                                      int landmark = -1) {
  TransformedError out;
  out.lambda.setZero();
  for (int k = 0; k < 3; ++k) {
    const double xi = envelope_at(envs[k], t);
    out.xi[k] = xi;
    try {
      out.big_e[k] = inverse_transform(e[k], xi, envs[k]);
      out.lambda(k, k) = eta(e[k], xi, envs[k]);
    } catch (const EnvelopeViolation& v) {
      std::ostringstream msg;
      msg << "envelope violation at t=" << t << " landmark " << landmark << " axis " << k
          << ": " << v.what();
      throw EnvelopeViolation(msg.str(), landmark, k, v.ratio());
    }
    out.mu(k, k) = envelope_rate(envs[k], t) / xi;
  }
  return out;
}

/// Envelope initialization from the initial error:
/// xi0 = delta_bar = delta_under = scale * |e0| + offset.
struct EnvelopeRule {
  double scale = 1.2;
  double offset = 1.8;
  double xi_inf = 0.1;
  double ell = 1.0;

  void validate() const {
    if (!(scale >= 0.0 && offset > 0.0)) {
      throw ConfigInvalid("envelope rule requires scale >= 0 and offset > 0");
    }
    if (!(offset > xi_inf && xi_inf > 0.0 && ell > 0.0)) {
      throw ConfigInvalid("envelope rule requires offset > xi_inf > 0 and ell > 0");
    }
  }
};

[[nodiscard]] inline PerformanceEnvelope envelope_from_initial_error(
    double e0, const EnvelopeRule& rule = {}) {
  const double bound = rule.scale * std::abs(e0) + rule.offset;
  return PerformanceEnvelope{bound, rule.xi_inf, rule.ell, bound, bound};
}

/// Builds the n x 3 envelope table from the initial landmark errors.
[[nodiscard]] inline EnvelopeSet envelopes_from_initial_errors(
    const std::vector<Vec3>& e0, const EnvelopeRule& rule = {}) {
  EnvelopeSet out;
  out.reserve(e0.size());
  for (const auto& e : e0) {
    out.push_back({envelope_from_initial_error(e.x(), rule),
                   envelope_from_initial_error(e.y(), rule),
                   envelope_from_initial_error(e.z(), rule)});
  }
  return out;
}

}  // namespace ppslam
