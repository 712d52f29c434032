#pragma once

// Co-simulation of truth and observer, CSV run logs, run metrics and the
// matrix/quaternion cross-check.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppslam/config.hpp"
#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"
#include "ppslam/observer.hpp"
#include "ppslam/ppf.hpp"
#include "ppslam/quaternion.hpp"
#include "ppslam/world.hpp"

namespace ppslam {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LogRow {
  double t = 0.0;
  Pose truth;
  Pose est;
  std::vector<Vec3> truth_landmarks;
  std::vector<Vec3> est_landmarks;
  std::vector<Vec3> e;
  std::vector<Vec3> big_e;  // NaN on the row that records an envelope exit
  std::vector<Vec3> upper;  // delta_bar * xi
  std::vector<Vec3> lower;  // -delta_under * xi
  Twist bias_est;
  Twist bias_tilde;
  double lyapunov = kNaN;
};

struct RunLog {
  Backend backend = Backend::matrix;
  std::size_t landmark_count = 0;
  std::vector<LogRow> rows;
};

// ---------------------------------------------------------------------------
// Simulation core

/// One observer sample at step k. diagnostics is null when the state at t
/// has left an envelope; the run stops after that sample.
struct Sample {
  long k = 0;
  double t = 0.0;
  const TruthState* truth = nullptr;
  Pose est;
  const std::vector<Vec3>* est_landmarks = nullptr;
  Twist bias_est;
  const std::vector<Vec3>* y = nullptr;
  const ErrorDiagnostics* diagnostics = nullptr;
};

struct SimulationStatus {
  EnvelopeSet envelopes;
  long steps = 0;  // completed observer steps
  bool failed = false;
  std::string failure;
};

namespace detail {

inline ObserverState make_state(const InitialEstimate& init, ObserverState*) {
  return ObserverState{Pose{init.attitude, init.position}, init.landmarks, init.bias};
}

inline QuaternionObserverState make_state(const InitialEstimate& init,
                                          QuaternionObserverState*) {
  return QuaternionObserverState{quat_from_rotation(init.attitude), init.position,
                                 init.landmarks, init.bias};
}

template <class State>
Pose pose_of(const State& s) {
  return Pose{Rotation::from_matrix_unchecked(attitude_matrix(s)), position(s)};
}

inline EnvelopeSet initial_envelopes(const ExperimentConfig& cfg, const Pose& est,
                                     const std::vector<Vec3>& y) {
  if (cfg.envelopes) return *cfg.envelopes;
  std::vector<Vec3> e0;
  e0.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    e0.push_back(landmark_error(est, cfg.initial.landmarks[i], y[i]));
  }
  return envelopes_from_initial_errors(e0, cfg.envelope_rule);
}

template <class State, class Callback>
SimulationStatus simulate(const ExperimentConfig& cfg, Callback&& on_sample) {
  const ScenarioConfig& sc = cfg.scenario;
  const long steps = cfg.step_count();
  const double dt = sc.dt;
  SimulationStatus status;
  Rng rng(sc.seed);
  TruthState truth = initial_truth(sc);
  State s = make_state(cfg.initial, static_cast<State*>(nullptr));

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    truth.t = t;
    MeasurementFrame frame;
    frame.u_m = measure_velocity(sc.twist_true(), sc, rng);
    frame.y = measure_landmarks(truth, rng, sc.feature_noise_std);
    frame.t = t;
    const Pose est = pose_of(s);
    if (k == 0) status.envelopes = initial_envelopes(cfg, est, frame.y);

    Sample sample{k, t, &truth, est, &s.landmark_est, s.bias_est, &frame.y, nullptr};
    try {
      if (k == steps) {
        ErrorDiagnostics d = evaluate(s, frame, status.envelopes, cfg.gains).diagnostics;
        attach_truth(d, est, s.bias_est, truth.pose, sc.bias_true, cfg.gains);
        sample.diagnostics = &d;
        on_sample(sample);
        break;
      }
      auto r = advance(s, frame, status.envelopes, cfg.gains, dt, cfg.scheme);
      attach_truth(r.diagnostics, est, s.bias_est, truth.pose, sc.bias_true, cfg.gains);
      sample.diagnostics = &r.diagnostics;
      on_sample(sample);
      s = std::move(r.state);
      status.steps = k + 1;
    } catch (const EnvelopeViolation& ex) {
      sample.diagnostics = nullptr;
      on_sample(sample);
      status.failed = true;
      status.failure = ex.what();
      break;
    }
    truth = truth_step(truth, sc, dt);
  }
  return status;
}

}  // namespace detail

/// Runs the configured scenario with the given backend, calling on_sample
/// once per step (and once for the final state).
template <class Callback>
SimulationStatus simulate(const ExperimentConfig& cfg, Backend backend, Callback&& on_sample) {
  cfg.validate();
  if (backend == Backend::matrix) {
    return detail::simulate<ObserverState>(cfg, std::forward<Callback>(on_sample));
  }
  return detail::simulate<QuaternionObserverState>(cfg, std::forward<Callback>(on_sample));
}

/// Builds the log row for a sample. Envelope bounds are recomputed at t.
[[nodiscard]] inline LogRow make_row(const Sample& s, const EnvelopeSet& envs,
                                     const Twist& bias_true) {
  const std::size_t n = s.y->size();
  LogRow row;
  row.t = s.t;
  row.truth = s.truth->pose;
  row.est = s.est;
  row.truth_landmarks = s.truth->landmarks;
  row.est_landmarks = *s.est_landmarks;
  row.bias_est = s.bias_est;
  row.bias_tilde = bias_true - s.bias_est;
  row.e.resize(n);
  row.upper.resize(n);
  row.lower.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    row.e[i] = landmark_error(s.est, (*s.est_landmarks)[i], (*s.y)[i]);
    for (int k = 0; k < 3; ++k) {
      const PerformanceEnvelope& env = envs[i][static_cast<std::size_t>(k)];
      const double xi = envelope_at(env, s.t);
      row.upper[i][k] = env.delta_bar * xi;
      row.lower[i][k] = -env.delta_under * xi;
    }
  }
  if (s.diagnostics) {
    row.big_e = s.diagnostics->big_e;
    row.lyapunov = s.diagnostics->lyapunov;
  } else {
    row.big_e.assign(n, Vec3::Constant(kNaN));
  }
  return row;
}

// ---------------------------------------------------------------------------
// Metrics

/// Geometric circle traced by a constant twist with omega orthogonal to v.
struct TruthCircle {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 0.0;

  [[nodiscard]] double distance(const Vec3& x) const {
    const Vec3 d = x - center;
    const double h = d.dot(axis);
    const double rho = (d - h * axis).norm();
    return std::hypot(h, rho - radius);
  }
};

[[nodiscard]] inline std::optional<TruthCircle> truth_circle(const ScenarioConfig& sc) {
  const double w = sc.omega_true.norm();
  if (w < 1e-12) return std::nullopt;
  const Vec3 a = sc.omega_true / w;
  if (std::abs(a.dot(sc.v_true)) > 1e-12 * std::max(1.0, sc.v_true.norm())) return std::nullopt;
  TruthCircle c;
  c.axis = sc.r0 * a;
  c.center = sc.p0 + sc.r0 * (sc.omega_true.cross(sc.v_true) / (w * w));
  c.radius = sc.v_true.norm() / w;
  return c;
}

struct MetricOptions {
  double steady_start = 30.0;    // max |e| window start
  double settle_window = 5.0;    // pose-error drift window before the end
  double transient_end = 10.0;   // containment fraction window start
  double track_start = 30.0;     // trajectory RMS window start
  std::optional<TruthCircle> circle;  // else distance to the logged truth
};

struct RunMetrics {
  std::size_t samples = 0;
  std::size_t envelope_violation_count = 0;  // component samples on or outside a bound
  double max_abs_e_after_steady = 0.0;
  std::size_t steady_samples = 0;
  double bias_error_end = 0.0;
  double settle_rotation_drift = 0.0;
  double settle_position_drift = 0.0;
  double inside_fraction_after_transient = kNaN;
  double track_rms = kNaN;
  double lyapunov_max_increase_rate = kNaN;  // between logged rows
  double runtime_seconds = 0.0;
  bool failed = false;
};

[[nodiscard]] inline RunMetrics compute_metrics(const RunLog& log, const MetricOptions& opt = {}) {
  RunMetrics m;
  m.samples = log.rows.size();
  if (log.rows.empty()) return m;
  const LogRow& last = log.rows.back();
  const double t_end = last.t;
  const PoseError pe_end = pose_error(last.truth, last.est);
  m.bias_error_end = last.bias_tilde.vector().norm();

  std::size_t transient_rows = 0;
  std::size_t transient_inside = 0;
  std::size_t track_rows = 0;
  double track_sq = 0.0;
  const LogRow* prev = nullptr;
  for (const LogRow& row : log.rows) {
    bool inside = true;
    for (std::size_t i = 0; i < row.e.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        if (!(row.e[i][k] > row.lower[i][k] && row.e[i][k] < row.upper[i][k])) {
          ++m.envelope_violation_count;
          inside = false;
        }
        if (row.t >= opt.steady_start) {
          m.max_abs_e_after_steady = std::max(m.max_abs_e_after_steady, std::abs(row.e[i][k]));
        }
      }
      if (!row.big_e[i].allFinite()) m.failed = true;
    }
    if (row.t >= opt.steady_start) ++m.steady_samples;
    if (row.t >= opt.transient_end) {
      ++transient_rows;
      if (inside) ++transient_inside;
    }
    if (row.t >= opt.track_start) {
      const double d = opt.circle ? opt.circle->distance(row.est.position)
                                  : (row.est.position - row.truth.position).norm();
      track_sq += d * d;
      ++track_rows;
    }
    if (row.t >= t_end - opt.settle_window) {
      const PoseError pe = pose_error(row.truth, row.est);
      m.settle_rotation_drift = std::max(
          m.settle_rotation_drift, (pe.rotation.matrix() - pe_end.rotation.matrix()).norm());
      m.settle_position_drift =
          std::max(m.settle_position_drift, (pe.position - pe_end.position).norm());
    }
    if (prev && std::isfinite(row.lyapunov) && std::isfinite(prev->lyapunov)) {
      const double rate = (row.lyapunov - prev->lyapunov) / (row.t - prev->t);
      m.lyapunov_max_increase_rate = std::isnan(m.lyapunov_max_increase_rate)
                                         ? rate
                                         : std::max(m.lyapunov_max_increase_rate, rate);
    }
    prev = &row;
  }
  if (transient_rows > 0) {
    m.inside_fraction_after_transient =
        static_cast<double>(transient_inside) / static_cast<double>(transient_rows);
  }
  if (track_rows > 0) m.track_rms = std::sqrt(track_sq / static_cast<double>(track_rows));
  return m;
}

/// Per-step monitors that the decimated log cannot reproduce.
struct StepStatistics {
  long steps = 0;
  double lyapunov_max_increase_rate = kNaN;  // max (L_{k+1} - L_k) / dt
  long lyapunov_increase_count = 0;           // steps above the slack rate
  double max_orthonormality_error = 0.0;      // max |R^T R - I| entrywise
};

struct RunResult {
  RunLog log;
  RunMetrics metrics;
  StepStatistics stats;
  EnvelopeSet envelopes;
  std::string failure;
  [[nodiscard]] bool failed() const { return metrics.failed; }
};

[[nodiscard]] inline RunResult run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const long stride = cfg.log_stride();
  const double dt = cfg.scenario.dt;
  RunResult out;
  out.log.backend = cfg.backend;
  out.log.landmark_count = cfg.scenario.landmarks_true.size();
  out.log.rows.reserve(static_cast<std::size_t>(cfg.step_count() / stride + 2));
  double prev_l = kNaN;
  const EnvelopeSet* envs = nullptr;
  SimulationStatus status;

  // Envelopes are resolved inside the run from the first measurement.
  ExperimentConfig resolved = cfg;
  if (!resolved.envelopes) {
    Rng rng(cfg.scenario.seed);
    const TruthState truth = initial_truth(cfg.scenario);
    (void)measure_velocity(cfg.scenario.twist_true(), cfg.scenario, rng);
    const auto y = measure_landmarks(truth, rng, cfg.scenario.feature_noise_std);
    resolved.envelopes =
        detail::initial_envelopes(cfg, Pose{cfg.initial.attitude, cfg.initial.position}, y);
  }
  envs = &*resolved.envelopes;

  status = simulate(resolved, cfg.backend, [&](const Sample& s) {
    const Mat3& r = s.est.rotation.matrix();
    out.stats.max_orthonormality_error =
        std::max(out.stats.max_orthonormality_error,
                 (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
    if (s.diagnostics) {
      const double l = s.diagnostics->lyapunov;
      if (std::isfinite(prev_l)) {
        const double rate = (l - prev_l) / dt;
        out.stats.lyapunov_max_increase_rate =
            std::isnan(out.stats.lyapunov_max_increase_rate)
                ? rate
                : std::max(out.stats.lyapunov_max_increase_rate, rate);
        if (rate > tol::kLyapunovSlackRate) ++out.stats.lyapunov_increase_count;
      }
      prev_l = l;
    }
    if (s.k % stride == 0 || !s.diagnostics) {
      out.log.rows.push_back(make_row(s, *envs, cfg.scenario.bias_true));
    }
  });

  out.envelopes = std::move(status.envelopes);
  out.stats.steps = status.steps;
  out.failure = status.failure;
  MetricOptions opt;
  opt.circle = truth_circle(cfg.scenario);
  out.metrics = compute_metrics(out.log, opt);
  out.metrics.failed = out.metrics.failed || status.failed;
  out.metrics.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Independent runs over several seeds, one thread each.
[[nodiscard]] inline std::vector<RunResult> run_batch(const ExperimentConfig& cfg,
                                                      const std::vector<std::uint64_t>& seeds) {
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(seeds.size());
  for (const std::uint64_t seed : seeds) {
    ExperimentConfig c = cfg;
    c.scenario.seed = seed;
    jobs.push_back(std::async(std::launch::async, [c] { return run(c); }));
  }
  std::vector<RunResult> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

[[nodiscard]] inline nlohmann::json to_json(const RunMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return nlohmann::json{{"samples", m.samples},
                        {"envelope_violation_count", m.envelope_violation_count},
                        {"max_abs_e_after_steady", m.max_abs_e_after_steady},
                        {"steady_samples", m.steady_samples},
                        {"bias_error_end", m.bias_error_end},
                        {"settle_rotation_drift", m.settle_rotation_drift},
                        {"settle_position_drift", m.settle_position_drift},
                        {"inside_fraction_after_transient", num(m.inside_fraction_after_transient)},
                        {"track_rms", num(m.track_rms)},
                        {"lyapunov_max_increase_rate", num(m.lyapunov_max_increase_rate)},
                        {"runtime_seconds", m.runtime_seconds},
                        {"failed", m.failed}};
}

[[nodiscard]] inline nlohmann::json to_json(const StepStatistics& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return nlohmann::json{{"steps", s.steps},
                        {"lyapunov_max_increase_rate", num(s.lyapunov_max_increase_rate)},
                        {"lyapunov_increase_count", s.lyapunov_increase_count},
                        {"max_orthonormality_error", s.max_orthonormality_error}};
}

// ---------------------------------------------------------------------------
// CSV

[[nodiscard]] inline std::vector<std::string> csv_header(std::size_t n) {
  std::vector<std::string> h{"t", "backend"};
  for (const char* who : {"truth", "est"}) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h.push_back(std::string(who) + "_R" + std::to_string(r) + std::to_string(c));
    }
    for (const char* ax : {"x", "y", "z"}) h.push_back(std::string(who) + "_P" + ax);
  }
  for (const char* group : {"truth_p", "est_p", "e", "E", "upper", "lower"}) {
    for (std::size_t i = 1; i <= n; ++i) {
      for (const char* ax : {"x", "y", "z"}) {
        h.push_back(std::string(group) + std::to_string(i) + "_" + ax);
      }
    }
  }
  for (const char* group : {"bhat", "btilde"}) {
    for (const char* ax : {"wx", "wy", "wz", "vx", "vy", "vz"}) {
      h.push_back(std::string(group) + "_" + ax);
    }
  }
  h.push_back("lyapunov");
  return h;
}

namespace detail {

inline void put(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.push_back(',');
  out.append(buf, static_cast<std::size_t>(len));
}

inline void put(std::string& out, const Vec3& v) {
  for (int k = 0; k < 3; ++k) put(out, v[k]);
}

inline void put(std::string& out, const std::vector<Vec3>& vs) {
  for (const auto& v : vs) put(out, v);
}

inline void put(std::string& out, const Pose& p) {
  const Mat3& r = p.rotation.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) put(out, r(i, j));
  }
  put(out, p.position);
}

}  // namespace detail

[[nodiscard]] inline std::string csv_string(const RunLog& log) {
  std::string out;
  const auto header = csv_header(log.landmark_count);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out.push_back(',');
    out += header[i];
  }
  out.push_back('\n');
  const std::string tag = to_string(log.backend);
  for (const LogRow& row : log.rows) {
    char buf[40];
    out.append(buf, static_cast<std::size_t>(std::snprintf(buf, sizeof buf, "%.17g", row.t)));
    out += "," + tag;
    detail::put(out, row.truth);
    detail::put(out, row.est);
    detail::put(out, row.truth_landmarks);
    detail::put(out, row.est_landmarks);
    detail::put(out, row.e);
    detail::put(out, row.big_e);
    detail::put(out, row.upper);
    detail::put(out, row.lower);
    detail::put(out, row.bias_est.omega);
    detail::put(out, row.bias_est.v);
    detail::put(out, row.bias_tilde.omega);
    detail::put(out, row.bias_tilde.v);
    detail::put(out, row.lyapunov);
    out.push_back('\n');
  }
  return out;
}

inline void emit_csv(const RunLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << csv_string(log);
  f.close();
  if (!f) throw IoError("write to '" + path + "' failed");
}

[[nodiscard]] inline RunLog parse_csv_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty log");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  const std::size_t fixed = csv_header(0).size();
  if (header.size() < fixed || (header.size() - fixed) % 18 != 0) {
    throw IoError("log header has an unexpected column count");
  }
  RunLog log;
  log.landmark_count = (header.size() - fixed) / 18;
  if (header != csv_header(log.landmark_count)) throw IoError("log header does not match the schema");
  const std::size_t n = log.landmark_count;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw IoError("log row has wrong column count");
    std::size_t c = 0;
    auto num = [&]() {
      const std::string& s = cells[c++];
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0') throw IoError("bad number '" + s + "' in log");
      return v;
    };
    auto vec3 = [&]() {
      Vec3 v;
      for (int k = 0; k < 3; ++k) v[k] = num();
      return v;
    };
    auto pose = [&]() {
      Mat3 r;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r(i, j) = num();
      }
      return Pose{Rotation::from_matrix_unchecked(r), vec3()};
    };
    auto points = [&]() {
      std::vector<Vec3> v(n);
      for (auto& p : v) p = vec3();
      return v;
    };
    LogRow row;
    row.t = num();
    try {
      log.backend = backend_from_string(cells[c++]);
    } catch (const ConfigInvalid& ex) {
      throw IoError(ex.what());
    }
    row.truth = pose();
    row.est = pose();
    row.truth_landmarks = points();
    row.est_landmarks = points();
    row.e = points();
    row.big_e = points();
    row.upper = points();
    row.lower = points();
    row.bias_est.omega = vec3();
    row.bias_est.v = vec3();
    row.bias_tilde.omega = vec3();
    row.bias_tilde.v = vec3();
    row.lyapunov = num();
    log.rows.push_back(std::move(row));
  }
  return log;
}

[[nodiscard]] inline RunLog parse_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv_string(ss.str());
}

// ---------------------------------------------------------------------------
// Backend cross-check

struct BackendDifference {
  std::string quantity;
  double max_difference = 0.0;  // sup over time and entries of |matrix - quaternion|
  double time = 0.0;            // first time the maximum is reached
};

struct BackendComparison {
  std::vector<BackendDifference> entries;
  bool failed = false;
  std::string failure;

  [[nodiscard]] const BackendDifference& at(const std::string& quantity) const {
    for (const auto& e : entries) {
      if (e.quantity == quantity) return e;
    }
    throw std::out_of_range("no comparison entry '" + quantity + "'");
  }
};

/// Runs both backends on the same measurement stream (same seed) and
/// reports sup-norm differences of the estimated pose, landmarks and bias.
[[nodiscard]] inline BackendComparison compare_backends(const ExperimentConfig& cfg) {
  struct Snapshot {
    double t;
    Mat4 pose;
    std::vector<Vec3> landmarks;
    Vec6 bias;
  };
  std::vector<Snapshot> reference;
  reference.reserve(static_cast<std::size_t>(cfg.step_count() + 1));
  BackendComparison out;
  out.entries = {{"pose", 0.0, 0.0}, {"rotation", 0.0, 0.0}, {"position", 0.0, 0.0},
                 {"landmarks", 0.0, 0.0}, {"bias", 0.0, 0.0}};

  const auto a = simulate(cfg, Backend::matrix, [&](const Sample& s) {
    reference.push_back({s.t, s.est.matrix(), *s.est_landmarks, s.bias_est.vector()});
  });
  std::size_t k = 0;
  auto bump = [&](std::size_t idx, double v, double t) {
    if (v > out.entries[idx].max_difference) out.entries[idx] = {out.entries[idx].quantity, v, t};
  };
  const auto b = simulate(cfg, Backend::quaternion, [&](const Sample& s) {
    if (k >= reference.size()) return;
    const Snapshot& ref = reference[k++];
    const Mat4 dp = (s.est.matrix() - ref.pose).cwiseAbs();
    bump(0, dp.maxCoeff(), s.t);
    bump(1, dp.topLeftCorner<3, 3>().maxCoeff(), s.t);
    bump(2, dp.topRightCorner<3, 1>().maxCoeff(), s.t);
    double dl = 0.0;
    for (std::size_t i = 0; i < ref.landmarks.size(); ++i) {
      dl = std::max(dl, ((*s.est_landmarks)[i] - ref.landmarks[i]).cwiseAbs().maxCoeff());
    }
    bump(3, dl, s.t);
    bump(4, (s.bias_est.vector() - ref.bias).cwiseAbs().maxCoeff(), s.t);
  });
  if (a.failed || b.failed) {
    out.failed = true;
    out.failure = a.failed ? "matrix: " + a.failure : "quaternion: " + b.failure;
  }
  return out;
}

[[nodiscard]] inline nlohmann::json to_json(const BackendComparison& c) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : c.entries) {
    entries.push_back({{"quantity", e.quantity}, {"max_difference", e.max_difference}, {"time", e.time}});
  }
  nlohmann::json j{{"entries", entries}, {"failed", c.failed}};
  if (c.failed) j["failure"] = c.failure;
  return j;
}

}  // namespace ppslam
