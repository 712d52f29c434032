#pragma once

// Experiment configuration: scenario, observer gains, envelope rule, initial
// estimate and run settings, with JSON (de)serialization.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppslam/errors.hpp"
#include "ppslam/lie.hpp"
#include "ppslam/observer.hpp"
#include "ppslam/ppf.hpp"
#include "ppslam/world.hpp"

namespace ppslam {

enum class Backend { matrix, quaternion };

[[nodiscard]] inline std::string to_string(Backend b) {
  return b == Backend::matrix ? "matrix" : "quaternion";
}

[[nodiscard]] inline Backend backend_from_string(const std::string& s) {
  if (s == "matrix") return Backend::matrix;
  if (s == "quaternion") return Backend::quaternion;
  throw ConfigInvalid("unknown backend '" + s + "' (expected matrix or quaternion)");
}

[[nodiscard]] inline std::string to_string(StepScheme s) {
  return s == StepScheme::explicit_euler ? "explicit_euler" : "linearly_implicit";
}

[[nodiscard]] inline StepScheme scheme_from_string(const std::string& s) {
  if (s == "explicit_euler") return StepScheme::explicit_euler;
  if (s == "linearly_implicit") return StepScheme::linearly_implicit;
  throw ConfigInvalid("unknown step scheme '" + s + "'");
}

struct InitialEstimate {
  Rotation attitude;
  Vec3 position = Vec3::Zero();
  std::vector<Vec3> landmarks;
  Twist bias;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  ObserverGains gains;
  EnvelopeRule envelope_rule;
  /// Explicit n x 3 envelopes; when absent they are built from the initial
  /// errors with envelope_rule.
  std::optional<EnvelopeSet> envelopes;
  InitialEstimate initial;
  Backend backend = Backend::matrix;
  StepScheme scheme = StepScheme::linearly_implicit;
  double log_interval = 0.01;
  std::string output_dir = "out";

  /// Number of integration steps between log rows.
  [[nodiscard]] long log_stride() const {
    const double ratio = log_interval / scenario.dt;
    const long stride = std::lround(ratio);
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
      throw ConfigInvalid("log interval must be a positive multiple of dt");
    }
    return stride;
  }

  [[nodiscard]] long step_count() const {
    return std::lround(std::floor(scenario.duration / scenario.dt + 1e-9));
  }

  void validate() const {
    scenario.validate();
    const std::size_t n = scenario.landmarks_true.size();
    gains.validate(n);
    envelope_rule.validate();
    if (initial.landmarks.size() != n) {
      throw ConfigInvalid("initial landmark estimate count differs from the map size");
    }
    if (envelopes) {
      if (envelopes->size() != n) throw ConfigInvalid("envelope table must have n rows");
      for (const auto& row : *envelopes) {
        for (const auto& env : row) env.validate();
      }
    }
    if (!(log_interval > 0.0)) throw ConfigInvalid("log interval must be positive");
    (void)log_stride();
  }
};

/// The reference experiment: paper_scenario() plus its observer settings.
[[nodiscard]] inline ExperimentConfig paper_experiment() {
  ExperimentConfig cfg;
  cfg.scenario = paper_scenario();
  const std::size_t n = cfg.scenario.landmarks_true.size();
  cfg.gains = ObserverGains::uniform(n, 0.05);
  cfg.gains.k_p = 3.0;
  cfg.gains.k_w = 3.0;
  cfg.gains.gamma = 10.0 * Mat6::Identity();
  cfg.envelope_rule = EnvelopeRule{1.2, 1.8, 0.1, 1.0};
  cfg.initial.attitude = Rotation::identity();
  cfg.initial.position = Vec3::Zero();
  cfg.initial.landmarks.assign(n, Vec3::Zero());
  cfg.initial.bias = Twist::zero();
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON

namespace json_detail {

using nlohmann::json;

inline json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline Eigen::VectorXd read_vec(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ConfigInvalid(std::string(what) + ": expected array of " + std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline Eigen::MatrixXd read_mat(const json& j, Eigen::Index rows, Eigen::Index cols,
                                const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigInvalid(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    m.row(r) = read_vec(j[static_cast<std::size_t>(r)], cols, what).transpose();
  }
  return m;
}

inline Vec3 read_vec3(const json& j, const char* what) { return read_vec(j, 3, what); }

inline std::vector<Vec3> read_points(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigInvalid(std::string(what) + ": expected array");
  std::vector<Vec3> out;
  for (const auto& p : j) out.push_back(read_vec3(p, what));
  return out;
}

inline json points(const std::vector<Vec3>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(vec(p));
  return out;
}

inline json envelope(const PerformanceEnvelope& e) {
  return json{{"xi0", e.xi0},
              {"xi_inf", e.xi_inf},
              {"ell", e.ell},
              {"delta_bar", e.delta_bar},
              {"delta_under", e.delta_under}};
}

inline PerformanceEnvelope read_envelope(const json& j) {
  return PerformanceEnvelope{j.at("xi0").get<double>(), j.at("xi_inf").get<double>(),
                             j.at("ell").get<double>(), j.at("delta_bar").get<double>(),
                             j.at("delta_under").get<double>()};
}

inline Rotation read_rotation(const json& j, const char* what) {
  try {
    return Rotation::from_matrix(read_mat(j, 3, 3, what));
  } catch (const InvalidRotation&) {
    throw ConfigInvalid(std::string(what) + ": not a rotation matrix");
  }
}

}  // namespace json_detail

[[nodiscard]] inline nlohmann::json to_json(const ExperimentConfig& c) {
  using namespace json_detail;
  const ScenarioConfig& s = c.scenario;
  json j;
  j["scenario"] = {{"omega_true", vec(s.omega_true)},
                   {"v_true", vec(s.v_true)},
                   {"R0", mat(s.r0.matrix())},
                   {"P0", vec(s.p0)},
                   {"landmarks", points(s.landmarks_true)},
                   {"bias_true", vec(s.bias_true.vector())},
                   {"noise_std", s.noise_std},
                   {"feature_noise_std", s.feature_noise_std},
                   {"duration", s.duration},
                   {"dt", s.dt},
                   {"seed", s.seed}};
  j["observer"] = {{"k_p", c.gains.k_p},
                   {"k_w", c.gains.k_w},
                   {"Gamma", mat(c.gains.gamma)},
                   {"alpha", c.gains.alpha},
                   {"backend", to_string(c.backend)},
                   {"scheme", to_string(c.scheme)}};
  json env = {{"rule",
               {{"scale", c.envelope_rule.scale},
                {"offset", c.envelope_rule.offset},
                {"xi_inf", c.envelope_rule.xi_inf},
                {"ell", c.envelope_rule.ell}}}};
  if (c.envelopes) {
    json table = json::array();
    for (const auto& row : *c.envelopes) {
      table.push_back(json::array({envelope(row[0]), envelope(row[1]), envelope(row[2])}));
    }
    env["explicit"] = table;
  }
  j["envelope"] = env;
  j["initial_estimate"] = {{"R", mat(c.initial.attitude.matrix())},
                           {"P", vec(c.initial.position)},
                           {"landmarks", points(c.initial.landmarks)},
                           {"bias", vec(c.initial.bias.vector())}};
  j["logging"] = {{"interval", c.log_interval}, {"output_dir", c.output_dir}};
  return j;
}

/// Parses and validates a configuration. Throws ConfigInvalid on missing
/// keys, wrong shapes or violated invariants.
[[nodiscard]] inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  ExperimentConfig c;
  try {
    const json& s = j.at("scenario");
    c.scenario.omega_true = read_vec3(s.at("omega_true"), "omega_true");
    c.scenario.v_true = read_vec3(s.at("v_true"), "v_true");
    c.scenario.r0 = read_rotation(s.at("R0"), "R0");
    c.scenario.p0 = read_vec3(s.at("P0"), "P0");
    c.scenario.landmarks_true = read_points(s.at("landmarks"), "landmarks");
    c.scenario.bias_true = Twist::from_vector(read_vec(s.at("bias_true"), 6, "bias_true"));
    c.scenario.noise_std = s.at("noise_std").get<double>();
    c.scenario.feature_noise_std = s.value("feature_noise_std", 0.0);
    c.scenario.duration = s.at("duration").get<double>();
    c.scenario.dt = s.at("dt").get<double>();
    c.scenario.seed = s.value("seed", std::uint64_t{1});

    const json& o = j.at("observer");
    c.gains.k_p = o.at("k_p").get<double>();
    c.gains.k_w = o.at("k_w").get<double>();
    const json& g = o.at("Gamma");
    c.gains.gamma = g.is_number() ? Mat6(g.get<double>() * Mat6::Identity())
                                  : Mat6(read_mat(g, 6, 6, "Gamma"));
    const json& a = o.at("alpha");
    if (a.is_number()) {
      c.gains.alpha.assign(c.scenario.landmarks_true.size(), a.get<double>());
    } else {
      c.gains.alpha = a.get<std::vector<double>>();
    }
    c.backend = backend_from_string(o.value("backend", std::string("matrix")));
    c.scheme = scheme_from_string(o.value("scheme", std::string("linearly_implicit")));

    if (j.contains("envelope")) {
      const json& e = j.at("envelope");
      if (e.contains("rule")) {
        const json& r = e.at("rule");
        c.envelope_rule = EnvelopeRule{r.value("scale", 1.2), r.value("offset", 1.8),
                                       r.value("xi_inf", 0.1), r.value("ell", 1.0)};
      }
      if (e.contains("explicit")) {
        EnvelopeSet table;
        for (const auto& row : e.at("explicit")) {
          if (row.size() != 3) throw ConfigInvalid("explicit envelopes need 3 per landmark");
          table.push_back({read_envelope(row[0]), read_envelope(row[1]), read_envelope(row[2])});
        }
        c.envelopes = std::move(table);
      }
    }

    const json& i = j.at("initial_estimate");
    c.initial.attitude = read_rotation(i.at("R"), "initial R");
    c.initial.position = read_vec3(i.at("P"), "initial P");
    c.initial.landmarks = read_points(i.at("landmarks"), "initial landmarks");
    c.initial.bias = Twist::from_vector(read_vec(i.at("bias"), 6, "initial bias"));

    if (j.contains("logging")) {
      const json& l = j.at("logging");
      c.log_interval = l.value("interval", 0.01);
      c.output_dir = l.value("output_dir", std::string("out"));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigInvalid(std::string("malformed configuration: ") + ex.what());
  }
  c.validate();
  return c;
}

}  // namespace ppslam
