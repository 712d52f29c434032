// ppslam: run the landmark-SLAM observer experiment from the command line.
//
//   ppslam run --config cfg.json --out out/ [--backend quaternion] [--noise off]
//   ppslam compare-backends --duration 10 --noise off
//   ppslam paper-scenario --out configs/
//   ppslam metrics --log out/run_matrix.csv [--config cfg.json]
//
// Exit codes: 0 pass, 2 envelope violation, 3 config error, 4 IO error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppslam/config.hpp"
#include "ppslam/harness.hpp"

namespace fs = std::filesystem;
using namespace ppslam;

namespace {

enum Exit : int { kPass = 0, kViolation = 2, kConfigError = 3, kIoError = 4 };

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> noise;
  std::optional<double> duration;
  std::optional<double> dt;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment configuration (default: reference experiment)");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "noise seed");
  cmd->add_option("--backend", o.backend, "observer backend")
      ->check(CLI::IsMember({"matrix", "quaternion"}));
  cmd->add_option("--noise", o.noise, "velocity noise")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--duration", o.duration, "simulated time [s]");
  cmd->add_option("--dt", o.dt, "integration step [s]");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigInvalid("'" + path + "': " + ex.what());
  }
}

ExperimentConfig load(const Overrides& o) {
  ExperimentConfig cfg = o.config_path.empty() ? paper_experiment()
                                               : config_from_json(read_json(o.config_path));
  if (o.seed) cfg.scenario.seed = *o.seed;
  if (o.backend) cfg.backend = backend_from_string(*o.backend);
  if (o.noise && *o.noise == "off") {
    cfg.scenario.noise_std = 0.0;
    cfg.scenario.feature_noise_std = 0.0;
  }
  if (o.duration) cfg.scenario.duration = *o.duration;
  if (o.dt) cfg.scenario.dt = *o.dt;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void warn_gain_condition(const ExperimentConfig& cfg, const EnvelopeSet& envs) {
  if (envs.empty()) return;
  const GainCondition gc = gain_condition(cfg.gains, envs);
  if (!gc.satisfied()) {
    std::cerr << "warning: landmark gain condition not met (k_p margin " << gc.c_p
              << "); convergence is not covered by the sufficient condition\n";
  }
}

int cmd_run(const Overrides& o, const std::vector<std::uint64_t>& seeds) {
  const ExperimentConfig cfg = load(o);
  const fs::path dir = cfg.output_dir;
  make_dir(dir);
  const std::string stem = "run_" + to_string(cfg.backend);

  std::vector<RunResult> results;
  std::vector<std::string> names;
  if (seeds.empty()) {
    results.push_back(run(cfg));
    names.push_back(stem);
  } else {
    results = run_batch(cfg, seeds);
    for (const auto s : seeds) names.push_back(stem + "_seed" + std::to_string(s));
  }

  int code = kPass;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const RunResult& r = results[i];
    if (i == 0) warn_gain_condition(cfg, r.envelopes);
    emit_csv(r.log, (dir / (names[i] + ".csv")).string());
    nlohmann::json m = to_json(r.metrics);
    m["step_statistics"] = to_json(r.stats);
    m["backend"] = to_string(cfg.backend);
    m["seed"] = seeds.empty() ? cfg.scenario.seed : seeds[i];
    if (r.failed()) m["failure"] = r.failure;
    write_text(dir / (names[i] + "_metrics.json"), m.dump(2) + "\n");
    std::cout << names[i] << ": " << m.dump() << "\n";
    if (r.failed()) {
      std::cerr << "envelope violation: " << r.failure << "\n";
      code = kViolation;
    }
  }
  return code;
}

int cmd_compare(const Overrides& o) {
  const ExperimentConfig cfg = load(o);
  const BackendComparison c = compare_backends(cfg);
  const std::string text = to_json(c).dump(2) + "\n";
  std::cout << text;
  if (!o.out_dir.empty()) {
    make_dir(o.out_dir);
    write_text(fs::path(o.out_dir) / "compare_backends.json", text);
  }
  return c.failed ? kViolation : kPass;
}

int cmd_reference(const std::string& out_dir) {
  const std::string text = to_json(paper_experiment()).dump(2) + "\n";
  if (out_dir.empty()) {
    std::cout << text;
  } else {
    make_dir(out_dir);
    write_text(fs::path(out_dir) / "paper_scenario.json", text);
  }
  return kPass;
}

int cmd_metrics(const std::string& log_path, const std::string& config_path,
                const std::string& out_dir) {
  const RunLog log = parse_csv(log_path);
  MetricOptions opt;
  if (!config_path.empty()) opt.circle = truth_circle(config_from_json(read_json(config_path)).scenario);
  const RunMetrics m = compute_metrics(log, opt);
  const std::string text = to_json(m).dump(2) + "\n";
  std::cout << text;
  if (!out_dir.empty()) {
    make_dir(out_dir);
    write_text(fs::path(out_dir) / "metrics.json", text);
  }
  return m.failed ? kViolation : kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-performance landmark SLAM observer"};
  app.require_subcommand(1);

  Overrides run_opts;
  std::vector<std::uint64_t> seeds;
  auto* run_cmd = app.add_subcommand("run", "simulate one experiment and log it");
  add_overrides(run_cmd, run_opts);
  run_cmd->add_option("--seeds", seeds, "run these seeds in parallel")->delimiter(',');

  Overrides cmp_opts;
  auto* cmp_cmd = app.add_subcommand("compare-backends", "matrix vs quaternion observer");
  add_overrides(cmp_cmd, cmp_opts);

  std::string reference_out;
  auto* reference_cmd = app.add_subcommand("paper-scenario", "write the reference configuration");
  reference_cmd->add_option("--out", reference_out, "output directory (default: stdout)");

  std::string log_path;
  std::string metrics_config;
  std::string metrics_out;
  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from a CSV log");
  metrics_cmd->add_option("--log", log_path, "CSV run log")->required();
  metrics_cmd->add_option("--config", metrics_config, "configuration for the truth circle");
  metrics_cmd->add_option("--out", metrics_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, seeds);
    if (*cmp_cmd) return cmd_compare(cmp_opts);
    if (*reference_cmd) return cmd_reference(reference_out);
    if (*metrics_cmd) return cmd_metrics(log_path, metrics_config, metrics_out);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kPass;
}
