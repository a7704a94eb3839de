#pragma once

#include "madopt/io.hpp"
#include "madopt/robustness.hpp"
#include "madopt/scenarios.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace madopt::app {

struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t train = 0;
  std::uint64_t solver = 0;
  std::uint64_t mc = 0;
  std::uint64_t shap = 0;
};

struct OptimizeConfig {
  double setpoint = 390.0;
  Mode mode = Mode::MadOpt;
  double tau = 2.0;
  std::optional<double> ambient_at;
};

struct MonteCarloConfig {
  Index n_samples = 1000;
  int rounds = 50;
  double noise_fraction = 0.01;
  bool include_ambient = false;
};

struct ExplainConfig {
  int permutations = 2000;        // per query point
  int global_permutations = 50;   // per row of the global-importance sample
  Index background_rows = 100;
  Index sample_rows = 200;
};

struct RunConfig {
  std::string config_path;
  Json raw;  // echoed into the manifest
  std::string output_dir;
  std::optional<std::string> data_csv;
  std::optional<std::string> schema_json;
  Index synthetic_rows = 5000;
  Seeds seeds;
  PipelineConfig pipeline;
  RunOptions run;
  OptimizeConfig optimize;
  RampSpec ramp;
  ExtrapolationSpec extrapolation;
  MonteCarloConfig montecarlo;
  ExplainConfig explain;
};

/// Parses and validates; errors are InvalidArgument/Parse (exit code 2).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const Json& doc, std::string config_path = "");

std::string sha256_file(const std::string& path);

// Subcommands. Each writes its artifacts into cfg.output_dir and records them
// in manifest.json. Return value is the process exit code.
void cmd_gen_data(const RunConfig& cfg);
void cmd_stats(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_fit_envelope(const RunConfig& cfg);
void cmd_optimize(const RunConfig& cfg);
void cmd_ramp(const RunConfig& cfg);
void cmd_extrapolate(const RunConfig& cfg);
void cmd_montecarlo(const RunConfig& cfg);
void cmd_explain(const RunConfig& cfg);

struct VerifyResult {
  std::vector<std::string> checked;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};
VerifyResult verify_run(const std::string& run_dir, double tol = 1e-9);

int exit_code_for(ErrorCode code);

/// Full command-line entry point.
int run_cli(int argc, char** argv);

}  // namespace madopt::app
