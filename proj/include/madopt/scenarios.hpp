#pragma once

#include "madopt/dataset.hpp"
#include "madopt/mahalanobis.hpp"
#include "madopt/optimizer.hpp"
#include "madopt/surrogate.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace madopt {

// Everything an optimization campaign needs: the rows the models and envelope
// were fitted on, the surrogates, and the envelope itself.
struct PlantContext {
  Dataset data;
  std::shared_ptr<const SurrogateSet> models;
  std::shared_ptr<const EllipsoidModel> ellipsoid;
  std::vector<ColumnStats> stats;  // of `data`, engineering units
};

struct PipelineConfig {
  double train_ratio = 0.8;
  double calibration_share = 0.5;  // of the test split
  std::uint64_t split_seed = 21;
  TrainConfig train;
  std::map<std::string, Index> hidden = {{"Power", 31}, {"TE", 16}, {"THR", 31}};
  double alpha = 0.05;
  double ridge = -1.0;  // default ridge
  std::string scaler_id = "plant";
};

struct TrainedPlant {
  PlantContext ctx;
  Dataset train;
  Dataset calib;
  Dataset test;
  std::array<Metrics, 3> test_metrics;  // Power, TE, THR
  std::array<ConformalCalibration, 3> conformal;
  std::array<double, 3> coverage{};     // on `test`
  std::array<int, 3> epochs{};
};

/// Scaler over all columns of `data`, 80/20 split, test half reserved for
/// conformal calibration, three surrogates, envelope over the scaled inputs of
/// `data`.
TrainedPlant train_plant(const Dataset& data, const PipelineConfig& config);

/// Context from already-trained parts (e.g. reloaded artifacts).
PlantContext make_context(Dataset data, std::shared_ptr<const SurrogateSet> models,
                          std::shared_ptr<const EllipsoidModel> ellipsoid);

// ---------------------------------------------------------------------------

struct AmbientCase {
  std::string label;
  std::map<std::string, double> values;  // engineering units
};

/// AT, AP, AH at their means in the context data, optionally overriding AT.
AmbientCase mean_ambient(const PlantContext& ctx, std::optional<double> at_celsius = std::nullopt);

struct RunOptions {
  int n_starts = 16;
  std::uint64_t seed = 13;
  SolverSettings solver;
  double process_upper = 1.0;  // scaled upper bound for process inputs
};

struct ScenarioResult {
  double setpoint = 0.0;
  Mode mode = Mode::MadOpt;
  double tau = 0.0;
  std::string case_label;
  bool solved = false;  // a solve ran (false: e.g. no feasible start)
  std::string error;
  OptSolution solution;
  std::vector<OptSolution> all_starts;
  ConsistencyReport consistency;

  bool feasible() const { return solved && solution.converged; }
};

ScenarioResult setpoint_optimize(const PlantContext& ctx, double power_mw, const AmbientCase& ambient, Mode mode,
                                 double tau, const RunOptions& options);

// ---------------------------------------------------------------------------

struct RampSpec {
  double start = 185.0;
  double end = 395.0;
  double step = 15.0;
  std::vector<double> ambient_temperatures = {22.0, 26.0, 34.0};
  Mode mode = Mode::MadOpt;
  double tau = 0.9;

  void validate() const;
  std::vector<double> setpoints() const;
};

struct TrendCheck {
  int te_violations = 0;   // TE decreases between consecutive feasible points
  int thr_violations = 0;  // THR increases
  bool ok() const { return te_violations <= 1 && thr_violations <= 1; }
};

struct SweepCase {
  AmbientCase ambient;
  std::vector<ScenarioResult> rows;
  TrendCheck trend;
  int gffr_at_lower = 0;  // solutions with GFFR within 0.02 scaled of its lower bound
};

struct SweepReport {
  RampSpec spec;
  std::vector<SweepCase> cases;
  int solves_completed() const;
};

SweepReport ramp_sweep(const PlantContext& ctx, const RampSpec& spec, const RunOptions& options);

TrendCheck check_trends(const std::vector<ScenarioResult>& rows);

// ---------------------------------------------------------------------------

struct ExtrapolationSpec {
  double threshold = 380.0;
  std::vector<double> setpoints = {385.0, 390.0, 395.0};
  double upper_bound = 1.8;
  std::map<double, double> tau_schedule = {{385.0, 0.4}, {390.0, 0.45}, {395.0, 0.6}};
  double ambient_perturbation = 0.01;  // fraction of std
  double match_window = 2.0;           // MW, holdout ground-truth window
  std::uint64_t seed = 29;

  void validate() const;
  double tau_for(double setpoint) const;
};

struct GroundTruth {
  Vec x_eng;  // mean of holdout inputs near the setpoint
  Index rows_used = 0;
  double power = 0.0;
};

struct ExtrapolationRow {
  double setpoint = 0.0;
  double tau = 0.0;
  ScenarioResult madopt;
  ScenarioResult unconstrained;
  std::optional<GroundTruth> truth;
  // |x - truth| per variable name, engineering units
  std::map<std::string, double> deviation_madopt;
  std::map<std::string, double> deviation_unconstrained;
  bool cdp_gffr_beyond_subspace = false;
};

struct ExtrapolationReport {
  ExtrapolationSpec spec;
  AmbientCase ambient;
  std::vector<ExtrapolationRow> rows;
  std::vector<std::string> warnings;
};

/// Optimizes with the context's (subspace-trained) models only; `holdout` is
/// read after all solves, for the ground-truth comparison.
ExtrapolationReport extrapolate(const PlantContext& ctx, const Dataset& holdout, const ExtrapolationSpec& spec,
                                const RunOptions& options);

std::optional<GroundTruth> nearest_holdout(const Dataset& holdout, double setpoint, double window);

struct TauTrial {
  double tau = 0.0;
  bool feasible = false;
  double d_m = 0.0;
  bool pairs_inside = false;
  std::string note;
};

struct TauTuning {
  std::optional<double> tau;
  std::vector<TauTrial> table;
};

/// First tau in the ascending grid whose best solution converges with every
/// pairwise mapping inside its tau-ellipse.
TauTuning tune_tau(const PlantContext& ctx, double setpoint, const std::vector<double>& grid,
                   const AmbientCase& ambient, const RunOptions& options);

}  // namespace madopt
