#pragma once

#include "madopt/dataset.hpp"
#include "madopt/mahalanobis.hpp"
#include "madopt/surrogate.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace madopt {

enum class Mode { MadOpt, Unconstrained };

const char* to_string(Mode m);
Mode mode_from_string(std::string_view s);

/// Smooth scalar function; fills `grad` when non-null.
using SmoothFn = std::function<double(const Vec& x, Vec* grad)>;

/// Nonlinear program over scaled decision variables:
///   minimize objective(x)
///   s.t. setpoint_fn(x) = setpoint   (accepted when squared residual <= epsilon)
///        d_M(x) <= tau               (MadOpt only)
///        lower <= x <= upper
struct ProblemSpec {
  Mode mode = Mode::MadOpt;
  SmoothFn objective;
  SmoothFn setpoint_fn;  // may be empty (no setpoint constraint)
  double setpoint = 0.0;
  double epsilon = 0.0;
  Vec lower;
  Vec upper;
  std::shared_ptr<const EllipsoidModel> ellipsoid;
  double tau = 0.0;
  std::vector<std::string> names;
  std::vector<std::string> warnings;

  // Present when the problem was assembled from plant surrogates.
  std::shared_ptr<const SurrogateSet> models;
  double setpoint_mw = 0.0;

  Index dim() const { return lower.size(); }
  bool uses_ellipsoid() const { return mode == Mode::MadOpt && ellipsoid != nullptr; }
  void validate() const;
};

/// Scaled values pinned for ambient variables; bounds become value +/- width.
struct AmbientLock {
  std::map<std::string, double> values;
  double width = 0.02;
};

/// Default setpoint tolerance: (1 MW in scaled Power units)^2.
double default_epsilon(const ScalerParams& scaler);

/// Objective -TE + THR (both scaled surrogate outputs), Power setpoint band,
/// box bounds and, in MadOpt mode, the ellipsoid constraint.
ProblemSpec build_problem(std::shared_ptr<const SurrogateSet> models, double setpoint_mw,
                          std::optional<double> epsilon, Vec lower, Vec upper, Mode mode,
                          std::optional<double> tau, std::shared_ptr<const EllipsoidModel> ellipsoid,
                          const AmbientLock& ambient_lock = {});

struct SolverSettings {
  int max_outer = 60;
  int max_inner = 400;
  double penalty_growth = 5.0;
  double initial_penalty = 10.0;
  double stationarity_tol = 1e-6;
  double feasibility_tol = 1e-9;
  int lbfgs_memory = 8;
  std::uint64_t seed = 13;

  void validate() const;
};

struct KktResiduals {
  double stationarity = 0.0;        // inf-norm of the projected Lagrangian gradient
  double setpoint_residual = 0.0;   // |c(x) - setpoint|, scaled
  double ellipsoid_violation = 0.0; // max(0, d^2 - tau^2)
  double bound_violation = 0.0;
  double complementarity = 0.0;     // |lambda_ellipsoid * (d^2 - tau^2)|
  Vec bound_multipliers;            // Lagrangian gradient on active bounds, 0 elsewhere
  bool bound_signs_consistent = true;
};

struct Predictions {
  double power = 0.0;
  double te = 0.0;
  double thr = 0.0;
};

struct OptSolution {
  Vec x_scaled;
  Vec x_eng;  // empty unless the problem carries surrogates
  double objective = 0.0;
  std::optional<Predictions> predicted;
  double setpoint_value = 0.0;         // setpoint_fn(x), scaled
  double setpoint_residual_sq = 0.0;   // (setpoint_fn(x) - setpoint)^2
  std::optional<double> d_m;
  double lambda_setpoint = 0.0;
  double lambda_ellipsoid = 0.0;
  // Set when the exact setpoint was unreachable and the run was finished with
  // the epsilon band as an inequality.
  bool band_constraint = false;
  double lambda_band = 0.0;
  KktResiduals kkt;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int start_id = 0;
  std::string status;
};

/// lambda_band multiplies the band form (c - s)^2 - eps <= 0 of the setpoint.
KktResiduals kkt_residuals(const ProblemSpec& spec, const Vec& x, double lambda_setpoint,
                           double lambda_ellipsoid, double lambda_band = 0.0);

OptSolution solve(const ProblemSpec& spec, const Vec& x0, const SolverSettings& settings, int start_id = 0);

/// Box-uniform starts; in MadOpt mode each start outside the ellipsoid is
/// pulled toward the most central box point along the connecting segment.
std::vector<Vec> sample_starts(const ProblemSpec& spec, int n_starts, std::uint64_t seed);

struct MultiStartResult {
  OptSolution best;
  std::vector<OptSolution> all;
};

/// Best = lowest objective among converged runs; ties (1e-9) go to smaller d_M,
/// then lower start id. Falls back to the least infeasible run.
MultiStartResult multi_start(const ProblemSpec& spec, int n_starts, std::uint64_t seed,
                             const SolverSettings& settings);

// ---------------------------------------------------------------------------

struct ConsistencyReport {
  std::vector<std::string> flags;
  std::vector<std::string> out_of_range_variables;
  bool inside_ellipsoid = true;
  bool outputs_in_range = true;
  double d_m = 0.0;
  double tau = 0.0;
  std::vector<std::pair<std::string, double>> pair_distances;  // "A/B" -> 2-D marginal d

  bool ok() const { return flags.empty(); }
};

inline const std::vector<std::pair<std::string, std::string>>& default_check_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs = {{"CDP", "GFFR"}, {"CDT", "PHGOT"}};
  return pairs;
}

/// Flags inputs outside the data's [min, max], d_M > tau, pairwise marginal
/// distances > tau and predicted TE/THR outside the data's [min, max].
ConsistencyReport check_domain_consistency(
    const OptSolution& sol, const EllipsoidModel& ellipsoid, double tau, const Dataset& data,
    const std::vector<std::pair<std::string, std::string>>& pairs = default_check_pairs());

}  // namespace madopt
