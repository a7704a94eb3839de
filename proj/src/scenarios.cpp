#include "madopt/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace madopt {

namespace {

constexpr std::array<Target, 3> kTargets = {Target::Power, Target::TE, Target::THR};

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

TrainedPlant train_plant(const Dataset& data, const PipelineConfig& config) {
  const ScalerParams scaler = fit_scaler(data, data.names(), config.scaler_id);
  auto part = split(data, config.train_ratio, config.split_seed);
  auto rest = split(part.second, config.calibration_share, config.split_seed + 1);

  auto models = std::make_shared<SurrogateSet>();
  models->scaler = scaler;
  const auto inputs = data.input_names();

  TrainedPlant out{PlantContext{data, nullptr, nullptr, {}}, part.first, rest.first, rest.second, {}, {}, {}, {}};
  for (std::size_t k = 0; k < kTargets.size(); ++k) {
    const std::string name = to_string(kTargets[k]);
    const auto h = config.hidden.find(name);
    require(h != config.hidden.end(), ErrorCode::InvalidArgument, "no hidden size configured for " + name);
    TrainConfig cfg = config.train;
    cfg.seed = config.train.seed + k;
    MlpModel init = init_mlp(static_cast<Index>(inputs.size()), h->second, Activation::Tanh, cfg.seed);
    init.target = name;
    init.input_names = inputs;
    auto result = train(init, out.train, scaler, cfg);
    out.epochs[k] = result.epochs_run;
    out.test_metrics[k] = evaluate(result.model, out.test, scaler);
    out.conformal[k] = calibrate_conformal(result.model, out.calib, scaler, config.alpha);
    out.coverage[k] = empirical_coverage(result.model, out.conformal[k], out.test, scaler);
    switch (kTargets[k]) {
      case Target::Power: models->power = std::move(result.model); break;
      case Target::TE: models->te = std::move(result.model); break;
      case Target::THR: models->thr = std::move(result.model); break;
    }
  }

  const Mat X = scaler.subset(inputs).scale_rows(data.columns(inputs));
  auto ellipsoid = std::make_shared<EllipsoidModel>(fit_ellipsoid(X, config.ridge, inputs));
  out.ctx = make_context(data, models, ellipsoid);
  return out;
}

PlantContext make_context(Dataset data, std::shared_ptr<const SurrogateSet> models,
                          std::shared_ptr<const EllipsoidModel> ellipsoid) {
  require(models && ellipsoid, ErrorCode::InvalidArgument, "context needs surrogates and an envelope");
  auto stats = descriptive_stats(data);
  return PlantContext{std::move(data), std::move(models), std::move(ellipsoid), std::move(stats)};
}

AmbientCase mean_ambient(const PlantContext& ctx, std::optional<double> at_celsius) {
  AmbientCase c;
  for (const auto& v : ctx.data.schema())
    if (v.role == Role::AmbientInput) c.values[v.name] = find_stats(ctx.stats, v.name).mean;
  if (at_celsius) {
    require(c.values.count("AT") != 0, ErrorCode::InvalidArgument, "data has no ambient temperature column AT");
    c.values["AT"] = *at_celsius;
    c.label = "AT=" + fmt(*at_celsius) + "C";
  } else {
    c.label = "mean";
  }
  return c;
}

ScenarioResult setpoint_optimize(const PlantContext& ctx, double power_mw, const AmbientCase& ambient, Mode mode,
                                 double tau, const RunOptions& options) {
  const auto& models = *ctx.models;
  const auto names = models.input_names();
  const Index p = static_cast<Index>(names.size());
  Vec lower = Vec::Zero(p), upper = Vec::Ones(p);
  AmbientLock lock;
  for (Index j = 0; j < p; ++j) {
    const auto& spec = ctx.data.schema()[static_cast<std::size_t>(ctx.data.column_index(names[static_cast<std::size_t>(j)]))];
    if (spec.role == Role::ProcessInput) upper(j) = options.process_upper;
  }
  for (const auto& [name, value] : ambient.values) lock.values[name] = models.scaler.scale(name, value);

  ScenarioResult r;
  r.setpoint = power_mw;
  r.mode = mode;
  r.tau = tau;
  r.case_label = ambient.label;
  const auto spec = build_problem(ctx.models, power_mw, std::nullopt, lower, upper, mode,
                                  mode == Mode::MadOpt ? std::optional<double>(tau) : std::nullopt, ctx.ellipsoid,
                                  lock);
  try {
    auto ms = multi_start(spec, options.n_starts, options.seed, options.solver);
    r.solution = std::move(ms.best);
    r.all_starts = std::move(ms.all);
    r.solved = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Solver) throw;
    r.error = e.what();
    return r;
  }
  r.consistency = check_domain_consistency(r.solution, *ctx.ellipsoid, tau, ctx.data);
  return r;
}

// ---------------------------------------------------------------------------

void RampSpec::validate() const {
  require(step > 0.0, ErrorCode::InvalidArgument, "ramp step must be > 0");
  require(start < end, ErrorCode::InvalidArgument, "ramp start must be below its end");
  require(!ambient_temperatures.empty(), ErrorCode::InvalidArgument, "ramp needs at least one ambient case");
  (void)Tolerance(tau);
}

std::vector<double> RampSpec::setpoints() const {
  validate();
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((end - start) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

int SweepReport::solves_completed() const {
  int n = 0;
  for (const auto& c : cases)
    for (const auto& r : c.rows) n += r.solved ? 1 : 0;
  return n;
}

TrendCheck check_trends(const std::vector<ScenarioResult>& rows) {
  TrendCheck t;
  const ScenarioResult* prev = nullptr;
  for (const auto& r : rows) {
    if (!r.feasible() || !r.solution.predicted) continue;
    if (prev) {
      if (r.solution.predicted->te < prev->solution.predicted->te) ++t.te_violations;
      if (r.solution.predicted->thr > prev->solution.predicted->thr) ++t.thr_violations;
    }
    prev = &r;
  }
  return t;
}

SweepReport ramp_sweep(const PlantContext& ctx, const RampSpec& spec, const RunOptions& options) {
  const auto setpoints = spec.setpoints();
  SweepReport report;
  report.spec = spec;
  const Index gffr = ctx.ellipsoid->index_of("GFFR");
  for (double at : spec.ambient_temperatures) {
    SweepCase c;
    c.ambient = mean_ambient(ctx, at);
    for (double sp : setpoints) {
      auto r = setpoint_optimize(ctx, sp, c.ambient, spec.mode, spec.tau, options);
      if (r.solved && r.solution.x_scaled(gffr) <= 0.02) ++c.gffr_at_lower;
      c.rows.push_back(std::move(r));
    }
    c.trend = check_trends(c.rows);
    report.cases.push_back(std::move(c));
  }
  return report;
}

// ---------------------------------------------------------------------------

void ExtrapolationSpec::validate() const {
  require(!setpoints.empty(), ErrorCode::InvalidArgument, "extrapolation needs setpoints");
  for (double s : setpoints)
    require(s >= threshold, ErrorCode::InvalidArgument,
            "extrapolation setpoint " + fmt(s) + " is below the training threshold " + fmt(threshold));
  require(upper_bound >= 1.0, ErrorCode::InvalidArgument, "extrapolation upper bound must be >= 1");
  require(ambient_perturbation >= 0.0 && match_window > 0.0, ErrorCode::InvalidArgument,
          "invalid ambient perturbation or match window");
  for (double s : setpoints) (void)Tolerance(tau_for(s));
}

double ExtrapolationSpec::tau_for(double setpoint) const {
  const auto it = tau_schedule.find(setpoint);
  require(it != tau_schedule.end(), ErrorCode::InvalidArgument, "no tau scheduled for setpoint " + fmt(setpoint));
  return it->second;
}

std::optional<GroundTruth> nearest_holdout(const Dataset& holdout, double setpoint, double window) {
  const Vec power = holdout.column(kPower);
  const Mat X = holdout.inputs();
  std::vector<Index> near;
  for (Index i = 0; i < power.size(); ++i)
    if (std::abs(power(i) - setpoint) <= window) near.push_back(i);
  if (near.empty()) {
    Index best = 0;
    for (Index i = 1; i < power.size(); ++i)
      if (std::abs(power(i) - setpoint) < std::abs(power(best) - setpoint)) best = i;
    near.push_back(best);
  }
  GroundTruth g;
  g.x_eng = Vec::Zero(X.cols());
  for (Index i : near) {
    g.x_eng += X.row(i).transpose();
    g.power += power(i);
  }
  g.rows_used = static_cast<Index>(near.size());
  g.x_eng /= static_cast<double>(near.size());
  g.power /= static_cast<double>(near.size());
  return g;
}

ExtrapolationReport extrapolate(const PlantContext& ctx, const Dataset& holdout, const ExtrapolationSpec& spec,
                                const RunOptions& options) {
  spec.validate();
  ExtrapolationReport report;
  report.spec = spec;
  report.ambient = mean_ambient(ctx);
  report.ambient.label = "mean+perturbation";
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& [name, value] : report.ambient.values)
    value += unit(rng) * spec.ambient_perturbation * find_stats(ctx.stats, name).std;

  RunOptions opts = options;
  opts.process_upper = spec.upper_bound;
  for (double sp : spec.setpoints) {
    ExtrapolationRow row;
    row.setpoint = sp;
    row.tau = spec.tau_for(sp);
    row.madopt = setpoint_optimize(ctx, sp, report.ambient, Mode::MadOpt, row.tau, opts);
    row.unconstrained = setpoint_optimize(ctx, sp, report.ambient, Mode::Unconstrained, row.tau, opts);
    if (!row.madopt.feasible())
      report.warnings.push_back("MadOpt infeasible at " + fmt(sp) + " MW with tau " + fmt(row.tau) +
                                "; consider tune_tau");
    report.rows.push_back(std::move(row));
  }

  // Holdout rows are consulted only from here on.
  const auto names = ctx.models->input_names();
  const double cdp_max = find_stats(ctx.stats, "CDP").max, gffr_max = find_stats(ctx.stats, "GFFR").max;
  const Index cdp = ctx.ellipsoid->index_of("CDP"), gffr = ctx.ellipsoid->index_of("GFFR");
  for (auto& row : report.rows) {
    row.truth = nearest_holdout(holdout, row.setpoint, spec.match_window);
    const Vec truth = row.truth->x_eng;
    for (std::size_t j = 0; j < names.size(); ++j) {
      const Index i = static_cast<Index>(j);
      if (row.madopt.solved) row.deviation_madopt[names[j]] = std::abs(row.madopt.solution.x_eng(i) - truth(i));
      if (row.unconstrained.solved)
        row.deviation_unconstrained[names[j]] = std::abs(row.unconstrained.solution.x_eng(i) - truth(i));
    }
    row.cdp_gffr_beyond_subspace = row.madopt.solved && row.madopt.solution.x_eng(cdp) > cdp_max &&
                                   row.madopt.solution.x_eng(gffr) > gffr_max;
  }
  return report;
}

TauTuning tune_tau(const PlantContext& ctx, double setpoint, const std::vector<double>& grid,
                   const AmbientCase& ambient, const RunOptions& options) {
  require(!grid.empty(), ErrorCode::InvalidArgument, "tau grid is empty");
  require(std::is_sorted(grid.begin(), grid.end()), ErrorCode::InvalidArgument, "tau grid must be ascending");
  TauTuning out;
  for (double tau : grid) {
    TauTrial t;
    t.tau = tau;
    const auto r = setpoint_optimize(ctx, setpoint, ambient, Mode::MadOpt, tau, options);
    if (!r.solved) {
      t.note = r.error;
    } else {
      t.feasible = r.feasible();
      t.d_m = r.solution.d_m.value_or(0.0);
      t.pairs_inside = std::all_of(r.consistency.pair_distances.begin(), r.consistency.pair_distances.end(),
                                   [tau](const auto& pd) { return pd.second <= tau + 1e-6; });
      if (!t.feasible) t.note = r.solution.status;
    }
    if (!out.tau && t.feasible && t.pairs_inside) out.tau = tau;
    out.table.push_back(std::move(t));
  }
  return out;
}

}  // namespace madopt
