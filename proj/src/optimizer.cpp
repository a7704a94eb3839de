#include "madopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace madopt {

const char* to_string(Mode m) { return m == Mode::MadOpt ? "madopt" : "unconstrained"; }

Mode mode_from_string(std::string_view s) {
  if (s == "madopt" || s == "MAD_OPT" || s == "mad_opt") return Mode::MadOpt;
  if (s == "unconstrained" || s == "UNCONSTRAINED") return Mode::Unconstrained;
  fail(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

void ProblemSpec::validate() const {
  require(objective != nullptr, ErrorCode::InvalidArgument, "problem has no objective");
  require(lower.size() >= 1 && lower.size() == upper.size(), ErrorCode::InvalidArgument,
          "problem bounds have mismatched sizes");
  for (Index j = 0; j < lower.size(); ++j)
    require(lower(j) <= upper(j), ErrorCode::InvalidArgument,
            "lower bound exceeds upper bound for variable " +
                (j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)] : std::to_string(j)));
  if (setpoint_fn) require(epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be > 0");
  if (mode == Mode::MadOpt) {
    require(ellipsoid != nullptr, ErrorCode::InvalidArgument, "MadOpt mode needs an ellipsoid");
    require(tau > 0.0, ErrorCode::InvalidArgument, "MadOpt mode needs tau > 0");
    require(ellipsoid->dim() == dim(), ErrorCode::InvalidArgument, "ellipsoid dimension mismatch");
  }
}

void SolverSettings::validate() const {
  require(max_outer > 0 && max_inner > 0 && lbfgs_memory > 0, ErrorCode::InvalidArgument,
          "solver iteration limits must be positive");
  require(penalty_growth > 1.0, ErrorCode::InvalidArgument, "penalty growth factor must exceed 1");
  require(initial_penalty > 0.0 && stationarity_tol > 0.0 && feasibility_tol > 0.0, ErrorCode::InvalidArgument,
          "solver tolerances and initial penalty must be positive");
}

double default_epsilon(const ScalerParams& scaler) {
  const Index k = scaler.index_of(kPower);
  const double one_mw = 1.0 / (scaler.maxs()(k) - scaler.mins()(k));
  return one_mw * one_mw;
}

ProblemSpec build_problem(std::shared_ptr<const SurrogateSet> models, double setpoint_mw,
                          std::optional<double> epsilon, Vec lower, Vec upper, Mode mode, std::optional<double> tau,
                          std::shared_ptr<const EllipsoidModel> ellipsoid, const AmbientLock& ambient_lock) {
  require(models != nullptr, ErrorCode::InvalidArgument, "build_problem needs trained surrogates");
  const std::string& ref = models->scaler.id();
  for (Target t : {Target::Power, Target::TE, Target::THR}) {
    const auto& m = models->model(t);
    require(m.scaler_ref == ref, ErrorCode::InvalidArgument,
            std::string("mismatched scalers: ") + to_string(t) + " model uses '" + m.scaler_ref + "', expected '" +
                ref + "'");
    require(m.input_names == models->power.input_names, ErrorCode::InvalidArgument,
            "surrogates disagree on input variables");
  }

  ProblemSpec spec;
  spec.mode = mode;
  spec.names = models->input_names();
  spec.models = models;
  spec.setpoint_mw = setpoint_mw;
  spec.setpoint = models->scaler.scale(kPower, setpoint_mw);
  require(std::isfinite(spec.setpoint) && spec.setpoint >= -0.5 && spec.setpoint <= 1.5, ErrorCode::InvalidArgument,
          "setpoint " + std::to_string(setpoint_mw) + " MW is outside the representable scaled range");
  spec.epsilon = epsilon.value_or(default_epsilon(models->scaler));

  const Index p = static_cast<Index>(spec.names.size());
  require(lower.size() == p && upper.size() == p, ErrorCode::InvalidArgument, "bounds must cover every input");
  for (const auto& [name, value] : ambient_lock.values) {
    Index j = -1;
    for (Index k = 0; k < p; ++k)
      if (spec.names[static_cast<std::size_t>(k)] == name) j = k;
    require(j >= 0, ErrorCode::InvalidArgument, "ambient lock names unknown variable '" + name + "'");
    lower(j) = value - ambient_lock.width;
    upper(j) = value + ambient_lock.width;
  }
  spec.lower = std::move(lower);
  spec.upper = std::move(upper);

  if (mode == Mode::MadOpt) {
    require(tau.has_value(), ErrorCode::InvalidArgument, "MadOpt mode needs a tolerance tau");
    spec.tau = Tolerance(*tau).value();
    spec.ellipsoid = std::move(ellipsoid);
    require(spec.ellipsoid != nullptr, ErrorCode::InvalidArgument, "MadOpt mode needs a fitted ellipsoid");
    require(spec.ellipsoid->names() == spec.names, ErrorCode::InvalidArgument,
            "ellipsoid variables differ from surrogate inputs");
  } else {
    if (tau) spec.warnings.push_back("tau ignored in unconstrained mode");
    spec.ellipsoid = std::move(ellipsoid);  // kept for reporting only
  }

  const MlpModel* te = &models->te;
  const MlpModel* thr = &models->thr;
  const MlpModel* power = &models->power;
  spec.objective = [models, te, thr](const Vec& x, Vec* grad) {
    if (!grad) return -te->forward(x) + thr->forward(x);
    Vec g_te, g_thr;
    const double v = -te->forward_grad(x, g_te) + thr->forward_grad(x, g_thr);
    *grad = g_thr - g_te;
    return v;
  };
  spec.setpoint_fn = [models, power](const Vec& x, Vec* grad) {
    if (!grad) return power->forward(x);
    return power->forward_grad(x, *grad);
  };
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

Vec project(const Vec& x, const Vec& lo, const Vec& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

double projected_gradient_norm(const Vec& x, const Vec& g, const Vec& lo, const Vec& hi) {
  return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

std::string describe(const Vec& x) {
  std::ostringstream s;
  s.precision(10);
  s << '[';
  for (Index j = 0; j < x.size(); ++j) s << (j ? ", " : "") << x(j);
  s << ']';
  return s.str();
}

double eval_checked(const SmoothFn& fn, const Vec& x, Vec* grad, const char* what) {
  const double v = fn(x, grad);
  if (!std::isfinite(v) || (grad && !grad->allFinite()))
    fail(ErrorCode::Numeric, std::string("non-finite ") + what + " at x = " + describe(x));
  return v;
}

struct InnerResult {
  Vec x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected L-BFGS for smooth f over a box.
InnerResult minimize_box(const SmoothFn& f, const Vec& x0, const Vec& lo, const Vec& hi, double tol, int max_iter,
                         int memory) {
  InnerResult r;
  r.x = project(x0, lo, hi);
  Vec g;
  r.f = eval_checked(f, r.x, &g, "objective");
  std::deque<Vec> S, Y;
  std::deque<double> rho;
  const Index n = r.x.size();

  for (; r.iterations < max_iter; ++r.iterations) {
    if (projected_gradient_norm(r.x, g, lo, hi) <= tol) {
      r.converged = true;
      break;
    }
    Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
    for (Index j = 0; j < n; ++j)
      free(j) = !((r.x(j) <= lo(j) && g(j) > 0.0) || (r.x(j) >= hi(j) && g(j) < 0.0));
    const Vec mask = free.cast<double>();

    Vec q = g.cwiseProduct(mask);
    std::vector<double> a(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      a[i] = rho[i] * S[i].cwiseProduct(mask).dot(q);
      q -= a[i] * Y[i].cwiseProduct(mask);
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    Vec d = gamma * q;
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = rho[i] * Y[i].cwiseProduct(mask).dot(d);
      d += (a[i] - b) * S[i].cwiseProduct(mask);
    }
    d = -d.cwiseProduct(mask);
    if (!d.allFinite() || g.dot(d) >= 0.0) {
      d = -g.cwiseProduct(mask);
      S.clear();
      Y.clear();
      rho.clear();
    }

    double alpha = S.empty() ? std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
    bool accepted = false;
    Vec xn, gn;
    double fn = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      xn = project(r.x + alpha * d, lo, hi);
      const Vec step = xn - r.x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      fn = eval_checked(f, xn, &gn, "objective");
      if (fn <= r.f + 1e-4 * g.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {
        S.clear();
        Y.clear();
        rho.clear();
        continue;
      }
      break;  // stalled on steepest descent
    }
    const Vec s = xn - r.x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    r.x = xn;
    r.f = fn;
    g = gn;
  }
  if (!r.converged) r.converged = projected_gradient_norm(r.x, g, lo, hi) <= tol;
  return r;
}

// The band is solved slightly inside epsilon so accepted points satisfy it strictly.
double band_epsilon(const ProblemSpec& spec) { return spec.epsilon * (1.0 - 1e-4); }

struct ConstraintValues {
  double ce = 0.0;  // setpoint residual
  double ci = -1.0; // d^2 - tau^2
  Vec g_ce;
  Vec g_ci;
};

ConstraintValues constraints(const ProblemSpec& spec, const Vec& x, bool with_grad) {
  ConstraintValues c;
  if (spec.setpoint_fn) {
    c.ce = eval_checked(spec.setpoint_fn, x, with_grad ? &c.g_ce : nullptr, "setpoint model") - spec.setpoint;
  } else if (with_grad) {
    c.g_ce = Vec::Zero(x.size());
  }
  if (spec.uses_ellipsoid()) {
    c.ci = spec.ellipsoid->distance_sq(x) - spec.tau * spec.tau;
    if (with_grad) c.g_ci = spec.ellipsoid->distance_sq_grad(x);
  } else if (with_grad) {
    c.g_ci = Vec::Zero(x.size());
  }
  return c;
}

}  // namespace

KktResiduals kkt_residuals(const ProblemSpec& spec, const Vec& x, double lambda_setpoint, double lambda_ellipsoid,
                           double lambda_band) {
  KktResiduals k;
  Vec g;
  eval_checked(spec.objective, x, &g, "objective");
  const auto c = constraints(spec, x, true);
  // The band term lambda_b ((c - s)^2 - eps) contributes 2 lambda_b (c - s) grad c.
  const double lambda_c = lambda_setpoint + 2.0 * lambda_band * c.ce;
  const Vec gl = g + lambda_c * c.g_ce + lambda_ellipsoid * c.g_ci;
  const Vec xp = project(x, spec.lower, spec.upper);
  k.stationarity = projected_gradient_norm(xp, gl, spec.lower, spec.upper);
  k.setpoint_residual = spec.setpoint_fn ? std::abs(c.ce) : 0.0;
  k.ellipsoid_violation = spec.uses_ellipsoid() ? std::max(0.0, c.ci) : 0.0;
  k.bound_violation = std::max({0.0, (spec.lower - x).maxCoeff(), (x - spec.upper).maxCoeff()});
  k.complementarity = spec.uses_ellipsoid() ? std::abs(lambda_ellipsoid * c.ci) : 0.0;
  if (lambda_band != 0.0) k.complementarity += std::abs(lambda_band * (c.ce * c.ce - band_epsilon(spec)));
  k.bound_multipliers = Vec::Zero(x.size());
  constexpr double kActive = 1e-9;
  for (Index j = 0; j < x.size(); ++j) {
    const bool at_lower = x(j) <= spec.lower(j) + kActive;
    const bool at_upper = x(j) >= spec.upper(j) - kActive;
    if (at_lower && at_upper) continue;  // fixed variable: any sign
    if (at_lower) {
      k.bound_multipliers(j) = gl(j);
      if (gl(j) < -1e-6) k.bound_signs_consistent = false;
    } else if (at_upper) {
      k.bound_multipliers(j) = gl(j);
      if (gl(j) > 1e-6) k.bound_signs_consistent = false;
    }
  }
  return k;
}

namespace {

constexpr double kMaxPenalty = 1e12;

struct AlRun {
  Vec x;
  double lambda_e = 0.0;
  double lambda_i = 0.0;
  double lambda_b = 0.0;
  bool converged = false;
  int outer = 0;
  int inner = 0;
};

// Augmented Lagrangian over the box. band=false: setpoint as an equality;
// band=true: setpoint as (c - s)^2 <= eps.
AlRun run_al(const ProblemSpec& spec, const Vec& x0, const SolverSettings& settings, bool band) {
  const bool has_eq = static_cast<bool>(spec.setpoint_fn) && !band;
  const bool has_band = static_cast<bool>(spec.setpoint_fn) && band;
  const bool has_in = spec.uses_ellipsoid();
  const double band_eps = band_epsilon(spec);
  AlRun run;
  run.x = x0;
  double rho = settings.initial_penalty;
  double prev_violation = std::numeric_limits<double>::infinity();
  int stalled = 0;

  auto shifted_term = [](double lambda, double r, double c, double& value) {
    const double shifted = std::max(0.0, lambda + r * c);
    value += (shifted * shifted - lambda * lambda) / (2.0 * r);
    return shifted;
  };

  for (int outer = 0; outer < settings.max_outer; ++outer) {
    const double le = run.lambda_e, li = run.lambda_i, lb = run.lambda_b, r = rho;
    const SmoothFn merit = [&, le, li, lb, r](const Vec& z, Vec* grad) {
      double v = spec.objective(z, grad);
      if (has_eq || has_band) {
        Vec gc;
        const double c = spec.setpoint_fn(z, grad ? &gc : nullptr) - spec.setpoint;
        if (has_eq) {
          v += le * c + 0.5 * r * c * c;
          if (grad) *grad += (le + r * c) * gc;
        } else {
          const double shifted = shifted_term(lb, r, c * c - band_eps, v);
          if (grad && shifted > 0.0) *grad += (shifted * 2.0 * c) * gc;
        }
      }
      if (has_in) {
        const double c = spec.ellipsoid->distance_sq(z) - spec.tau * spec.tau;
        const double shifted = shifted_term(li, r, c, v);
        if (grad && shifted > 0.0) *grad += shifted * spec.ellipsoid->distance_sq_grad(z);
      }
      return v;
    };
    const double inner_tol = std::max(0.1 * settings.stationarity_tol, std::pow(10.0, -(outer + 2)));
    const auto inner =
        minimize_box(merit, run.x, spec.lower, spec.upper, inner_tol, settings.max_inner, settings.lbfgs_memory);
    run.x = inner.x;
    run.inner += inner.iterations;
    run.outer = outer + 1;

    const auto c = constraints(spec, run.x, false);
    const double cb = c.ce * c.ce - band_eps;
    if (has_eq) run.lambda_e += rho * c.ce;
    if (has_band) run.lambda_b = std::max(0.0, run.lambda_b + rho * cb);
    if (has_in) run.lambda_i = std::max(0.0, run.lambda_i + rho * c.ci);

    const double eq_viol = has_eq ? std::abs(c.ce) : 0.0;
    const double band_viol = has_band ? std::max(0.0, cb) : 0.0;
    const double in_viol = has_in ? std::max(0.0, c.ci) : 0.0;
    const auto kkt = kkt_residuals(spec, run.x, run.lambda_e, run.lambda_i, run.lambda_b);
    if (eq_viol <= settings.feasibility_tol && band_viol <= settings.feasibility_tol &&
        in_viol <= settings.feasibility_tol && kkt.stationarity <= settings.stationarity_tol &&
        kkt.complementarity <= 1e3 * settings.feasibility_tol) {
      run.converged = true;
      break;
    }
    double violation = std::max(eq_viol, has_in ? std::max(c.ci, -run.lambda_i / rho) : 0.0);
    if (has_band) violation = std::max(violation, std::max(cb, -run.lambda_b / rho));
    if (violation > settings.feasibility_tol && violation > 0.25 * prev_violation) {
      if (rho >= kMaxPenalty && inner.iterations == 0 && ++stalled >= 3) break;  // no further progress possible
      rho = std::min(rho * settings.penalty_growth, kMaxPenalty);
    }
    prev_violation = violation;
  }
  return run;
}

}  // namespace

OptSolution solve(const ProblemSpec& spec, const Vec& x0, const SolverSettings& settings, int start_id) {
  spec.validate();
  settings.validate();
  require(x0.size() == spec.dim(), ErrorCode::InvalidArgument, "start point dimension mismatch");
  require(x0.allFinite(), ErrorCode::InvalidArgument, "start point is not finite");
  for (Index j = 0; j < x0.size(); ++j)
    require(x0(j) >= spec.lower(j) - 1e-12 && x0(j) <= spec.upper(j) + 1e-12, ErrorCode::InvalidArgument,
            "start point outside bounds");
  const bool has_eq = static_cast<bool>(spec.setpoint_fn);
  const bool has_in = spec.uses_ellipsoid();

  AlRun run = run_al(spec, project(x0, spec.lower, spec.upper), settings, false);
  bool band = false;
  if (!run.converged && has_eq) {
    // Exact setpoint unreachable, but the final point may still sit inside the
    // epsilon band: re-solve with the band itself as the constraint.
    const auto c = constraints(spec, run.x, false);
    if (c.ce * c.ce <= spec.epsilon) {
      AlRun second = run_al(spec, run.x, settings, true);
      second.outer += run.outer;
      second.inner += run.inner;
      run = std::move(second);
      band = true;
    }
  }

  OptSolution sol;
  sol.start_id = start_id;
  sol.x_scaled = run.x;
  sol.converged = run.converged;
  sol.outer_iterations = run.outer;
  sol.inner_iterations = run.inner;
  sol.objective = eval_checked(spec.objective, run.x, nullptr, "objective");
  sol.lambda_setpoint = run.lambda_e;
  sol.lambda_ellipsoid = run.lambda_i;
  sol.lambda_band = run.lambda_b;
  sol.band_constraint = band;
  sol.kkt = kkt_residuals(spec, run.x, run.lambda_e, run.lambda_i, run.lambda_b);
  if (has_eq) {
    sol.setpoint_value = eval_checked(spec.setpoint_fn, run.x, nullptr, "setpoint model");
    sol.setpoint_residual_sq = (sol.setpoint_value - spec.setpoint) * (sol.setpoint_value - spec.setpoint);
  }
  if (spec.ellipsoid) sol.d_m = spec.ellipsoid->distance(run.x);
  if (spec.models) {
    sol.x_eng = spec.models->unscale_inputs(run.x);
    sol.predicted = Predictions{spec.models->predict(Target::Power, run.x), spec.models->predict(Target::TE, run.x),
                                spec.models->predict(Target::THR, run.x)};
  }
  // Converged solutions must honour the acceptance bands exactly as stated.
  if (sol.converged && has_eq && sol.setpoint_residual_sq > spec.epsilon) sol.converged = false;
  if (sol.converged && has_in && *sol.d_m > spec.tau + 1e-6) sol.converged = false;
  sol.status = !sol.converged ? "not_converged" : band ? "converged_band" : "converged";
  return sol;
}

// ---------------------------------------------------------------------------

std::vector<Vec> sample_starts(const ProblemSpec& spec, int n_starts, std::uint64_t seed) {
  spec.validate();
  require(n_starts >= 1, ErrorCode::InvalidArgument, "n_starts must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index p = spec.dim();

  Vec anchor;
  if (spec.uses_ellipsoid()) {
    const auto& e = *spec.ellipsoid;
    const SmoothFn d2 = [&e](const Vec& x, Vec* grad) {
      if (grad) *grad = e.distance_sq_grad(x);
      return e.distance_sq(x);
    };
    anchor = minimize_box(d2, project(e.mu(), spec.lower, spec.upper), spec.lower, spec.upper, 1e-12, 2000, 8).x;
    const double tau2 = spec.tau * spec.tau;
    if (e.distance_sq(anchor) > tau2)
      fail(ErrorCode::Solver, "no feasible start: the box and the tau-ellipsoid do not intersect (closest d_M = " +
                                  std::to_string(e.distance(anchor)) + ", tau = " + std::to_string(spec.tau) + ")");
  }

  std::vector<Vec> starts;
  for (int k = 0; k < n_starts; ++k) {
    Vec u(p);
    for (Index j = 0; j < p; ++j) u(j) = spec.lower(j) + unit(rng) * (spec.upper(j) - spec.lower(j));
    const double shrink = unit(rng);
    if (spec.uses_ellipsoid()) {
      const auto& e = *spec.ellipsoid;
      const double tau2 = spec.tau * spec.tau;
      if (e.distance_sq(u) > tau2) {
        // d^2(anchor + t (u - anchor)) = A t^2 + 2 B t + C, C <= tau^2.
        const Vec delta = u - anchor;
        const double C = e.distance_sq(anchor);
        const Vec g = 0.5 * e.distance_sq_grad(anchor);
        const double B = g.dot(delta);
        const double A = e.distance_sq(anchor + delta) - C - 2.0 * B;
        double t_max = 0.0;
        if (A > 0.0) t_max = std::clamp((-B + std::sqrt(std::max(0.0, B * B - A * (C - tau2)))) / A, 0.0, 1.0);
        u = anchor + shrink * t_max * delta;
      }
    }
    starts.push_back(project(u, spec.lower, spec.upper));
  }
  return starts;
}

MultiStartResult multi_start(const ProblemSpec& spec, int n_starts, std::uint64_t seed,
                             const SolverSettings& settings) {
  const auto starts = sample_starts(spec, n_starts, seed);
  MultiStartResult out;
  for (std::size_t k = 0; k < starts.size(); ++k) out.all.push_back(solve(spec, starts[k], settings, static_cast<int>(k)));

  auto infeasibility = [](const OptSolution& s) {
    return std::max({s.kkt.setpoint_residual, s.kkt.ellipsoid_violation, s.kkt.bound_violation});
  };
  auto better = [](const OptSolution& a, const OptSolution& b) {
    if (std::abs(a.objective - b.objective) > 1e-9) return a.objective < b.objective;
    const double da = a.d_m.value_or(0.0), db = b.d_m.value_or(0.0);
    if (da != db) return da < db;
    return a.start_id < b.start_id;
  };
  const OptSolution* best = nullptr;
  for (const auto& s : out.all)
    if (s.converged && (!best || better(s, *best))) best = &s;
  if (!best) {
    for (const auto& s : out.all)
      if (!best || infeasibility(s) < infeasibility(*best)) best = &s;
  }
  out.best = *best;
  return out;
}

// ---------------------------------------------------------------------------

ConsistencyReport check_domain_consistency(const OptSolution& sol, const EllipsoidModel& ellipsoid, double tau,
                                           const Dataset& data,
                                           const std::vector<std::pair<std::string, std::string>>& pairs) {
  require(sol.x_eng.size() == sol.x_scaled.size() && sol.predicted.has_value(), ErrorCode::InvalidArgument,
          "domain check needs a solution with engineering-unit values");
  ConsistencyReport r;
  r.tau = tau;
  r.d_m = ellipsoid.distance(sol.x_scaled);
  const auto stats = descriptive_stats(data);
  auto outside = [](double v, const ColumnStats& s) {
    const double slack = 1e-9 * std::max(1.0, std::abs(s.max - s.min));
    return v < s.min - slack || v > s.max + slack;
  };
  const auto& names = ellipsoid.names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& s = find_stats(stats, names[j]);
    if (outside(sol.x_eng(static_cast<Index>(j)), s)) {
      r.out_of_range_variables.push_back(names[j]);
      r.flags.push_back("variable_out_of_range:" + names[j]);
    }
  }
  if (r.d_m > tau + 1e-6) {
    r.inside_ellipsoid = false;
    r.flags.push_back("outside_ellipsoid");
  }
  for (const auto& [a, b] : pairs) {
    const double d = ellipsoid.pair_distance(a, b, sol.x_scaled);
    r.pair_distances.emplace_back(a + "/" + b, d);
    if (d > tau + 1e-6) r.flags.push_back("outside_pair_ellipse:" + a + "/" + b);
  }
  if (outside(sol.predicted->te, find_stats(stats, kTE))) {
    r.outputs_in_range = false;
    r.flags.push_back("TE_out_of_range");
  }
  if (outside(sol.predicted->thr, find_stats(stats, kTHR))) {
    r.outputs_in_range = false;
    r.flags.push_back("THR_out_of_range");
  }
  return r;
}

}  // namespace madopt
