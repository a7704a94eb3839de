// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance <path-to-madopt-cli> <scratch-dir> [criterion ...]

#include "app.hpp"
#include "madopt/explain.hpp"
#include "madopt/robustness.hpp"
#include "madopt/scenarios.hpp"
#include "madopt/synth.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace madopt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// Reference plant shared by criteria 1, 2, 6 and 8.
const TrainedPlant& reference_plant() {
  static const TrainedPlant plant = train_plant(synth_plant_default(5000, 7).data, PipelineConfig{});
  return plant;
}

constexpr std::array<Target, 3> kTargets = {Target::Power, Target::TE, Target::THR};

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto& plant = reference_plant();
  // Coverage is measured on a fresh exchangeable sample from the same
  // generator; the 500-row test split is reported alongside.
  const Dataset fresh = synth_plant_default(20000, 1007).data;
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& m = plant.ctx.models->model(kTargets[k]);
    const double cov = empirical_coverage(m, plant.conformal[k], fresh, plant.ctx.models->scaler);
    const double r2 = plant.test_metrics[k].r2;
    ok = ok && r2 >= 0.95 && cov >= 0.93;
    d << m.target << " R2=" << fmt(r2) << " cov=" << fmt(cov) << " (split " << fmt(plant.coverage[k], 3) << "); ";
  }
  const double t = seconds_since(t0);
  ok = ok && t < 300.0;
  d << fmt(t, 3) << "s";
  return {ok, d.str()};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto& ctx = reference_plant().ctx;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rel_error = [](const Vec& g, const Vec& fd) {
    return (g - fd).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-12);
  };
  std::array<int, 4> good{};
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    Vec x(9);
    for (Index j = 0; j < 9; ++j) x(j) = u(rng);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& m = ctx.models->model(kTargets[k]);
      Vec fd(9);
      for (Index j = 0; j < 9; ++j) {
        Vec a = x, b = x;
        a(j) += 1e-6;
        b(j) -= 1e-6;
        fd(j) = (m.forward(a) - m.forward(b)) / 2e-6;
      }
      good[k] += rel_error(m.grad_input(x), fd) <= 1e-4 ? 1 : 0;
    }
    Vec fd(9);
    for (Index j = 0; j < 9; ++j) {
      Vec a = x, b = x;
      a(j) += 1e-6;
      b(j) -= 1e-6;
      fd(j) = (ctx.ellipsoid->distance_sq(a) - ctx.ellipsoid->distance_sq(b)) / 2e-6;
    }
    good[3] += rel_error(ctx.ellipsoid->distance_sq_grad(x), fd) <= 1e-4 ? 1 : 0;
  }
  const double t = seconds_since(t0);
  bool ok = t < 10.0;
  for (int g : good) ok = ok && g >= 95;
  return {ok, "points within 1e-4: Power " + std::to_string(good[0]) + ", TE " + std::to_string(good[1]) + ", THR " +
                  std::to_string(good[2]) + ", ellipsoid " + std::to_string(good[3]) + " of 100; " + fmt(t, 3) + "s"};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index p = 9, n = 5000;
  Mat L = Mat::Identity(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < i; ++j) L(i, j) = 0.3 * gauss(rng);
  Mat X(n, p);
  for (Index i = 0; i < n; ++i) {
    Vec z(p);
    for (Index j = 0; j < p; ++j) z(j) = gauss(rng);
    X.row(i) = (L * z).transpose();
  }
  const auto e = fit_ellipsoid(X, 0.0);
  const double d_mu = e.distance(e.mu());

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = e.distance_sq(X.row(i).transpose());
  std::sort(d2.begin(), d2.end());
  const boost::math::chi_squared chi(9.0);
  double ks = 0.0;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    const double F = boost::math::cdf(chi, d2[i]);
    ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }

  Mat A = Mat::Identity(p, p) * 2.0;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) A(i, j) += 0.2 * gauss(rng);
  Vec b(p);
  for (Index j = 0; j < p; ++j) b(j) = gauss(rng);
  const auto ea = fit_ellipsoid((X * A.transpose()).rowwise() + b.transpose(), 0.0);
  double affine = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vec q = X.row(k).transpose() * 1.5;
    affine = std::max(affine, std::abs(e.distance(q) - ea.distance(A * q + b)));
  }

  Mat s2(2, 2);
  s2 << 1, 0.8, 0.8, 1;
  const EllipsoidModel two(Vec::Zero(2), s2, 0.0, {"a", "b"});
  const double hand = std::abs(two.distance(Vec::Ones(2)) - std::sqrt(2.0 / 1.8));

  const bool ok = d_mu == 0.0 && ks < 0.05 && affine <= 1e-8 && hand <= 1e-10;
  return {ok, "d(mu)=" + fmt(d_mu) + ", KS=" + fmt(ks) + ", affine max diff=" + fmt(affine) + ", 2-D error=" + fmt(hand)};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  // minimize 1/2|x-a|^2, x_1 = 0.5, |x| <= 1, box [-2, 2]^3; optimum (0.5, sqrt(0.75), 0)
  ProblemSpec s;
  s.mode = Mode::MadOpt;
  const Vec a = (Vec(3) << 0.5, 3.0, 0.0).finished();
  s.objective = [a](const Vec& x, Vec* g) {
    if (g) *g = x - a;
    return 0.5 * (x - a).squaredNorm();
  };
  s.setpoint_fn = [](const Vec& x, Vec* g) {
    if (g) *g = Vec::Unit(3, 0);
    return x(0);
  };
  s.setpoint = 0.5;
  s.epsilon = 1e-12;
  s.lower = Vec::Constant(3, -2.0);
  s.upper = Vec::Constant(3, 2.0);
  s.ellipsoid = std::make_shared<EllipsoidModel>(Vec::Zero(3), Mat::Identity(3, 3), 0.0, std::vector<std::string>{});
  s.tau = 1.0;
  const auto sol = solve(s, Vec::Zero(3), SolverSettings{});
  const Vec expect = (Vec(3) << 0.5, std::sqrt(0.75), 0.0).finished();
  const double stub_err = (sol.x_scaled - expect).cwiseAbs().maxCoeff();

  auto f2 = [](const Vec& x) { return std::pow(x(0) * x(0) - 1.0, 2) + 0.3 * x(0) + std::pow(x(1) - 0.2, 2); };
  ProblemSpec two;
  two.mode = Mode::Unconstrained;
  two.objective = [f2](const Vec& x, Vec* g) {
    if (g) *g = (Vec(2) << 4 * x(0) * (x(0) * x(0) - 1) + 0.3, 2 * (x(1) - 0.2)).finished();
    return f2(x);
  };
  two.lower = Vec::Constant(2, -2.0);
  two.upper = Vec::Constant(2, 2.0);
  Vec best(2);
  double fb = 1e300;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const Vec x = (Vec(2) << -2 + 4.0 * i / 49, -2 + 4.0 * j / 49).finished();
      if (f2(x) < fb) fb = f2(x), best = x;
    }
  for (int it = 0; it < 50; ++it) best(0) -= (4 * best(0) * (best(0) * best(0) - 1) + 0.3) / (12 * best(0) * best(0) - 4);
  best(1) = 0.2;
  const auto ms = multi_start(two, 20, 4, SolverSettings{});
  const double ms_err = (ms.best.x_scaled - best).cwiseAbs().maxCoeff();
  const double t = seconds_since(t0);
  const bool ok = sol.converged && stub_err <= 1e-6 && ms.best.converged && ms_err <= 1e-4 && t < 30.0;
  return {ok, "stub |x-x*|=" + fmt(stub_err) + " (stationarity " + fmt(sol.kkt.stationarity) + "), multi-start |x-x*|=" +
                  fmt(ms_err) + "; " + fmt(t, 3) + "s"};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  constexpr double kSetpoint = 390.0;
  constexpr double kTau = 2.0;
  int mad_clean = 0, unc_flagged = 0;
  std::ostringstream d;
  for (int rep = 0; rep < 10; ++rep) {
    const auto data = synth_plant_default(5000, 100 + static_cast<std::uint64_t>(rep)).data;
    PipelineConfig cfg;
    cfg.split_seed = 21 + static_cast<std::uint64_t>(rep);
    cfg.train.seed = 11 + 3 * static_cast<std::uint64_t>(rep);
    cfg.train.max_epochs = 2000;
    const auto plant = train_plant(data, cfg);
    RunOptions o;
    o.seed = 13 + static_cast<std::uint64_t>(rep);
    const auto ambient = mean_ambient(plant.ctx);
    const auto mad = setpoint_optimize(plant.ctx, kSetpoint, ambient, Mode::MadOpt, kTau, o);
    const auto unc = setpoint_optimize(plant.ctx, kSetpoint, ambient, Mode::Unconstrained, kTau, o);
    const bool clean = mad.feasible() && mad.consistency.ok() && *mad.solution.d_m <= kTau + 1e-6;
    const bool flagged = unc.solved && !unc.consistency.ok();
    mad_clean += clean ? 1 : 0;
    unc_flagged += flagged ? 1 : 0;
    if (rep < 3 && unc.solved)
      d << "rep" << rep << " unconstrained d_M=" << fmt(unc.solution.d_m.value_or(0.0), 3) << "; ";
  }
  const double t = seconds_since(t0);
  const bool ok = mad_clean == 10 && unc_flagged >= 8 && t < 300.0;
  d << "MAD_OPT clean " << mad_clean << "/10, UNCONSTRAINED flagged " << unc_flagged << "/10 at " << kSetpoint
    << " MW, tau " << kTau << "; " << fmt(t, 3) << "s";
  return {ok, d.str()};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto& ctx = reference_plant().ctx;
  RampSpec spec;
  spec.tau = 3.5;
  const auto rep = ramp_sweep(ctx, spec, RunOptions{});
  bool trends = true;
  std::ostringstream d;
  for (const auto& c : rep.cases) {
    int feasible = 0;
    for (const auto& r : c.rows) feasible += r.feasible() ? 1 : 0;
    trends = trends && c.trend.ok() && c.rows.size() == 15;
    d << c.ambient.label << ": " << feasible << "/15 feasible, TE drops " << c.trend.te_violations << ", THR rises "
      << c.trend.thr_violations << "; ";
  }
  const double t = seconds_since(t0);
  const bool ok = rep.solves_completed() == 45 && trends && t < 600.0;
  d << rep.solves_completed() << " solves completed, tau " << spec.tau << "; " << fmt(t, 3) << "s";
  return {ok, d.str()};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const auto data = synth_plant_default(5000, 7).data;
  const auto sub = subspace_filter(data, 380.0);
  if (!sub.subspace || !sub.holdout) return {false, "subspace split left an empty side"};
  const auto plant = train_plant(*sub.subspace, PipelineConfig{});
  const ExtrapolationSpec spec;  // schedule {385: 0.4, 390: 0.45, 395: 0.6}, upper bound 1.8
  const auto rep = extrapolate(plant.ctx, *sub.holdout, spec, RunOptions{});
  bool ok = true;
  std::ostringstream d;
  for (const auto& row : rep.rows) {
    const bool feasible = row.madopt.feasible();
    bool closer = false;
    if (feasible && row.unconstrained.solved)
      closer = row.deviation_madopt.at("CDP") < row.deviation_unconstrained.at("CDP") &&
               row.deviation_madopt.at("GFFR") < row.deviation_unconstrained.at("GFFR");
    ok = ok && feasible && row.cdp_gffr_beyond_subspace && closer;
    d << row.setpoint << "MW tau " << row.tau << ": " << (row.madopt.solved ? row.madopt.solution.status : row.madopt.error.substr(0, 60))
      << (feasible ? (row.cdp_gffr_beyond_subspace ? ", beyond subspace" : ", inside subspace") : "")
      << (closer ? ", closer than unconstrained" : "") << "; ";
  }
  // Diagnostic only: smallest tolerance that does reach each setpoint.
  RunOptions quick;
  quick.n_starts = 6;
  quick.process_upper = spec.upper_bound;
  AmbientCase amb = rep.ambient;
  d << "tuned tau*:";
  ExtrapolationSpec tuned = spec;
  bool all_tuned = true;
  for (double sp : spec.setpoints) {
    const auto tt = tune_tau(plant.ctx, sp, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5}, amb, quick);
    d << ' ' << sp << "->" << (tt.tau ? fmt(*tt.tau, 3) : std::string("none"));
    if (tt.tau) tuned.tau_schedule[sp] = *tt.tau;
    all_tuned = all_tuned && tt.tau.has_value();
  }
  // Informational: the remaining properties under the tuned schedule.
  if (all_tuned) {
    const auto again = extrapolate(plant.ctx, *sub.holdout, tuned, RunOptions{});
    d << "; with tau*:";
    for (const auto& row : again.rows) {
      const bool closer = row.madopt.feasible() && row.unconstrained.solved &&
                          row.deviation_madopt.at("CDP") < row.deviation_unconstrained.at("CDP") &&
                          row.deviation_madopt.at("GFFR") < row.deviation_unconstrained.at("GFFR");
      d << ' ' << row.setpoint << (row.madopt.feasible() ? " feasible" : " infeasible")
        << (row.cdp_gffr_beyond_subspace ? "/beyond" : "/inside") << (closer ? "/closer" : "/not-closer");
    }
  }
  const double t = seconds_since(t0);
  ok = ok && t < 300.0;
  d << "; " << fmt(t, 3) << "s";
  return {ok, d.str()};
}

Outcome criterion8() {
  const auto& plant = reference_plant();
  const auto& ctx = plant.ctx;
  const auto names = ctx.models->input_names();
  const auto sol = setpoint_optimize(ctx, 390.0, mean_ambient(ctx), Mode::MadOpt, 2.0, RunOptions{});
  if (!sol.feasible()) return {false, "no converged MAD_OPT solution to perturb"};
  const auto stats = descriptive_stats(plant.train);
  Vec stds(9);
  for (std::size_t j = 0; j < 9; ++j) stds(static_cast<Index>(j)) = find_stats(stats, names[j]).std;
  const auto mask = process_input_mask(ctx.data.schema(), names);

  MonteCarloSpec spec;  // 50 rounds x 1000 samples at 1%
  const auto t0 = Clock::now();
  const auto r10 = monte_carlo(*ctx.models, sol.solution.x_eng, stds, mask, spec);
  const double t = seconds_since(t0);
  spec.noise_fraction = 0.012;
  const auto r12 = monte_carlo(*ctx.models, sol.solution.x_eng, stds, mask, spec);

  bool ok = t < 120.0;
  std::ostringstream d;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& s = r10.summary[k];
    const bool wider = r12.summary[k].mean_width > s.mean_width;
    ok = ok && s.rounds_mean_within_half_width >= 45 && s.width_ratio() < 1.5 && wider;
    d << to_string(kTargets[k]) << " within " << s.rounds_mean_within_half_width << "/50, ratio "
      << fmt(s.width_ratio()) << ", width " << fmt(s.mean_width) << "->" << fmt(r12.summary[k].mean_width) << "; ";
  }
  d << fmt(t, 3) << "s";
  return {ok, d.str()};
}

Outcome criterion9() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(909);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto normal_mat = [&](Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
    return m;
  };
  const Index p = 9;
  const Vec a = Vec::LinSpaced(p, -2.0, 2.0);
  const Mat bg = normal_mat(100, p);
  const Vec x = normal_mat(p, 1).col(0);
  const BatchModel additive = [a](const Mat& X) -> Vec { return X * a; };
  const auto s = shapley_sampling(additive, bg, x, 2000, 5);
  const Vec closed = a.cwiseProduct(x - bg.colwise().mean().transpose());
  double worst = 0.0;
  bool additive_ok = true;
  for (Index j = 0; j < p; ++j) {
    const double err = std::abs(s.attribution(j) - closed(j));
    worst = std::max(worst, err);
    // 3 SE of the permutation estimator; the floor covers floating-point summation only
    additive_ok = additive_ok && err <= 3.0 * s.std_error(j) + 1e-12 * std::max(1.0, std::abs(closed(j)));
  }

  const BatchModel toy = [](const Mat& X) -> Vec {
    return (X.col(0).array() * X.col(1).array() + X.col(2).array().sin() * X.col(0).array()).matrix();
  };
  const Mat bg3 = normal_mat(40, 3);
  const Vec x3 = normal_mat(3, 1).col(0);
  const auto sampled = shapley_sampling(toy, bg3, x3, 6, 1);
  // brute force over the 6 orderings
  std::vector<Index> perm = {0, 1, 2};
  Vec exact = Vec::Zero(3);
  do {
    Mat Z = bg3;
    double prev = toy(Z).mean();
    for (Index j : perm) {
      Z.col(j).setConstant(x3(j));
      const double cur = toy(Z).mean();
      exact(j) += cur - prev;
      prev = cur;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  exact /= 6.0;
  const double enum_err = (sampled.attribution - exact).cwiseAbs().maxCoeff();

  const BatchModel ignores_last = [](const Mat& X) -> Vec { return (X.col(0).array() * X.col(1).array()).tanh().matrix(); };
  const auto np = shapley_sampling(ignores_last, bg3, x3, 500, 2);
  const double t = seconds_since(t0);
  const bool ok = additive_ok && sampled.exhaustive && enum_err <= 1e-12 && np.attribution(2) == 0.0 && t < 60.0;
  return {ok, "additive max err " + fmt(worst) + ", enumeration err " + fmt(enum_err) + ", null player " +
                  fmt(np.attribution(2)) + "; " + fmt(t, 3) + "s"};
}

// ---------------------------------------------------------------------------

int run(const std::string& exe, const std::vector<std::string>& args) {
  std::string cmd = "\"" + exe + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion10(const std::string& exe, const fs::path& scratch) {
  const auto t0 = Clock::now();
  std::vector<fs::path> dirs = {scratch / "run_a", scratch / "run_b"};
  const std::vector<std::string> commands = {"gen-data",  "stats", "train",       "fit-envelope", "optimize",
                                             "montecarlo", "ramp", "extrapolate", "explain"};
  for (const auto& dir : dirs) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const Json cfg = {{"output_dir", dir.string()},
                      {"data", {{"synthetic_rows", 2000}}},
                      {"seeds", {{"data", 7}, {"split", 21}, {"train", 11}, {"solver", 13}, {"mc", 17}, {"shap", 19}}},
                      {"train", {{"max_epochs", 800}}},
                      {"solver", {{"n_starts", 6}}},
                      {"optimize", {{"setpoint", 330.0}, {"mode", "madopt"}, {"tau", 1.5}}},
                      {"ramp", {{"tau", 3.5}}},
                      {"extrapolation", {{"tau_schedule", {{"385", 2.5}, {"390", 2.5}, {"395", 3.0}}}}},
                      {"montecarlo", {{"rounds", 5}, {"n_samples", 500}}},
                      {"explain", {{"permutations", 200}, {"global_permutations", 5}, {"sample_rows", 50}, {"background_rows", 30}}}};
    const auto cfg_path = (dir / "config.json").string();
    write_json(cfg_path, cfg);
    for (const auto& c : commands) {
      const int code = run(exe, {c, "--config", cfg_path});
      if (code != 0) return {false, "`madopt " + c + "` exited with " + std::to_string(code) + " in " + dir.string()};
    }
  }
  // missing upstream artifact -> exit 3
  const auto lonely = scratch / "run_missing";
  fs::remove_all(lonely);
  fs::create_directories(lonely);
  write_json((lonely / "config.json").string(),
             Json{{"output_dir", lonely.string()},
                  {"seeds", {{"data", 1}, {"split", 1}, {"train", 1}, {"solver", 1}, {"mc", 1}, {"shap", 1}}}});
  const int missing_code = run(exe, {"optimize", "--config", (lonely / "config.json").string()});

  int compared = 0;
  std::vector<std::string> differ;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename().string();
    if (name == "manifest.json" || name == "config.json") continue;
    ++compared;
    if (!fs::exists(dirs[1] / name) || slurp(entry.path()) != slurp(dirs[1] / name)) differ.push_back(name);
  }
  const int v1 = run(exe, {"verify", "--run", dirs[0].string()});
  const int v2 = run(exe, {"verify", "--run", dirs[1].string()});
  const auto check = app::verify_run(dirs[0].string());
  const double t = seconds_since(t0);
  const bool ok = differ.empty() && compared >= 20 && v1 == 0 && v2 == 0 && missing_code == 3;
  std::string d = std::to_string(compared) + " report files compared, " + std::to_string(differ.size()) + " differ";
  if (!differ.empty()) d += " (first: " + differ.front() + ")";
  d += "; verify exit " + std::to_string(v1) + "/" + std::to_string(v2) + " over " + std::to_string(check.checked.size()) +
       " checks; missing-artifact exit " + std::to_string(missing_code) + "; " + fmt(t, 3) + "s";
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <madopt-cli> <scratch-dir> [criterion ...]\n";
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);
  std::set<int> only;
  for (int i = 3; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"surrogate fidelity", criterion1},
      {"gradient correctness", criterion2},
      {"Mahalanobis correctness", criterion3},
      {"optimizer soundness", criterion4},
      {"domain-consistency contrast", criterion5},
      {"ramp sweep behavior", criterion6},
      {"extrapolation", criterion7},
      {"Monte Carlo robustness", criterion8},
      {"Shapley correctness", criterion9},
      {"reproducibility", [&] { return criterion10(exe, scratch); }}};

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[k].first << "): " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion/criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
