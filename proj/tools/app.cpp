#include "app.hpp"

#include "madopt/explain.hpp"
#include "madopt/synth.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace madopt::app {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr std::array<Target, 3> kTargets = {Target::Power, Target::TE, Target::THR};

template <typename T>
void opt(const Json& j, const char* key, T& out) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("config field '") + key + "': " + e.what());
  }
}

const Json& section(const Json& doc, const char* key) {
  static const Json empty = Json::object();
  if (!doc.contains(key)) return empty;
  require(doc.at(key).is_object(), ErrorCode::Parse, std::string("config section '") + key + "' must be an object");
  return doc.at(key);
}

std::string path_in(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.output_dir) / name).string(); }

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void need(const std::string& path, const std::string& producer) {
  require(fs::exists(path), ErrorCode::MissingArtifact,
          fs::path(path).filename().string() + " not found in the run directory; run `madopt " + producer + "` first");
}

Json seeds_json(const Seeds& s) {
  return Json{{"data", s.data}, {"split", s.split}, {"train", s.train}, {"solver", s.solver}, {"mc", s.mc}, {"shap", s.shap}};
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// manifest.json collects one entry per command; the only wall-clock field.
void record(const RunConfig& cfg, const std::string& cmd, const std::vector<std::string>& files,
            const std::vector<std::string>& warnings = {}) {
  const std::string path = path_in(cfg, "manifest.json");
  Json manifest = fs::exists(path) ? read_json(path) : Json::object();
  Json artifacts = Json::object();
  for (const auto& f : files) artifacts[f] = sha256_file(path_in(cfg, f));
  manifest["tool"] = "madopt";
  manifest["versions"] = Json{{"madopt", kVersion},
                              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                            "." + std::to_string(EIGEN_MINOR_VERSION)},
                              {"compiler", __VERSION__}};
  manifest["config"] = cfg.raw;
  manifest["seeds"] = seeds_json(cfg.seeds);
  manifest["commands"][cmd] = Json{{"artifacts", artifacts}, {"warnings", warnings}, {"timestamp", utc_now()}};
  write_json(path, manifest);
}

Schema run_schema(const RunConfig& cfg) { return cfg.schema_json ? load_schema_json(*cfg.schema_json) : plant_schema(); }

Dataset load_data(const RunConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  std::string path;
  if (cfg.data_csv) {
    path = *cfg.data_csv;
    require(fs::exists(path), ErrorCode::MissingArtifact, "data file " + path + " not found");
  } else {
    path = path_in(cfg, "data.csv");
    need(path, "gen-data");
  }
  auto loaded = load_csv(path, run_schema(cfg));
  if (warnings) *warnings = loaded.warnings;
  return std::move(loaded.data);
}

std::shared_ptr<const SurrogateSet> load_models(const RunConfig& cfg) {
  const auto path = path_in(cfg, "models.json");
  need(path, "train");
  return std::make_shared<SurrogateSet>(surrogates_from_json(read_json(path)));
}

std::shared_ptr<const EllipsoidModel> load_envelope(const RunConfig& cfg) {
  const auto path = path_in(cfg, "envelope.json");
  need(path, "fit-envelope");
  return std::make_shared<EllipsoidModel>(ellipsoid_from_json(read_json(path)));
}

PlantContext load_context(const RunConfig& cfg) { return make_context(load_data(cfg), load_models(cfg), load_envelope(cfg)); }

RunOptions solver_options(const RunConfig& cfg) {
  RunOptions o = cfg.run;
  o.seed = cfg.seeds.solver;
  o.solver.seed = cfg.seeds.solver;
  return o;
}

PipelineConfig pipeline(const RunConfig& cfg) {
  PipelineConfig p = cfg.pipeline;
  p.split_seed = cfg.seeds.split;
  p.train.seed = cfg.seeds.train;
  return p;
}

std::string solution_name(const OptimizeConfig& o) {
  return std::string("solution_") + (o.mode == Mode::MadOpt ? "madopt" : "unconstrained") + "_" + fmt(o.setpoint) + ".json";
}

Vec named_vec(const Json& j, const std::vector<std::string>& names) {
  Vec v(static_cast<Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    require(j.contains(names[k]), ErrorCode::Parse, "stored point lacks variable " + names[k]);
    v(static_cast<Index>(k)) = j.at(names[k]).get<double>();
  }
  return v;
}

Json train_report(const TrainedPlant& plant, const PipelineConfig& p) {
  Json targets = Json::object();
  for (std::size_t k = 0; k < 3; ++k)
    targets[to_string(kTargets[k])] = Json{{"test", to_json(plant.test_metrics[k])},
                                           {"coverage", plant.coverage[k]},
                                           {"conformal_quantile", plant.conformal[k].quantile},
                                           {"epochs", plant.epochs[k]}};
  return Json{{"train_ratio", p.train_ratio},
              {"calibration_share", p.calibration_share},
              {"split_seed", p.split_seed},
              {"alpha", p.alpha},
              {"rows", Json{{"train", plant.train.n_rows()}, {"calibration", plant.calib.n_rows()}, {"test", plant.test.n_rows()}}},
              {"targets", targets}};
}

void write_models(const std::string& path, const SurrogateSet& models) { write_json(path, to_json(models)); }

SurrogateSet with_scaler_ref(const SurrogateSet& s) {
  SurrogateSet out = s;
  for (auto* m : {&out.power, &out.te, &out.thr}) m->scaler_ref = out.scaler.id();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(const Json& doc, std::string config_path) {
  require(doc.is_object(), ErrorCode::Parse, "config must be a JSON object");
  RunConfig c;
  c.config_path = std::move(config_path);
  c.raw = doc;
  opt(doc, "output_dir", c.output_dir);
  require(!c.output_dir.empty(), ErrorCode::InvalidArgument, "config needs output_dir");

  const Json& data = section(doc, "data");
  std::string csv, schema;
  opt(data, "csv", csv);
  opt(data, "schema", schema);
  if (!csv.empty()) c.data_csv = csv;
  if (!schema.empty()) c.schema_json = schema;
  opt(data, "synthetic_rows", c.synthetic_rows);
  require(c.synthetic_rows >= 20, ErrorCode::InvalidArgument, "synthetic_rows must be >= 20");

  require(doc.contains("seeds") && doc.at("seeds").is_object(), ErrorCode::InvalidArgument,
          "config needs a seeds object (data, split, train, solver, mc, shap)");
  const Json& seeds = doc.at("seeds");
  for (const char* k : {"data", "split", "train", "solver", "mc", "shap"})
    require(seeds.contains(k), ErrorCode::InvalidArgument, std::string("config seeds lack '") + k + "'");
  opt(seeds, "data", c.seeds.data);
  opt(seeds, "split", c.seeds.split);
  opt(seeds, "train", c.seeds.train);
  opt(seeds, "solver", c.seeds.solver);
  opt(seeds, "mc", c.seeds.mc);
  opt(seeds, "shap", c.seeds.shap);

  const Json& tr = section(doc, "train");
  auto& p = c.pipeline;
  opt(tr, "train_ratio", p.train_ratio);
  opt(tr, "calibration_share", p.calibration_share);
  opt(tr, "alpha", p.alpha);
  opt(tr, "max_epochs", p.train.max_epochs);
  opt(tr, "batch_size", p.train.batch_size);
  opt(tr, "learning_rate", p.train.learning_rate);
  opt(tr, "l1", p.train.l1);
  opt(tr, "weight_decay", p.train.weight_decay);
  opt(tr, "patience", p.train.patience);
  opt(tr, "validation_fraction", p.train.validation_fraction);
  opt(tr, "hidden", p.hidden);
  require(p.train_ratio > 0.0 && p.train_ratio < 1.0, ErrorCode::InvalidArgument, "train_ratio must be in (0, 1)");
  require(p.calibration_share > 0.0 && p.calibration_share < 1.0, ErrorCode::InvalidArgument,
          "calibration_share must be in (0, 1)");
  require(p.train.max_epochs >= 1 && p.train.learning_rate > 0.0, ErrorCode::InvalidArgument,
          "max_epochs must be >= 1 and learning_rate > 0");
  opt(section(doc, "envelope"), "ridge", p.ridge);

  const Json& so = section(doc, "solver");
  opt(so, "n_starts", c.run.n_starts);
  opt(so, "max_outer", c.run.solver.max_outer);
  opt(so, "max_inner", c.run.solver.max_inner);
  opt(so, "penalty_growth", c.run.solver.penalty_growth);
  opt(so, "initial_penalty", c.run.solver.initial_penalty);
  opt(so, "stationarity_tol", c.run.solver.stationarity_tol);
  opt(so, "feasibility_tol", c.run.solver.feasibility_tol);
  opt(so, "lbfgs_memory", c.run.solver.lbfgs_memory);
  require(c.run.n_starts >= 1, ErrorCode::InvalidArgument, "n_starts must be >= 1");
  c.run.solver.validate();

  const Json& op = section(doc, "optimize");
  opt(op, "setpoint", c.optimize.setpoint);
  std::string mode;
  opt(op, "mode", mode);
  if (!mode.empty()) c.optimize.mode = mode_from_string(mode);
  opt(op, "tau", c.optimize.tau);
  double at = std::nan("");
  opt(op, "ambient_at", at);
  if (std::isfinite(at)) c.optimize.ambient_at = at;
  (void)Tolerance(c.optimize.tau);

  const Json& ramp = section(doc, "ramp");
  opt(ramp, "start", c.ramp.start);
  opt(ramp, "end", c.ramp.end);
  opt(ramp, "step", c.ramp.step);
  opt(ramp, "ambient_temperatures", c.ramp.ambient_temperatures);
  opt(ramp, "tau", c.ramp.tau);
  c.ramp.validate();

  const Json& ex = section(doc, "extrapolation");
  opt(ex, "threshold", c.extrapolation.threshold);
  opt(ex, "setpoints", c.extrapolation.setpoints);
  opt(ex, "upper_bound", c.extrapolation.upper_bound);
  opt(ex, "ambient_perturbation", c.extrapolation.ambient_perturbation);
  opt(ex, "match_window", c.extrapolation.match_window);
  if (ex.contains("tau_schedule")) {
    std::map<std::string, double> sched;
    opt(ex, "tau_schedule", sched);
    c.extrapolation.tau_schedule.clear();
    for (const auto& [k, v] : sched) {
      double sp = 0.0;
      try {
        sp = std::stod(k);
      } catch (const std::exception&) {
        fail(ErrorCode::Parse, "tau_schedule key '" + k + "' is not a setpoint");
      }
      c.extrapolation.tau_schedule[sp] = v;
    }
  }
  c.extrapolation.seed = c.seeds.solver;
  c.extrapolation.validate();

  const Json& mc = section(doc, "montecarlo");
  opt(mc, "n_samples", c.montecarlo.n_samples);
  opt(mc, "rounds", c.montecarlo.rounds);
  opt(mc, "noise_fraction", c.montecarlo.noise_fraction);
  opt(mc, "include_ambient", c.montecarlo.include_ambient);
  MonteCarloSpec{c.montecarlo.n_samples, c.montecarlo.rounds, c.montecarlo.noise_fraction, c.seeds.mc}.validate();

  const Json& xp = section(doc, "explain");
  opt(xp, "permutations", c.explain.permutations);
  opt(xp, "global_permutations", c.explain.global_permutations);
  opt(xp, "background_rows", c.explain.background_rows);
  opt(xp, "sample_rows", c.explain.sample_rows);
  require(c.explain.permutations >= 1 && c.explain.global_permutations >= 1 && c.explain.background_rows >= 1 &&
              c.explain.sample_rows >= 50,
          ErrorCode::InvalidArgument, "explain needs permutations >= 1, background_rows >= 1, sample_rows >= 50");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::InvalidArgument, "cannot open config " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "config " + path + ": " + e.what());
  }
  return parse_config(doc, path);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::MissingArtifact, "cannot hash " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, ErrorCode::Io, "OpenSSL context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

// ---------------------------------------------------------------------------

void cmd_gen_data(const RunConfig& cfg) {
  require(!cfg.data_csv, ErrorCode::InvalidArgument, "gen-data writes synthetic data; remove data.csv from the config");
  const auto synth = synth_plant_default(cfg.synthetic_rows, cfg.seeds.data);
  write_csv(path_in(cfg, "data.csv"), synth.data);
  save_schema_json(path_in(cfg, "schema.json"), plant_schema());
  std::vector<std::string> warnings;
  if (synth.clip_fraction > 0.0) warnings.push_back("clipped rows fraction " + fmt(synth.clip_fraction));
  record(cfg, "gen-data", {"data.csv", "schema.json"}, warnings);
}

void cmd_stats(const RunConfig& cfg) {
  std::vector<std::string> warnings;
  const Dataset data = load_data(cfg, &warnings);
  write_stats_csv(path_in(cfg, "stats.csv"), descriptive_stats(data));
  write_correlation_csv(path_in(cfg, "correlation.csv"), pearson_matrix(data));
  record(cfg, "stats", {"stats.csv", "correlation.csv"}, warnings);
}

void cmd_train(const RunConfig& cfg) {
  std::vector<std::string> warnings;
  const Dataset data = load_data(cfg, &warnings);
  const auto p = pipeline(cfg);
  const TrainedPlant plant = train_plant(data, p);
  write_models(path_in(cfg, "models.json"), with_scaler_ref(*plant.ctx.models));
  Json conformal = Json::object();
  for (std::size_t k = 0; k < 3; ++k) conformal[to_string(kTargets[k])] = to_json(plant.conformal[k]);
  write_json(path_in(cfg, "conformal.json"), conformal);
  write_json(path_in(cfg, "metrics.json"), train_report(plant, p));
  record(cfg, "train", {"models.json", "conformal.json", "metrics.json"}, warnings);
}

void cmd_fit_envelope(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const auto models = load_models(cfg);
  const auto names = models->input_names();
  const Mat X = models->scaler.subset(names).scale_rows(data.columns(names));
  const EllipsoidModel e = fit_ellipsoid(X, cfg.pipeline.ridge, names);
  write_json(path_in(cfg, "envelope.json"), to_json(e));
  std::vector<std::string> files = {"envelope.json"};
  for (const auto& [a, b] : default_check_pairs()) {
    const std::string f = "envelope_" + a + "_" + b + ".csv";
    write_polyline_csv(path_in(cfg, f), e.ellipse_2d(a, b, Tolerance(cfg.optimize.tau)), a, b);
    files.push_back(f);
  }
  record(cfg, "fit-envelope", files);
}

void cmd_optimize(const RunConfig& cfg) {
  const PlantContext ctx = load_context(cfg);
  const auto names = ctx.models->input_names();
  const auto& o = cfg.optimize;
  const AmbientCase ambient = mean_ambient(ctx, o.ambient_at);
  const ScenarioResult r = setpoint_optimize(ctx, o.setpoint, ambient, o.mode, o.tau, solver_options(cfg));
  require(r.solved, ErrorCode::Solver, "optimization at " + fmt(o.setpoint) + " MW did not run: " + r.error);

  Json doc = to_json(r, names);
  doc["tau"] = o.tau;
  Json amb = Json::object();
  for (const auto& [k, v] : ambient.values) amb[k] = v;
  doc["ambient"] = amb;
  const std::string sol = solution_name(o);
  write_json(path_in(cfg, sol), doc);
  write_json(path_in(cfg, "solution.json"), doc);

  std::ostringstream jsonl;
  for (const auto& s : r.all_starts) jsonl << to_json(s, names).dump() << '\n';
  write_text(path_in(cfg, "starts.jsonl"), jsonl.str());

  std::vector<std::string> files = {sol, "solution.json", "starts.jsonl"};
  for (const auto& [a, b] : default_check_pairs()) {
    const std::string f = "ellipse_" + a + "_" + b + ".csv";
    write_polyline_csv(path_in(cfg, f), ctx.ellipsoid->ellipse_2d(a, b, Tolerance(o.tau)), a, b);
    files.push_back(f);
  }
  std::vector<std::string> warnings = r.consistency.flags;
  if (!r.solution.converged) warnings.push_back("solver status " + r.solution.status);
  record(cfg, "optimize", files, warnings);
  if (!r.solution.converged)
    fail(ErrorCode::Solver, "no start converged at " + fmt(o.setpoint) + " MW (status " + r.solution.status + ")");
}

void cmd_ramp(const RunConfig& cfg) {
  const PlantContext ctx = load_context(cfg);
  const auto names = ctx.models->input_names();
  const SweepReport rep = ramp_sweep(ctx, cfg.ramp, solver_options(cfg));
  std::vector<std::string> files;
  Json cases = Json::array();
  for (const auto& c : rep.cases) {
    std::string label = c.ambient.label;
    for (char& ch : label)
      if (ch == '=' || ch == '.') ch = '_';
    const std::string f = "ramp_" + label + ".csv";
    write_sweep_csv(path_in(cfg, f), c, names);
    files.push_back(f);
    int feasible = 0;
    for (const auto& r : c.rows) feasible += r.feasible() ? 1 : 0;
    cases.push_back(Json{{"case", c.ambient.label},
                         {"rows", c.rows.size()},
                         {"feasible", feasible},
                         {"te_violations", c.trend.te_violations},
                         {"thr_violations", c.trend.thr_violations},
                         {"gffr_at_lower_bound", c.gffr_at_lower}});
  }
  write_json(path_in(cfg, "ramp.json"),
             Json{{"tau", cfg.ramp.tau}, {"solves_completed", rep.solves_completed()}, {"cases", cases}});
  files.push_back("ramp.json");
  record(cfg, "ramp", files);
}

void cmd_extrapolate(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const auto sub = subspace_filter(data, cfg.extrapolation.threshold);
  require(sub.subspace && sub.holdout, ErrorCode::InvalidArgument,
          "extrapolation threshold leaves an empty side: " +
              (sub.warnings.empty() ? std::string("?") : sub.warnings.front()));
  auto p = pipeline(cfg);
  p.scaler_id = "subspace";
  const TrainedPlant plant = train_plant(*sub.subspace, p);
  const auto names = plant.ctx.models->input_names();
  write_models(path_in(cfg, "extrapolation_models.json"), with_scaler_ref(*plant.ctx.models));
  write_json(path_in(cfg, "extrapolation_envelope.json"), to_json(*plant.ctx.ellipsoid));
  const ExtrapolationReport rep = extrapolate(plant.ctx, *sub.holdout, cfg.extrapolation, solver_options(cfg));
  Json doc = to_json(rep, names);
  doc["subspace_rows"] = sub.subspace->n_rows();
  doc["holdout_rows"] = sub.holdout->n_rows();
  write_json(path_in(cfg, "extrapolation.json"), doc);
  write_extrapolation_csv(path_in(cfg, "extrapolation.csv"), rep, names);
  record(cfg, "extrapolate",
         {"extrapolation_models.json", "extrapolation_envelope.json", "extrapolation.json", "extrapolation.csv"},
         rep.warnings);
}

void cmd_montecarlo(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const auto models = load_models(cfg);
  const auto names = models->input_names();
  const auto sol_path = path_in(cfg, "solution.json");
  need(sol_path, "optimize");
  const Json sol = read_json(sol_path);
  require(sol.contains("solution") && sol["solution"].contains("x_eng"), ErrorCode::MissingArtifact,
          "solution.json has no solved point; run `madopt optimize` first");
  const Vec x_star = named_vec(sol["solution"]["x_eng"], names);

  // Perturbation scales come from the training split.
  const Dataset train = split(data, cfg.pipeline.train_ratio, cfg.seeds.split).first;
  const auto stats = descriptive_stats(train);
  Vec stds(static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) stds(static_cast<Index>(j)) = find_stats(stats, names[j]).std;
  const auto mask = process_input_mask(data.schema(), names, cfg.montecarlo.include_ambient);
  const MonteCarloSpec spec{cfg.montecarlo.n_samples, cfg.montecarlo.rounds, cfg.montecarlo.noise_fraction, cfg.seeds.mc};
  const MonteCarloReport rep = monte_carlo(*models, x_star, stds, mask, spec);
  write_monte_carlo_csv(path_in(cfg, "montecarlo.csv"), rep);
  Json doc = to_json(rep);
  doc["ambient_perturbed"] = cfg.montecarlo.include_ambient;
  write_json(path_in(cfg, "montecarlo.json"), doc);
  record(cfg, "montecarlo", {"montecarlo.csv", "montecarlo.json"}, rep.warnings);
}

void cmd_explain(const RunConfig& cfg) {
  const Dataset data = load_data(cfg);
  const auto models = load_models(cfg);
  const auto names = models->input_names();
  const Dataset train = split(data, cfg.pipeline.train_ratio, cfg.seeds.split).first;
  const Mat X = models->scaler.subset(names).scale_rows(train.columns(names));
  require(X.rows() >= cfg.explain.sample_rows, ErrorCode::InvalidArgument, "training split smaller than sample_rows");

  // Background and explanation sample: disjoint seeded draws from the training split.
  std::vector<Index> idx(static_cast<std::size_t>(X.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(cfg.seeds.shap);
  std::shuffle(idx.begin(), idx.end(), rng);
  const Index nb = std::min(cfg.explain.background_rows, X.rows() - cfg.explain.sample_rows);
  require(nb >= 1, ErrorCode::InvalidArgument, "not enough rows for a Shapley background");
  Mat background(nb, X.cols()), sample(cfg.explain.sample_rows, X.cols());
  for (Index i = 0; i < nb; ++i) background.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < sample.rows(); ++i) sample.row(i) = X.row(idx[static_cast<std::size_t>(nb + i)]);

  std::vector<ImportanceReport> reports;
  Json doc = Json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& m = models->model(kTargets[k]);
    auto rep = global_importance(batch_model(m), background, sample, cfg.explain.global_permutations,
                                 child_seed(cfg.seeds.shap, k), names, m.target);
    Json entry = to_json(rep);
    const std::string sol_path = path_in(cfg, "solution.json");
    if (fs::exists(sol_path)) {
      const Json sol = read_json(sol_path);
      if (sol.contains("solution"))
        entry["at_solution"] = to_json(shapley_sampling(batch_model(m), background,
                                                        named_vec(sol["solution"]["x_scaled"], names),
                                                        cfg.explain.permutations, child_seed(cfg.seeds.shap, 10 + k), names));
    }
    doc[m.target] = entry;
    reports.push_back(std::move(rep));
  }
  write_importance_csv(path_in(cfg, "importance.csv"), reports);
  write_json(path_in(cfg, "importance.json"), doc);
  record(cfg, "explain", {"importance.csv", "importance.json"});
}

// ---------------------------------------------------------------------------

VerifyResult verify_run(const std::string& run_dir, double tol) {
  VerifyResult out;
  const auto in_dir = [&](const std::string& f) { return (fs::path(run_dir) / f).string(); };
  const auto manifest_path = in_dir("manifest.json");
  require(fs::exists(manifest_path), ErrorCode::MissingArtifact, "no manifest.json in " + run_dir);
  const Json manifest = read_json(manifest_path);
  RunConfig cfg = parse_config(manifest.at("config"));
  cfg.output_dir = run_dir;

  auto close = [&](const std::string& what, double stored, double recomputed) {
    out.checked.push_back(what);
    if (!(std::abs(stored - recomputed) <= tol * std::max(1.0, std::abs(stored))))
      out.mismatches.push_back(what + ": stored " + fmt(stored) + ", recomputed " + fmt(recomputed));
  };

  // Artifact hashes: the latest command writing a file owns its hash.
  std::map<std::string, std::string> latest;
  std::map<std::string, std::string> when;
  for (const auto& [cmd, entry] : manifest.at("commands").items())
    for (const auto& [file, hash] : entry.at("artifacts").items()) {
      const std::string ts = entry.at("timestamp").get<std::string>();
      if (!when.count(file) || ts >= when[file]) {
        when[file] = ts;
        latest[file] = hash.get<std::string>();
      }
    }
  for (const auto& [file, hash] : latest) {
    out.checked.push_back("hash " + file);
    if (!fs::exists(in_dir(file)))
      out.mismatches.push_back("artifact " + file + " is missing");
    else if (sha256_file(in_dir(file)) != hash)
      out.mismatches.push_back("artifact " + file + " hash differs from manifest");
  }

  if (!fs::exists(in_dir("models.json"))) return out;
  const auto models = std::make_shared<SurrogateSet>(surrogates_from_json(read_json(in_dir("models.json"))));
  const auto names = models->input_names();

  if (fs::exists(in_dir("metrics.json"))) {
    const Json metrics = read_json(in_dir("metrics.json"));
    const Dataset data = load_data(cfg);
    auto part = split(data, metrics.at("train_ratio").get<double>(), metrics.at("split_seed").get<std::uint64_t>());
    auto rest = split(part.second, metrics.at("calibration_share").get<double>(),
                      metrics.at("split_seed").get<std::uint64_t>() + 1);
    for (auto t : kTargets) {
      const std::string n = to_string(t);
      const Metrics m = evaluate(models->model(t), rest.second, models->scaler);
      close("r2 " + n, metrics["targets"][n]["test"]["r2"].get<double>(), m.r2);
      close("rmse " + n, metrics["targets"][n]["test"]["rmse"].get<double>(), m.rmse);
    }
  }

  std::shared_ptr<const EllipsoidModel> envelope;
  if (fs::exists(in_dir("envelope.json")))
    envelope = std::make_shared<EllipsoidModel>(ellipsoid_from_json(read_json(in_dir("envelope.json"))));
  const double power_range = models->scaler.maxs()(models->scaler.index_of(kPower)) -
                             models->scaler.mins()(models->scaler.index_of(kPower));
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string f = entry.path().filename().string();
    if (f.rfind("solution_", 0) != 0 || entry.path().extension() != ".json") continue;
    const Json doc = read_json(entry.path().string());
    if (!doc.value("solved", false)) continue;
    const Json& s = doc.at("solution");
    const Vec x = named_vec(s.at("x_scaled"), names);
    const double setpoint = doc.at("setpoint").get<double>();
    const double c = (models->predict(Target::Power, x) - models->scaler.mins()(models->scaler.index_of(kPower))) /
                     power_range;
    const double target = models->scaler.scale(kPower, setpoint);
    close(f + " setpoint_residual_sq", s.at("setpoint_residual_sq").get<double>(), (c - target) * (c - target));
    close(f + " predicted power", s.at("predicted").at("power").get<double>(), models->predict(Target::Power, x));
    if (envelope && s.contains("d_m") && !s.at("d_m").is_null())
      close(f + " d_m", s.at("d_m").get<double>(), envelope->distance(x));
  }
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Schema:
    case ErrorCode::Parse:
    case ErrorCode::Io: return 2;
    case ErrorCode::MissingArtifact: return 3;
    case ErrorCode::Numeric:
    case ErrorCode::Solver: return 4;
  }
  return 4;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App cli{"madopt: envelope-constrained setpoint optimization for gas-turbine surrogates"};
  cli.require_subcommand(1);
  std::string config_path, run_dir, mode;
  std::optional<double> setpoint, tau;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "write a seeded synthetic plant dataset"},
      {"stats", "descriptive statistics and Pearson correlations"},
      {"train", "train the Power/TE/THR surrogates with conformal calibration"},
      {"fit-envelope", "fit the Mahalanobis operating envelope"},
      {"optimize", "optimize inputs at one power setpoint"},
      {"ramp", "ramp sweep over setpoints and ambient cases"},
      {"extrapolate", "train below a power threshold and optimize above it"},
      {"montecarlo", "Monte Carlo robustness of the stored solution"},
      {"explain", "Shapley feature importance for each surrogate"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = cli.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    subs[name] = sub;
  }
  subs["optimize"]->add_option("--setpoint", setpoint, "power setpoint [MW]");
  subs["optimize"]->add_option("--mode", mode, "madopt | unconstrained");
  subs["optimize"]->add_option("--tau", tau, "ellipsoid tolerance");
  auto* verify = cli.add_subcommand("verify", "re-check stored artifacts");
  verify->add_option("--run", run_dir, "run directory")->required();

  auto emit_error = [&](int code, const std::string& kind, const std::string& message, const std::string& dir) {
    const Json err{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << err.dump() << '\n';
    if (!dir.empty() && fs::is_directory(dir)) {
      try {
        write_json((fs::path(dir) / "error.json").string(), err);
      } catch (...) {
      }
    }
    return code;
  };

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.exit(e);
    return emit_error(2, "usage", e.what(), "");
  }

  std::string dir;
  try {
    if (verify->parsed()) {
      dir = run_dir;
      const auto result = verify_run(run_dir);
      Json doc{{"checked", result.checked.size()}, {"mismatches", result.mismatches}, {"ok", result.ok()}};
      std::cout << doc.dump(2) << '\n';
      return result.ok() ? 0 : emit_error(4, "verify", "stored artifacts do not match recomputation", "");
    }
    RunConfig cfg = load_config(config_path);
    if (setpoint) cfg.optimize.setpoint = *setpoint;
    if (!mode.empty()) cfg.optimize.mode = mode_from_string(mode);
    if (tau) cfg.optimize.tau = Tolerance(*tau).value();
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    require(fs::is_directory(cfg.output_dir), ErrorCode::InvalidArgument,
            "output_dir " + cfg.output_dir + " cannot be created");
    dir = cfg.output_dir;
    fs::remove(path_in(cfg, "error.json"), ec);

    const std::map<std::string, void (*)(const RunConfig&)> dispatch = {
        {"gen-data", cmd_gen_data}, {"stats", cmd_stats},         {"train", cmd_train},
        {"fit-envelope", cmd_fit_envelope}, {"optimize", cmd_optimize}, {"ramp", cmd_ramp},
        {"extrapolate", cmd_extrapolate},   {"montecarlo", cmd_montecarlo}, {"explain", cmd_explain}};
    for (const auto& [name, fn] : dispatch)
      if (subs[name]->parsed()) {
        fn(cfg);
        std::cout << name << ": ok (" << cfg.output_dir << ")\n";
      }
    return 0;
  } catch (const Error& e) {
    return emit_error(exit_code_for(e.code()), to_string(e.code()), e.what(), dir);
  } catch (const std::exception& e) {
    return emit_error(4, "internal", e.what(), dir);
  }
}

}  // namespace madopt::app
