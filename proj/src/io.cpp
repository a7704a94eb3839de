#include "madopt/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace madopt {

namespace {

constexpr std::array<Target, 3> kTargets = {Target::Power, Target::TE, Target::THR};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << std::setprecision(17);
  return out;
}

template <typename T>
T get(const Json& j, const char* key) {
  require(j.contains(key), ErrorCode::Parse, std::string("artifact is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
  }
}

Json predictions_json(const std::optional<Predictions>& p) {
  if (!p) return nullptr;
  return Json{{"power", p->power}, {"te", p->te}, {"thr", p->thr}};
}

Json named(const Vec& v, const std::vector<std::string>& names) {
  Json out = Json::object();
  if (v.size() != static_cast<Index>(names.size())) return vec_to_json(v);
  for (std::size_t j = 0; j < names.size(); ++j) out[names[j]] = v(static_cast<Index>(j));
  return out;
}

}  // namespace

Json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::MissingArtifact, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  require(out.good(), ErrorCode::Io, "failed writing " + path);
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

Json vec_to_json(const Vec& v) { return to_std(v); }

Vec vec_from_json(const Json& j) {
  require(j.is_array(), ErrorCode::Parse, "expected a numeric array");
  return from_std(j.get<std::vector<double>>());
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
  return rows;
}

Mat mat_from_json(const Json& j) {
  require(j.is_array(), ErrorCode::Parse, "expected a matrix (list of rows)");
  if (j.empty()) return Mat();
  const auto cols = static_cast<Index>(j[0].size());
  Mat m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec row = vec_from_json(j[i]);
    require(row.size() == cols, ErrorCode::Parse, "ragged matrix rows");
    m.row(static_cast<Index>(i)) = row.transpose();
  }
  return m;
}

Json to_json(const ScalerParams& s) {
  return Json{{"id", s.id()}, {"names", s.names()}, {"mins", vec_to_json(s.mins())}, {"maxs", vec_to_json(s.maxs())}};
}

ScalerParams scaler_from_json(const Json& j) {
  return ScalerParams(get<std::vector<std::string>>(j, "names"), vec_from_json(j.at("mins")),
                      vec_from_json(j.at("maxs")), get<std::string>(j, "id"));
}

Json to_json(const MlpModel& m) {
  return Json{{"target", m.target},
              {"activation", to_string(m.activation)},
              {"input_names", m.input_names},
              {"scaler_ref", m.scaler_ref},
              {"W1", mat_to_json(m.W1)},
              {"b1", vec_to_json(m.b1)},
              {"W2", vec_to_json(m.W2)},
              {"b2", m.b2}};
}

MlpModel mlp_from_json(const Json& j) {
  MlpModel m;
  m.target = get<std::string>(j, "target");
  m.activation = activation_from_string(get<std::string>(j, "activation"));
  m.input_names = get<std::vector<std::string>>(j, "input_names");
  m.scaler_ref = get<std::string>(j, "scaler_ref");
  m.W1 = mat_from_json(j.at("W1"));
  m.b1 = vec_from_json(j.at("b1"));
  m.W2 = vec_from_json(j.at("W2"));
  m.b2 = get<double>(j, "b2");
  require(m.W1.rows() == m.b1.size() && m.W1.rows() == m.W2.size() &&
              m.W1.cols() == static_cast<Index>(m.input_names.size()),
          ErrorCode::Parse, "model '" + m.target + "' has inconsistent shapes");
  require(m.all_finite(), ErrorCode::Numeric, "model '" + m.target + "' has non-finite weights");
  return m;
}

Json to_json(const SurrogateSet& s) {
  return Json{{"scaler", to_json(s.scaler)}, {"power", to_json(s.power)}, {"te", to_json(s.te)}, {"thr", to_json(s.thr)}};
}

SurrogateSet surrogates_from_json(const Json& j) {
  SurrogateSet s;
  s.scaler = scaler_from_json(j.at("scaler"));
  s.power = mlp_from_json(j.at("power"));
  s.te = mlp_from_json(j.at("te"));
  s.thr = mlp_from_json(j.at("thr"));
  for (const auto* m : {&s.power, &s.te, &s.thr})
    require(m->scaler_ref == s.scaler.id(), ErrorCode::Parse,
            "model '" + m->target + "' references scaler '" + m->scaler_ref + "', not '" + s.scaler.id() + "'");
  return s;
}

Json to_json(const EllipsoidModel& e) {
  return Json{{"names", e.names()}, {"mu", vec_to_json(e.mu())}, {"sigma", mat_to_json(e.sigma())}, {"ridge", e.ridge()}};
}

EllipsoidModel ellipsoid_from_json(const Json& j) {
  return EllipsoidModel(vec_from_json(j.at("mu")), mat_from_json(j.at("sigma")), get<double>(j, "ridge"),
                        get<std::vector<std::string>>(j, "names"));
}

Json to_json(const ConformalCalibration& c) {
  return Json{{"alpha", c.alpha}, {"quantile", c.quantile}, {"calibrated", c.calibrated}, {"scores", c.scores}};
}

ConformalCalibration conformal_from_json(const Json& j) {
  ConformalCalibration c;
  c.alpha = get<double>(j, "alpha");
  c.quantile = get<double>(j, "quantile");
  c.calibrated = get<bool>(j, "calibrated");
  c.scores = get<std::vector<double>>(j, "scores");
  return c;
}

Json to_json(const Metrics& m) { return Json{{"r2", m.r2}, {"rmse", m.rmse}}; }

Json to_json(const KktResiduals& k) {
  return Json{{"stationarity", k.stationarity},
              {"setpoint_residual", k.setpoint_residual},
              {"ellipsoid_violation", k.ellipsoid_violation},
              {"bound_violation", k.bound_violation},
              {"complementarity", k.complementarity},
              {"bound_signs_consistent", k.bound_signs_consistent}};
}

Json to_json(const OptSolution& s, const std::vector<std::string>& names) {
  Json j{{"status", s.status},
         {"converged", s.converged},
         {"x_scaled", named(s.x_scaled, names)},
         {"objective", s.objective},
         {"predicted", predictions_json(s.predicted)},
         {"setpoint_value", s.setpoint_value},
         {"setpoint_residual_sq", s.setpoint_residual_sq},
         {"d_m", s.d_m ? Json(*s.d_m) : Json(nullptr)},
         {"lambda_setpoint", s.lambda_setpoint},
         {"lambda_ellipsoid", s.lambda_ellipsoid},
         {"band_constraint", s.band_constraint},
         {"lambda_band", s.lambda_band},
         {"kkt", to_json(s.kkt)},
         {"outer_iterations", s.outer_iterations},
         {"inner_iterations", s.inner_iterations},
         {"start_id", s.start_id}};
  if (s.x_eng.size() > 0) j["x_eng"] = named(s.x_eng, names);
  return j;
}

Json to_json(const ConsistencyReport& c) {
  Json pairs = Json::object();
  for (const auto& [k, v] : c.pair_distances) pairs[k] = v;
  return Json{{"flags", c.flags},
              {"out_of_range_variables", c.out_of_range_variables},
              {"inside_ellipsoid", c.inside_ellipsoid},
              {"outputs_in_range", c.outputs_in_range},
              {"d_m", c.d_m},
              {"tau", c.tau},
              {"pair_distances", pairs}};
}

Json to_json(const ScenarioResult& r, const std::vector<std::string>& names) {
  Json j{{"setpoint", r.setpoint}, {"mode", to_string(r.mode)}, {"case", r.case_label}, {"solved", r.solved}};
  if (r.mode == Mode::MadOpt) j["tau"] = r.tau;
  if (!r.solved) {
    j["error"] = r.error;
    return j;
  }
  j["solution"] = to_json(r.solution, names);
  j["consistency"] = to_json(r.consistency);
  return j;
}

Json to_json(const MonteCarloReport& r) {
  Json j{{"n_samples", r.spec.n_samples},
         {"rounds", r.spec.rounds},
         {"noise_fraction", r.spec.noise_fraction},
         {"seed", r.spec.seed},
         {"x_star", vec_to_json(r.x_star)},
         {"perturbed", r.perturbed},
         {"warnings", r.warnings}};
  Json seeds = Json::array();
  for (const auto& round : r.rounds) seeds.push_back(round.seed);
  j["round_seeds"] = seeds;
  Json summary = Json::object();
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& s = r.summary[t];
    summary[to_string(kTargets[t])] = Json{{"deterministic", s.deterministic},
                                           {"mean_of_means", s.mean_of_means},
                                           {"mean_width", s.mean_width},
                                           {"min_width", s.min_width},
                                           {"max_width", s.max_width},
                                           {"width_ratio", s.width_ratio()},
                                           {"rounds_mean_within_half_width", s.rounds_mean_within_half_width},
                                           {"pooled_lower", s.pooled.lower},
                                           {"pooled_upper", s.pooled.upper}};
  }
  j["summary"] = summary;
  return j;
}

Json to_json(const ShapleyValues& s) {
  return Json{{"names", s.names},
              {"attribution", vec_to_json(s.attribution)},
              {"std_error", vec_to_json(s.std_error)},
              {"base", s.base},
              {"value", s.value},
              {"permutations", s.permutations},
              {"exhaustive", s.exhaustive},
              {"seed", s.seed}};
}

Json to_json(const ImportanceReport& r) {
  Json rank = Json::array();
  for (const auto& f : r.ranking) rank.push_back(Json{{"feature", f.feature}, {"mean_abs", f.mean_abs}, {"rank", f.rank}});
  return Json{{"target", r.target}, {"rows", r.rows}, {"permutations", r.permutations}, {"seed", r.seed}, {"ranking", rank}};
}

Json to_json(const ExtrapolationReport& r, const std::vector<std::string>& names) {
  Json ambient = Json::object();
  for (const auto& [k, v] : r.ambient.values) ambient[k] = v;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"setpoint", row.setpoint},
           {"tau", row.tau},
           {"madopt", to_json(row.madopt, names)},
           {"unconstrained", to_json(row.unconstrained, names)},
           {"deviation_madopt", row.deviation_madopt},
           {"deviation_unconstrained", row.deviation_unconstrained},
           {"cdp_gffr_beyond_subspace", row.cdp_gffr_beyond_subspace}};
    if (row.truth)
      j["truth"] = Json{{"x_eng", named(row.truth->x_eng, names)}, {"rows_used", row.truth->rows_used}, {"power", row.truth->power}};
    rows.push_back(j);
  }
  return Json{{"threshold", r.spec.threshold}, {"upper_bound", r.spec.upper_bound}, {"ambient", ambient},
              {"rows", rows}, {"warnings", r.warnings}};
}

void write_sweep_csv(const std::string& path, const SweepCase& c, const std::vector<std::string>& names) {
  auto out = open_out(path);
  out << "setpoint,status,feasible,power,te,thr,d_m";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& r : c.rows) {
    out << r.setpoint << ',';
    if (!r.solved) {
      out << "no_solve,0,,,,";
      for (std::size_t j = 0; j < names.size(); ++j) out << ',';
      out << '\n';
      continue;
    }
    const auto& s = r.solution;
    out << s.status << ',' << (r.feasible() ? 1 : 0) << ',' << s.predicted->power << ',' << s.predicted->te << ','
        << s.predicted->thr << ',' << s.d_m.value_or(0.0);
    for (Index j = 0; j < s.x_eng.size(); ++j) out << ',' << s.x_eng(j);
    out << '\n';
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path);
}

void write_monte_carlo_csv(const std::string& path, const MonteCarloReport& r) {
  auto out = open_out(path);
  out << "round,seed";
  for (auto t : kTargets) {
    const std::string n = to_string(t);
    out << ',' << n << "_mean," << n << "_q025," << n << "_q975," << n << "_width";
  }
  out << '\n';
  for (const auto& round : r.rounds) {
    out << round.round << ',' << round.seed;
    for (const auto& t : round.targets)
      out << ',' << t.mean << ',' << t.interval.lower << ',' << t.interval.upper << ',' << t.interval.width;
    out << '\n';
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path);
}

void write_extrapolation_csv(const std::string& path, const ExtrapolationReport& r,
                             const std::vector<std::string>& names) {
  auto out = open_out(path);
  out << "setpoint,tau,source,status,power,te,thr,d_m";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  auto row_out = [&](double sp, double tau, const char* source, const ScenarioResult& r) {
    out << sp << ',' << tau << ',' << source << ',';
    if (!r.solved) {
      out << "no_solve,,,,";
      for (std::size_t j = 0; j < names.size(); ++j) out << ',';
      out << '\n';
      return;
    }
    const auto& s = r.solution;
    out << s.status << ',' << s.predicted->power << ',' << s.predicted->te << ',' << s.predicted->thr << ','
        << s.d_m.value_or(0.0);
    for (Index j = 0; j < s.x_eng.size(); ++j) out << ',' << s.x_eng(j);
    out << '\n';
  };
  for (const auto& row : r.rows) {
    row_out(row.setpoint, row.tau, "madopt", row.madopt);
    row_out(row.setpoint, row.tau, "unconstrained", row.unconstrained);
    if (row.truth) {
      out << row.setpoint << ',' << row.tau << ",holdout,rows=" << row.truth->rows_used << ',' << row.truth->power
          << ",,,";
      for (Index j = 0; j < row.truth->x_eng.size(); ++j) out << ',' << row.truth->x_eng(j);
      out << '\n';
    }
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path);
}

}  // namespace madopt
