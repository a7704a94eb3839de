#pragma once

// JSON artifacts and CSV reports. Doubles are written with round-trip
// precision so reloaded artifacts reproduce stored values bit for bit.

#include "madopt/explain.hpp"
#include "madopt/mahalanobis.hpp"
#include "madopt/optimizer.hpp"
#include "madopt/robustness.hpp"
#include "madopt/scenarios.hpp"
#include "madopt/surrogate.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace madopt {

using Json = nlohmann::json;

Json read_json(const std::string& path);
/// Pretty-printed, trailing newline.
void write_json(const std::string& path, const Json& doc);
void write_text(const std::string& path, const std::string& text);
bool file_exists(const std::string& path);

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);
Json mat_to_json(const Mat& m);  // list of rows
Mat mat_from_json(const Json& j);

Json to_json(const ScalerParams& s);
ScalerParams scaler_from_json(const Json& j);

Json to_json(const MlpModel& m);
MlpModel mlp_from_json(const Json& j);

Json to_json(const SurrogateSet& s);
SurrogateSet surrogates_from_json(const Json& j);

Json to_json(const EllipsoidModel& e);
EllipsoidModel ellipsoid_from_json(const Json& j);

Json to_json(const ConformalCalibration& c);
ConformalCalibration conformal_from_json(const Json& j);

Json to_json(const Metrics& m);
Json to_json(const KktResiduals& k);
Json to_json(const OptSolution& s, const std::vector<std::string>& names);
Json to_json(const ConsistencyReport& c);
Json to_json(const ScenarioResult& r, const std::vector<std::string>& names);
Json to_json(const MonteCarloReport& r);
Json to_json(const ShapleyValues& s);
Json to_json(const ImportanceReport& r);
Json to_json(const ExtrapolationReport& r, const std::vector<std::string>& names);

/// One row per setpoint: predictions, d_M, status and the engineering inputs.
void write_sweep_csv(const std::string& path, const SweepCase& c, const std::vector<std::string>& names);
/// One row per round: mean, q2.5, q97.5, width per target.
void write_monte_carlo_csv(const std::string& path, const MonteCarloReport& r);
void write_extrapolation_csv(const std::string& path, const ExtrapolationReport& r,
                             const std::vector<std::string>& names);

}  // namespace madopt
