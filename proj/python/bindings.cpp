#include "madopt/explain.hpp"
#include "madopt/io.hpp"
#include "madopt/robustness.hpp"
#include "madopt/scenarios.hpp"
#include "madopt/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace madopt;

namespace {

// JSON artifacts double as Python dicts.
py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Dataset as_dataset(const Mat& rows) { return Dataset(plant_schema(), rows, "python"); }

class Plant {
 public:
  Plant(const Mat& rows, int max_epochs, std::uint64_t split_seed, std::uint64_t train_seed) {
    PipelineConfig cfg;
    cfg.train.max_epochs = max_epochs;
    cfg.split_seed = split_seed;
    cfg.train.seed = train_seed;
    py::gil_scoped_release release;
    plant_ = std::make_shared<TrainedPlant>(train_plant(as_dataset(rows), cfg));
  }

  py::dict metrics() const {
    py::dict out;
    const std::array<Target, 3> t = {Target::Power, Target::TE, Target::THR};
    for (std::size_t k = 0; k < 3; ++k) {
      py::dict m;
      m["r2"] = plant_->test_metrics[k].r2;
      m["rmse"] = plant_->test_metrics[k].rmse;
      m["coverage"] = plant_->coverage[k];
      m["conformal_quantile"] = plant_->conformal[k].quantile;
      out[to_string(t[k])] = m;
    }
    return out;
  }

  std::vector<std::string> input_names() const { return plant_->ctx.models->input_names(); }

  Vec predict(const std::string& target, const Mat& X_eng) const {
    const auto& models = *plant_->ctx.models;
    const Mat X = models.scaler.subset(models.input_names()).scale_rows(X_eng);
    Vec out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) out(i) = models.predict(target_from_string(target), X.row(i).transpose());
    return out;
  }

  double distance(const Vec& x_eng) const {
    return plant_->ctx.ellipsoid->distance(plant_->ctx.models->scale_inputs(x_eng));
  }

  py::object optimize(double setpoint, const std::string& mode, double tau, std::optional<double> ambient_at,
                      int n_starts, std::uint64_t seed) const {
    RunOptions o;
    o.n_starts = n_starts;
    o.seed = seed;
    ScenarioResult r;
    {
      py::gil_scoped_release release;
      r = setpoint_optimize(plant_->ctx, setpoint, mean_ambient(plant_->ctx, ambient_at), mode_from_string(mode), tau, o);
    }
    Json j = to_json(r, input_names());
    j["feasible"] = r.feasible();
    return to_py(j);
  }

  py::object monte_carlo(const Vec& x_eng, int rounds, Index n_samples, double noise_fraction, std::uint64_t seed,
                         bool include_ambient) const {
    const auto names = input_names();
    const auto stats = descriptive_stats(plant_->train);
    Vec stds(static_cast<Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) stds(static_cast<Index>(j)) = find_stats(stats, names[j]).std;
    const auto mask = process_input_mask(plant_->ctx.data.schema(), names, include_ambient);
    MonteCarloReport r;
    {
      py::gil_scoped_release release;
      r = madopt::monte_carlo(*plant_->ctx.models, x_eng, stds, mask, MonteCarloSpec{n_samples, rounds, noise_fraction, seed});
    }
    return to_py(to_json(r));
  }

  py::object importance(const std::string& target, int permutations, Index rows, std::uint64_t seed) const {
    const auto& models = *plant_->ctx.models;
    const auto names = input_names();
    const Mat X = models.scaler.subset(names).scale_rows(plant_->train.columns(names));
    require(X.rows() >= 2 * rows, ErrorCode::InvalidArgument, "training split too small for the requested rows");
    const auto& m = models.model(target_from_string(target));
    ImportanceReport r;
    {
      py::gil_scoped_release release;
      r = global_importance(batch_model(m), X.topRows(rows), X.middleRows(rows, rows), permutations, seed, names, m.target);
    }
    return to_py(to_json(r));
  }

  py::object models_json() const { return to_py(to_json(*plant_->ctx.models)); }

 private:
  std::shared_ptr<TrainedPlant> plant_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Envelope-constrained setpoint optimization over gas-turbine surrogates";

  py::register_exception<Error>(m, "MadoptError");

  m.def(
      "generate",
      [](Index n, std::uint64_t seed) {
        const auto s = synth_plant_default(n, seed);
        return py::make_tuple(s.data.rows(), s.data.names());
      },
      py::arg("n"), py::arg("seed"), "Synthetic plant rows (n x 12) and column names");

  m.def(
      "variable_names", [] { return as_dataset(Mat::Zero(2, 12)).names(); }, "Column order expected by Plant");

  m.def(
      "mahalanobis",
      [](const Mat& X, const Mat& queries, double ridge) {
        const auto e = fit_ellipsoid(X, ridge);
        Vec d(queries.rows());
        for (Index i = 0; i < queries.rows(); ++i) d(i) = e.distance(queries.row(i).transpose());
        return d;
      },
      py::arg("X"), py::arg("queries"), py::arg("ridge") = -1.0,
      "Distances of query rows under the envelope fitted to X");

  m.def(
      "confidence_interval",
      [](const std::vector<double>& samples) {
        const auto q = madopt::confidence_interval(samples);
        return py::make_tuple(q.lower, q.upper, q.width);
      },
      py::arg("samples"), "(q2.5, q97.5, width) with linear interpolation");

  m.def(
      "shapley_linear",
      [](const Vec& coef, const Mat& background, const Vec& x, int m_perm, std::uint64_t seed) {
        const auto s = shapley_sampling([coef](const Mat& X) -> Vec { return X * coef; }, background, x, m_perm, seed);
        return py::make_tuple(s.attribution, s.std_error, s.base);
      },
      py::arg("coef"), py::arg("background"), py::arg("x"), py::arg("permutations"), py::arg("seed"),
      "Permutation Shapley values of a linear model (attribution, std error, base)");

  py::class_<Plant>(m, "Plant")
      .def(py::init<const Mat&, int, std::uint64_t, std::uint64_t>(), py::arg("rows"), py::arg("max_epochs") = 5000,
           py::arg("split_seed") = 21, py::arg("train_seed") = 11)
      .def("metrics", &Plant::metrics)
      .def("input_names", &Plant::input_names)
      .def("predict", &Plant::predict, py::arg("target"), py::arg("X"))
      .def("distance", &Plant::distance, py::arg("x"))
      .def("optimize", &Plant::optimize, py::arg("setpoint"), py::arg("mode") = "madopt", py::arg("tau") = 0.9,
           py::arg("ambient_at") = std::nullopt, py::arg("n_starts") = 16, py::arg("seed") = 13)
      .def("monte_carlo", &Plant::monte_carlo, py::arg("x"), py::arg("rounds") = 50, py::arg("n_samples") = 1000,
           py::arg("noise_fraction") = 0.01, py::arg("seed") = 17, py::arg("include_ambient") = false)
      .def("importance", &Plant::importance, py::arg("target"), py::arg("permutations") = 50, py::arg("rows") = 100,
           py::arg("seed") = 19)
      .def("models_json", &Plant::models_json);
}
