#pragma once

#include "madopt/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace madopt {

// Batch model: one prediction per row.
using BatchModel = std::function<Vec(const Mat&)>;

/// Scaled-input batch evaluation of a surrogate, in scaled target units.
BatchModel batch_model(const MlpModel& model);

struct ShapleyValues {
  std::vector<std::string> names;
  Vec attribution;  // per feature
  Vec std_error;    // of the permutation mean; 0 when all permutations were enumerated
  double base = 0.0;  // mean model output over the background
  double value = 0.0; // f(x)
  int permutations = 0;
  bool exhaustive = false;
  std::uint64_t seed = 0;
};

/// Permutation-sampling Shapley values. Each permutation walks the features in
/// order, switching one column of the whole background from background values
/// to x and recording the change in the background-mean output. When m >= p!
/// every permutation is enumerated once instead.
ShapleyValues shapley_sampling(const BatchModel& f, const Mat& background, const Vec& x, int m,
                               std::uint64_t seed, std::vector<std::string> names = {});

struct FeatureImportance {
  std::string feature;
  double mean_abs = 0.0;
  int rank = 0;  // 1 = most important
};

struct ImportanceReport {
  std::string target;
  std::vector<FeatureImportance> ranking;  // sorted by rank
  int rows = 0;
  int permutations = 0;
  std::uint64_t seed = 0;
};

/// Mean |attribution| over the rows of `sample`; each row gets its own child seed.
ImportanceReport global_importance(const BatchModel& f, const Mat& background, const Mat& sample, int m,
                                   std::uint64_t seed, const std::vector<std::string>& names,
                                   std::string target = "");

void write_importance_csv(const std::string& path, const std::vector<ImportanceReport>& reports);

}  // namespace madopt
