#pragma once

#include "madopt/common.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace madopt {

enum class Role { ProcessInput, AmbientInput, PerformanceOutput };

const char* to_string(Role role);
Role role_from_string(std::string_view s);

struct VariableSpec {
  std::string name;
  std::string unit;
  Role role = Role::ProcessInput;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;

  bool is_input() const { return role != Role::PerformanceOutput; }
};

using Schema = std::vector<VariableSpec>;

/// Checks min <= mean <= max, std >= 0 and unique names. Throws Schema errors.
void validate_schema(const Schema& schema);

/// The twelve plant variables with their descriptive statistics: nine inputs
/// (CDP, GFFR, FGT, AT, AP, AH, PHGOT, CDT, FGEXT) followed by Power, TE, THR.
Schema plant_schema();

inline constexpr std::string_view kPower = "Power";
inline constexpr std::string_view kTE = "TE";
inline constexpr std::string_view kTHR = "THR";

/// Immutable table of plant observations. Columns follow schema order.
class Dataset {
 public:
  Dataset(Schema schema, Mat rows, std::string provenance);

  const Schema& schema() const { return schema_; }
  const Mat& rows() const { return rows_; }
  const std::string& provenance() const { return provenance_; }
  Index n_rows() const { return rows_.rows(); }
  Index n_cols() const { return rows_.cols(); }

  Index column_index(std::string_view name) const;
  bool has_column(std::string_view name) const;
  Vec column(std::string_view name) const;
  std::vector<std::string> names() const;

  std::vector<std::string> input_names() const;
  std::vector<std::string> output_names() const;
  /// Columns for the given names, in the given order.
  Mat columns(const std::vector<std::string>& names) const;
  Mat inputs() const { return columns(input_names()); }

  Dataset select_rows(const std::vector<Index>& idx, std::string provenance) const;

 private:
  Schema schema_;
  Mat rows_;
  std::string provenance_;
};

struct LoadOptions {
  // Allowed band per column is [min - margin*range, max + margin*range] of the
  // declared schema range. Negative disables the sanity check.
  double sanity_margin = 0.5;
};

struct LoadedDataset {
  Dataset data;
  std::vector<std::string> warnings;
};

LoadedDataset load_csv(const std::string& path, const Schema& schema,
                       const LoadOptions& options = {});
void write_csv(const std::string& path, const Dataset& data);

/// Schema sidecar: JSON list of {name, unit, role, min, max[, mean, std]}.
Schema load_schema_json(const std::string& path);
void save_schema_json(const std::string& path, const Schema& schema);

// ---------------------------------------------------------------------------
// Min-max scaling to [0, 1]

class ScalerParams {
 public:
  ScalerParams() = default;
  ScalerParams(std::vector<std::string> names, Vec mins, Vec maxs, std::string id);

  const std::vector<std::string>& names() const { return names_; }
  const Vec& mins() const { return mins_; }
  const Vec& maxs() const { return maxs_; }
  const std::string& id() const { return id_; }
  Index size() const { return static_cast<Index>(names_.size()); }

  Index index_of(std::string_view name) const;
  /// Parameters restricted to `names` (in that order).
  ScalerParams subset(const std::vector<std::string>& names) const;

  double scale(std::string_view name, double value) const;
  double unscale(std::string_view name, double value) const;
  /// Row in this scaler's column order.
  Vec scale(const Vec& x) const;
  Vec unscale(const Vec& x) const;
  Mat scale_rows(const Mat& X) const;
  Mat unscale_rows(const Mat& X) const;

  bool operator==(const ScalerParams& other) const;

 private:
  std::vector<std::string> names_;
  Vec mins_;
  Vec maxs_;
  std::string id_;
};

ScalerParams fit_scaler(const Dataset& data, const std::vector<std::string>& columns,
                        std::string id = "scaler");

// ---------------------------------------------------------------------------
// Summaries

struct ColumnStats {
  std::string name;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // sample standard deviation (N - 1)
};

std::vector<ColumnStats> descriptive_stats(const Dataset& data);
const ColumnStats& find_stats(const std::vector<ColumnStats>& stats, std::string_view name);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Mat values;

  Index index_of(std::string_view name) const;
  double at(std::string_view a, std::string_view b) const;
};

double pearson(const Vec& x, const Vec& y);
CorrelationMatrix pearson_matrix(const Dataset& data);
CorrelationMatrix pearson_matrix(const Dataset& data, const std::vector<std::string>& names);

void write_stats_csv(const std::string& path, const std::vector<ColumnStats>& stats);
void write_correlation_csv(const std::string& path, const CorrelationMatrix& corr);

// ---------------------------------------------------------------------------
// Partitioning

struct Partition {
  Dataset first;
  Dataset second;
  std::vector<Index> first_rows;
  std::vector<Index> second_rows;
};

/// Seeded shuffle; |first| = round(ratio * N).
Partition split(const Dataset& data, double ratio, std::uint64_t seed);

struct SubspaceSplit {
  std::optional<Dataset> subspace;  // Power <= threshold
  std::optional<Dataset> holdout;   // Power > threshold
  std::vector<std::string> warnings;
};

SubspaceSplit subspace_filter(const Dataset& data, double threshold,
                              std::string_view column = kPower);

}  // namespace madopt
