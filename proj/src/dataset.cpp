#include "madopt/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace madopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Solver: return "solver";
    case ErrorCode::MissingArtifact: return "missing_artifact";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

const char* to_string(Role role) {
  switch (role) {
    case Role::ProcessInput: return "process_input";
    case Role::AmbientInput: return "ambient_input";
    case Role::PerformanceOutput: return "performance_output";
  }
  return "unknown";
}

Role role_from_string(std::string_view s) {
  if (s == "process_input") return Role::ProcessInput;
  if (s == "ambient_input") return Role::AmbientInput;
  if (s == "performance_output") return Role::PerformanceOutput;
  fail(ErrorCode::Schema, "unknown variable role '" + std::string(s) + "'");
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& v : schema) {
    require(!v.name.empty(), ErrorCode::Schema, "variable with empty name");
    require(seen.insert(v.name).second, ErrorCode::Schema, "duplicate variable '" + v.name + "'");
    require(v.min <= v.max, ErrorCode::Schema, "min > max for '" + v.name + "'");
    require(v.min <= v.mean && v.mean <= v.max, ErrorCode::Schema,
            "mean outside [min, max] for '" + v.name + "'");
    require(v.std >= 0.0, ErrorCode::Schema, "negative std for '" + v.name + "'");
  }
}

Schema plant_schema() {
  using R = Role;
  return {
      {"CDP", "Psi", R::ProcessInput, 186, 312, 248, 36.82},
      {"GFFR", "lb/s", R::ProcessInput, 29, 50, 39, 5.65},
      {"FGT", "degF", R::ProcessInput, 484, 535, 513, 14.93},
      {"AT", "degC", R::AmbientInput, 20, 34, 26, 3.67},
      {"AP", "hPa", R::AmbientInput, 983, 992, 988, 1.99},
      {"AH", "%", R::AmbientInput, 34, 98, 66, 14.16},
      {"PHGOT", "degF", R::ProcessInput, 400, 425, 411, 2.47},
      {"CDT", "degF", R::ProcessInput, 813, 926, 861, 34.26},
      {"FGEXT", "degC", R::ProcessInput, 629, 673, 659, 15.90},
      {"Power", "MW", R::PerformanceOutput, 185, 395, 297, 59.32},
      {"TE", "%", R::PerformanceOutput, 32.69, 42.97, 38.99, 2.36},
      {"THR", "kJ/kWh", R::PerformanceOutput, 8377, 11022, 9267, 579.46},
  };
}

// ---------------------------------------------------------------------------

Dataset::Dataset(Schema schema, Mat rows, std::string provenance)
    : schema_(std::move(schema)), rows_(std::move(rows)), provenance_(std::move(provenance)) {
  validate_schema(schema_);
  require(rows_.cols() == static_cast<Index>(schema_.size()), ErrorCode::Schema,
          "row width does not match schema");
  require(rows_.rows() >= 2, ErrorCode::InvalidArgument, "dataset needs at least 2 rows");
  require(rows_.allFinite(), ErrorCode::Numeric, "dataset contains non-finite values");
}

Index Dataset::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return static_cast<Index>(i);
  fail(ErrorCode::Schema, "unknown column '" + std::string(name) + "'");
}

bool Dataset::has_column(std::string_view name) const {
  return std::any_of(schema_.begin(), schema_.end(),
                     [&](const VariableSpec& v) { return v.name == name; });
}

Vec Dataset::column(std::string_view name) const { return rows_.col(column_index(name)); }

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  for (const auto& v : schema_) out.push_back(v.name);
  return out;
}

std::vector<std::string> Dataset::input_names() const {
  std::vector<std::string> out;
  for (const auto& v : schema_)
    if (v.is_input()) out.push_back(v.name);
  return out;
}

std::vector<std::string> Dataset::output_names() const {
  std::vector<std::string> out;
  for (const auto& v : schema_)
    if (!v.is_input()) out.push_back(v.name);
  return out;
}

Mat Dataset::columns(const std::vector<std::string>& names) const {
  Mat out(rows_.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Index>(j)) = column(names[j]);
  return out;
}

Dataset Dataset::select_rows(const std::vector<Index>& idx, std::string provenance) const {
  Mat out(static_cast<Index>(idx.size()), rows_.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < rows_.rows(), ErrorCode::InvalidArgument, "row index out of range");
    out.row(static_cast<Index>(i)) = rows_.row(idx[i]);
  }
  return Dataset(schema_, std::move(out), std::move(provenance));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

bool parse_real(const std::string& text, double& out) {
  if (text.empty()) return false;
  std::istringstream ss(text);
  ss.imbue(std::locale::classic());
  ss >> out;
  return !ss.fail() && ss.eof() && std::isfinite(out);
}

}  // namespace

LoadedDataset load_csv(const std::string& path, const Schema& schema, const LoadOptions& options) {
  validate_schema(schema);
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) fail(ErrorCode::Parse, "empty file '" + path + "'");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  for (auto& h : split_line(line)) header.push_back(trim(h));

  std::vector<std::string> warnings;
  std::vector<Index> source_col(schema.size(), -1);
  for (std::size_t j = 0; j < header.size(); ++j) {
    bool known = false;
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (schema[k].name == header[j]) {
        require(source_col[k] < 0, ErrorCode::Schema, "duplicate column '" + header[j] + "'");
        source_col[k] = static_cast<Index>(j);
        known = true;
      }
    }
    if (!known) warnings.push_back("ignoring extra column '" + header[j] + "'");
  }
  for (std::size_t k = 0; k < schema.size(); ++k)
    require(source_col[k] >= 0, ErrorCode::Schema, "missing column '" + schema[k].name + "'");

  std::vector<std::vector<double>> parsed;
  Index row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row_no;
    auto cells = split_line(line);
    require(cells.size() == header.size(), ErrorCode::Parse,
            "row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) +
                " cells, got " + std::to_string(cells.size()));
    std::vector<double> row(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const std::string cell = trim(cells[static_cast<std::size_t>(source_col[k])]);
      if (!parse_real(cell, row[k]))
        fail(ErrorCode::Parse, "row " + std::to_string(row_no) + ", column '" + schema[k].name +
                                   "': non-numeric value '" + cell + "'");
    }
    parsed.push_back(std::move(row));
  }
  require(!parsed.empty(), ErrorCode::Parse, "no data rows in '" + path + "'");

  Mat rows(static_cast<Index>(parsed.size()), static_cast<Index>(schema.size()));
  for (std::size_t i = 0; i < parsed.size(); ++i)
    for (std::size_t k = 0; k < schema.size(); ++k) rows(static_cast<Index>(i), static_cast<Index>(k)) = parsed[i][k];

  if (options.sanity_margin >= 0.0) {
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const double range = schema[k].max - schema[k].min;
      const double lo = schema[k].min - options.sanity_margin * range;
      const double hi = schema[k].max + options.sanity_margin * range;
      for (Index i = 0; i < rows.rows(); ++i) {
        const double v = rows(i, static_cast<Index>(k));
        if (v < lo || v > hi) {
          std::ostringstream msg;
          msg << "row " << (i + 1) << ", column '" << schema[k].name << "': value " << v
              << " outside sanity band [" << lo << ", " << hi << "]";
          fail(ErrorCode::Parse, msg.str());
        }
      }
    }
  }
  return {Dataset(schema, std::move(rows), "csv:" + path), std::move(warnings)};
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  const auto names = data.names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < data.n_rows(); ++i) {
    for (Index j = 0; j < data.n_cols(); ++j) out << (j ? "," : "") << data.rows()(i, j);
    out << '\n';
  }
}

Schema load_schema_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open schema '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "schema '" + path + "': " + e.what());
  }
  require(doc.is_array(), ErrorCode::Schema, "schema must be a JSON list");
  Schema schema;
  for (const auto& item : doc) {
    VariableSpec v;
    v.name = item.at("name").get<std::string>();
    v.unit = item.value("unit", "");
    v.role = role_from_string(item.at("role").get<std::string>());
    v.min = item.at("min").get<double>();
    v.max = item.at("max").get<double>();
    v.mean = item.value("mean", 0.5 * (v.min + v.max));
    v.std = item.value("std", 0.0);
    schema.push_back(std::move(v));
  }
  validate_schema(schema);
  return schema;
}

void save_schema_json(const std::string& path, const Schema& schema) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& v : schema)
    doc.push_back({{"name", v.name}, {"unit", v.unit}, {"role", to_string(v.role)},
                   {"min", v.min}, {"max", v.max}, {"mean", v.mean}, {"std", v.std}});
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scaling

ScalerParams::ScalerParams(std::vector<std::string> names, Vec mins, Vec maxs, std::string id)
    : names_(std::move(names)), mins_(std::move(mins)), maxs_(std::move(maxs)), id_(std::move(id)) {
  require(mins_.size() == size() && maxs_.size() == size(), ErrorCode::InvalidArgument,
          "scaler size mismatch");
  for (Index j = 0; j < size(); ++j)
    require(maxs_(j) > mins_(j), ErrorCode::InvalidArgument,
            "degenerate scaler: column '" + names_[static_cast<std::size_t>(j)] + "' has max <= min");
}

Index ScalerParams::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j)
    if (names_[j] == name) return static_cast<Index>(j);
  fail(ErrorCode::InvalidArgument, "scaler has no column '" + std::string(name) + "'");
}

ScalerParams ScalerParams::subset(const std::vector<std::string>& names) const {
  Vec lo(static_cast<Index>(names.size())), hi(static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const Index k = index_of(names[j]);
    lo(static_cast<Index>(j)) = mins_(k);
    hi(static_cast<Index>(j)) = maxs_(k);
  }
  return ScalerParams(names, lo, hi, id_);
}

double ScalerParams::scale(std::string_view name, double value) const {
  const Index k = index_of(name);
  return (value - mins_(k)) / (maxs_(k) - mins_(k));
}

double ScalerParams::unscale(std::string_view name, double value) const {
  const Index k = index_of(name);
  return mins_(k) + value * (maxs_(k) - mins_(k));
}

Vec ScalerParams::scale(const Vec& x) const {
  require(x.size() == size(), ErrorCode::InvalidArgument, "scale: dimension mismatch");
  return ((x - mins_).array() / (maxs_ - mins_).array()).matrix();
}

Vec ScalerParams::unscale(const Vec& x) const {
  require(x.size() == size(), ErrorCode::InvalidArgument, "unscale: dimension mismatch");
  return (mins_.array() + x.array() * (maxs_ - mins_).array()).matrix();
}

Mat ScalerParams::scale_rows(const Mat& X) const {
  require(X.cols() == size(), ErrorCode::InvalidArgument, "scale: dimension mismatch");
  const Eigen::RowVectorXd lo = mins_.transpose();
  const Eigen::RowVectorXd range = (maxs_ - mins_).transpose();
  return ((X.rowwise() - lo).array().rowwise() / range.array()).matrix();
}

Mat ScalerParams::unscale_rows(const Mat& X) const {
  require(X.cols() == size(), ErrorCode::InvalidArgument, "unscale: dimension mismatch");
  const Eigen::RowVectorXd lo = mins_.transpose();
  const Eigen::RowVectorXd range = (maxs_ - mins_).transpose();
  return ((X.array().rowwise() * range.array()).rowwise() + lo.array()).matrix();
}

bool ScalerParams::operator==(const ScalerParams& other) const {
  return id_ == other.id_ && names_ == other.names_ && mins_ == other.mins_ && maxs_ == other.maxs_;
}

ScalerParams fit_scaler(const Dataset& data, const std::vector<std::string>& columns, std::string id) {
  Vec lo(static_cast<Index>(columns.size())), hi(static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const Vec c = data.column(columns[j]);
    lo(static_cast<Index>(j)) = c.minCoeff();
    hi(static_cast<Index>(j)) = c.maxCoeff();
    require(hi(static_cast<Index>(j)) > lo(static_cast<Index>(j)), ErrorCode::InvalidArgument,
            "degenerate scaler: column '" + columns[j] + "' is constant");
  }
  return ScalerParams(columns, lo, hi, std::move(id));
}

// ---------------------------------------------------------------------------
// Summaries

std::vector<ColumnStats> descriptive_stats(const Dataset& data) {
  std::vector<ColumnStats> out;
  const double n = static_cast<double>(data.n_rows());
  for (Index j = 0; j < data.n_cols(); ++j) {
    const auto c = data.rows().col(j);
    ColumnStats s;
    s.name = data.schema()[static_cast<std::size_t>(j)].name;
    s.min = c.minCoeff();
    s.max = c.maxCoeff();
    s.mean = c.mean();
    s.std = std::sqrt((c.array() - s.mean).square().sum() / (n - 1.0));
    out.push_back(s);
  }
  return out;
}

const ColumnStats& find_stats(const std::vector<ColumnStats>& stats, std::string_view name) {
  for (const auto& s : stats)
    if (s.name == name) return s;
  fail(ErrorCode::InvalidArgument, "no statistics for '" + std::string(name) + "'");
}

Index CorrelationMatrix::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<Index>(j);
  fail(ErrorCode::InvalidArgument, "correlation matrix has no variable '" + std::string(name) + "'");
}

double CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  return values(index_of(a), index_of(b));
}

double pearson(const Vec& x, const Vec& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
          "pearson: need two equal-length series of at least 2 values");
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  require(sxx > 0.0 && syy > 0.0, ErrorCode::Numeric, "pearson: constant series");
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const Dataset& data) { return pearson_matrix(data, data.names()); }

CorrelationMatrix pearson_matrix(const Dataset& data, const std::vector<std::string>& names) {
  const Index p = static_cast<Index>(names.size());
  std::vector<Vec> cols;
  for (const auto& name : names) {
    Vec c = data.column(name);
    require((c.array() - c.mean()).abs().maxCoeff() > 0.0, ErrorCode::Numeric,
            "correlation undefined: column '" + name + "' is constant");
    cols.push_back(std::move(c));
  }
  Mat r = Mat::Identity(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j)
      r(i, j) = r(j, i) = pearson(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
  return {names, r};
}

void write_stats_csv(const std::string& path, const std::vector<ColumnStats>& stats) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  out << "variable,min,mean,max,std\n" << std::setprecision(17);
  for (const auto& s : stats) out << s.name << ',' << s.min << ',' << s.mean << ',' << s.max << ',' << s.std << '\n';
}

void write_correlation_csv(const std::string& path, const CorrelationMatrix& corr) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  out << "variable";
  for (const auto& n : corr.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < corr.names.size(); ++i) {
    out << corr.names[i];
    for (std::size_t j = 0; j < corr.names.size(); ++j)
      out << ',' << corr.values(static_cast<Index>(i), static_cast<Index>(j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Partitioning

Partition split(const Dataset& data, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidArgument, "split ratio must be in (0, 1)");
  require(data.n_rows() >= 5, ErrorCode::InvalidArgument, "too few rows to split (need >= 5)");
  std::vector<Index> order(static_cast<std::size_t>(data.n_rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_first = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(data.n_rows())));
  require(n_first >= 1 && n_first < order.size(), ErrorCode::InvalidArgument,
          "split leaves an empty partition");
  std::vector<Index> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<Index> b(order.begin() + static_cast<std::ptrdiff_t>(n_first), order.end());
  auto first = data.select_rows(a, data.provenance() + "|split-a");
  auto second = data.select_rows(b, data.provenance() + "|split-b");
  return {std::move(first), std::move(second), std::move(a), std::move(b)};
}

SubspaceSplit subspace_filter(const Dataset& data, double threshold, std::string_view column) {
  const Vec c = data.column(column);
  std::vector<Index> lo, hi;
  for (Index i = 0; i < c.size(); ++i) (c(i) <= threshold ? lo : hi).push_back(i);
  SubspaceSplit out;
  std::ostringstream tag;
  tag << threshold;
  // Dataset requires >= 2 rows; smaller sides are reported as empty.
  if (lo.size() >= 2)
    out.subspace = data.select_rows(lo, data.provenance() + "|" + std::string(column) + "<=" + tag.str());
  else
    out.warnings.push_back("subspace has " + std::to_string(lo.size()) + " rows");
  if (hi.size() >= 2)
    out.holdout = data.select_rows(hi, data.provenance() + "|" + std::string(column) + ">" + tag.str());
  else
    out.warnings.push_back("holdout has " + std::to_string(hi.size()) + " rows");
  return out;
}

}  // namespace madopt
