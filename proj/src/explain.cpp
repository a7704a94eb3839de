#include "madopt/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

namespace madopt {

BatchModel batch_model(const MlpModel& model) {
  return [model](const Mat& X) { return model.forward_batch(X); };
}

namespace {

double factorial_capped(Index p) {
  double f = 1.0;
  for (Index k = 2; k <= p; ++k) {
    f *= static_cast<double>(k);
    if (f > 1e15) break;
  }
  return f;
}

}  // namespace

ShapleyValues shapley_sampling(const BatchModel& f, const Mat& background, const Vec& x, int m,
                               std::uint64_t seed, std::vector<std::string> names) {
  require(background.rows() > 0, ErrorCode::InvalidArgument, "Shapley background is empty");
  require(m >= 1, ErrorCode::InvalidArgument, "Shapley needs at least one permutation");
  const Index p = x.size();
  require(background.cols() == p, ErrorCode::InvalidArgument, "background and query widths differ");
  require(names.empty() || static_cast<Index>(names.size()) == p, ErrorCode::InvalidArgument,
          "feature name count mismatch");

  ShapleyValues out;
  out.names = std::move(names);
  out.seed = seed;
  out.base = f(background).mean();
  out.value = f(x.transpose()).mean();

  std::vector<std::vector<Index>> perms;
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  if (static_cast<double>(m) >= factorial_capped(p)) {
    out.exhaustive = true;
    do perms.push_back(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    std::mt19937_64 rng(seed);
    for (int k = 0; k < m; ++k) {
      std::shuffle(order.begin(), order.end(), rng);
      perms.push_back(order);
    }
  }
  out.permutations = static_cast<int>(perms.size());

  Vec sum = Vec::Zero(p), sum_sq = Vec::Zero(p);
  Mat Z;
  for (const auto& perm : perms) {
    Z = background;
    double prev = out.base;
    for (Index j : perm) {
      Z.col(j).setConstant(x(j));
      const double cur = f(Z).mean();
      const double c = cur - prev;
      sum(j) += c;
      sum_sq(j) += c * c;
      prev = cur;
    }
  }
  const double n = static_cast<double>(perms.size());
  out.attribution = sum / n;
  out.std_error = Vec::Zero(p);
  if (!out.exhaustive && perms.size() > 1)
    for (Index j = 0; j < p; ++j) {
      const double var = std::max(0.0, (sum_sq(j) - n * out.attribution(j) * out.attribution(j)) / (n - 1.0));
      out.std_error(j) = std::sqrt(var / n);
    }
  return out;
}

ImportanceReport global_importance(const BatchModel& f, const Mat& background, const Mat& sample, int m,
                                   std::uint64_t seed, const std::vector<std::string>& names, std::string target) {
  require(sample.rows() >= 50, ErrorCode::InvalidArgument, "global importance needs at least 50 rows");
  const Index p = sample.cols();
  require(static_cast<Index>(names.size()) == p, ErrorCode::InvalidArgument, "feature name count mismatch");
  Vec acc = Vec::Zero(p);
  for (Index i = 0; i < sample.rows(); ++i) {
    const auto s = shapley_sampling(f, background, sample.row(i).transpose(), m,
                                    child_seed(seed, static_cast<std::uint64_t>(i)));
    acc += s.attribution.cwiseAbs();
  }
  acc /= static_cast<double>(sample.rows());

  ImportanceReport r;
  r.target = std::move(target);
  r.rows = static_cast<int>(sample.rows());
  r.permutations = m;
  r.seed = seed;
  for (Index j = 0; j < p; ++j) r.ranking.push_back({names[static_cast<std::size_t>(j)], acc(j), 0});
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean_abs > b.mean_abs; });
  for (std::size_t k = 0; k < r.ranking.size(); ++k) r.ranking[k].rank = static_cast<int>(k + 1);
  return r;
}

void write_importance_csv(const std::string& path, const std::vector<ImportanceReport>& reports) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write " + path);
  out << "target,feature,mean_abs_attribution,rank\n" << std::setprecision(17);
  for (const auto& r : reports)
    for (const auto& fi : r.ranking) out << r.target << ',' << fi.feature << ',' << fi.mean_abs << ',' << fi.rank << '\n';
  require(out.good(), ErrorCode::Io, "failed writing " + path);
}

}  // namespace madopt
