#include "madopt/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace madopt {

void MonteCarloSpec::validate() const {
  require(n_samples >= 2, ErrorCode::InvalidArgument, "Monte Carlo needs n_samples >= 2");
  require(rounds >= 1, ErrorCode::InvalidArgument, "Monte Carlo needs rounds >= 1");
  require(noise_fraction > 0.0 && std::isfinite(noise_fraction), ErrorCode::InvalidArgument,
          "noise fraction must be > 0");
}

PerturbedRows perturb_inputs(const Vec& x_star, const Vec& stds, double frac, Index n, std::uint64_t seed,
                             const std::vector<bool>& mask, const std::vector<std::string>& names) {
  const Index p = x_star.size();
  require(stds.size() == p, ErrorCode::InvalidArgument, "perturb_inputs: std vector size mismatch");
  require(mask.empty() || static_cast<Index>(mask.size()) == p, ErrorCode::InvalidArgument,
          "perturb_inputs: mask size mismatch");
  require(n >= 1 && frac >= 0.0, ErrorCode::InvalidArgument, "perturb_inputs: need n >= 1 and frac >= 0");
  PerturbedRows out;
  std::vector<double> sigma(static_cast<std::size_t>(p), 0.0);
  for (Index j = 0; j < p; ++j) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(j)]) continue;
    if (!(stds(j) > 0.0)) {
      const std::string name = j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)] : std::to_string(j);
      out.warnings.push_back("std of " + name + " is not positive; held fixed");
      continue;
    }
    sigma[static_cast<std::size_t>(j)] = frac * stds(j);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.rows.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) {
      const double s = sigma[static_cast<std::size_t>(j)];
      out.rows(i, j) = s > 0.0 ? x_star(j) + s * gauss(rng) : x_star(j);
    }
  return out;
}

double quantile_linear(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), ErrorCode::InvalidArgument, "quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

QuantileInterval confidence_interval(std::vector<double> samples) {
  require(!samples.empty(), ErrorCode::InvalidArgument, "confidence interval of an empty sample");
  require(samples.size() >= 2, ErrorCode::InvalidArgument, "confidence interval needs at least 2 samples");
  std::sort(samples.begin(), samples.end());
  QuantileInterval q;
  q.lower = quantile_linear(samples, 0.025);
  q.upper = quantile_linear(samples, 0.975);
  q.width = q.upper - q.lower;
  return q;
}

std::vector<bool> process_input_mask(const Schema& schema, const std::vector<std::string>& input_names,
                                     bool include_ambient) {
  std::vector<bool> mask;
  for (const auto& name : input_names) {
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const VariableSpec& v) { return v.name == name; });
    require(it != schema.end(), ErrorCode::Schema, "schema has no variable '" + name + "'");
    mask.push_back(it->role == Role::ProcessInput || (include_ambient && it->role == Role::AmbientInput));
  }
  return mask;
}

MonteCarloReport monte_carlo(const SurrogateSet& models, const Vec& x_star_eng, const Vec& stds,
                             const std::vector<bool>& mask, const MonteCarloSpec& spec) {
  spec.validate();
  const auto names = models.input_names();
  MonteCarloReport report;
  report.spec = spec;
  report.x_star = x_star_eng;
  for (std::size_t j = 0; j < names.size(); ++j)
    if (mask.empty() || mask[j]) report.perturbed.push_back(names[j]);

  const ScalerParams in_scaler = models.scaler.subset(names);
  const Vec x_scaled = in_scaler.scale(x_star_eng);
  const std::array<Target, 3> targets = {Target::Power, Target::TE, Target::THR};
  for (std::size_t t = 0; t < 3; ++t) report.summary[t].deterministic = models.predict(targets[t], x_scaled);

  for (int r = 0; r < spec.rounds; ++r) {
    MonteCarloRound round;
    round.round = r;
    round.seed = child_seed(spec.seed, static_cast<std::uint64_t>(r));
    auto pert = perturb_inputs(x_star_eng, stds, spec.noise_fraction, spec.n_samples, round.seed, mask, names);
    if (r == 0) report.warnings = pert.warnings;
    const Mat X = in_scaler.scale_rows(pert.rows);
    for (std::size_t t = 0; t < 3; ++t) {
      const auto& m = models.model(targets[t]);
      const Index k = models.scaler.index_of(m.target);
      const double lo = models.scaler.mins()(k), range = models.scaler.maxs()(k) - lo;
      const Vec y = (m.forward_batch(X).array() * range + lo).matrix();
      for (Index i = 0; i < y.size(); ++i)
        if (!std::isfinite(y(i)))
          fail(ErrorCode::Numeric, std::string("non-finite ") + m.target + " prediction at round " +
                                       std::to_string(r) + ", sample " + std::to_string(i));
      round.targets[t].mean = y.mean();
      round.targets[t].interval = confidence_interval(to_std(y));
    }
    report.rounds.push_back(round);
  }

  for (std::size_t t = 0; t < 3; ++t) {
    auto& s = report.summary[t];
    s.min_width = std::numeric_limits<double>::infinity();
    for (const auto& round : report.rounds) {
      const auto& rt = round.targets[t];
      s.mean_of_means += rt.mean;
      s.mean_width += rt.interval.width;
      s.min_width = std::min(s.min_width, rt.interval.width);
      s.max_width = std::max(s.max_width, rt.interval.width);
      if (std::abs(rt.mean - s.deterministic) <= 0.5 * rt.interval.width) ++s.rounds_mean_within_half_width;
    }
    s.mean_of_means /= static_cast<double>(report.rounds.size());
    s.mean_width /= static_cast<double>(report.rounds.size());
    // Pooled interval over the per-round means' spread plus widths is not
    // meaningful; pool the per-round bounds instead.
    std::vector<double> lows, highs;
    for (const auto& round : report.rounds) {
      lows.push_back(round.targets[t].interval.lower);
      highs.push_back(round.targets[t].interval.upper);
    }
    s.pooled.lower = std::accumulate(lows.begin(), lows.end(), 0.0) / static_cast<double>(lows.size());
    s.pooled.upper = std::accumulate(highs.begin(), highs.end(), 0.0) / static_cast<double>(highs.size());
    s.pooled.width = s.pooled.upper - s.pooled.lower;
  }
  return report;
}

}  // namespace madopt
