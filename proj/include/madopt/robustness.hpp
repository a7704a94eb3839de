#pragma once

#include "madopt/surrogate.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace madopt {

struct MonteCarloSpec {
  Index n_samples = 1000;
  int rounds = 50;
  double noise_fraction = 0.01;  // of each variable's std; 0.012 for extrapolation runs
  std::uint64_t seed = 17;

  void validate() const;
};

struct PerturbedRows {
  Mat rows;  // n x p, engineering units
  std::vector<std::string> warnings;
};

/// rows(i, :) = x_star + e_i, e_ij ~ N(0, (frac std_j)^2) for perturbed j.
/// Variables with std <= 0, or masked out, are held at x_star.
PerturbedRows perturb_inputs(const Vec& x_star, const Vec& stds, double frac, Index n, std::uint64_t seed,
                             const std::vector<bool>& mask = {}, const std::vector<std::string>& names = {});

struct QuantileInterval {
  double lower = 0.0;  // 2.5th percentile
  double upper = 0.0;  // 97.5th percentile
  double width = 0.0;
};

/// Linear interpolation between order statistics at h = (n - 1) p.
double quantile_linear(const std::vector<double>& sorted, double p);
QuantileInterval confidence_interval(std::vector<double> samples);

struct RoundTarget {
  double mean = 0.0;
  QuantileInterval interval;
};

struct MonteCarloRound {
  int round = 0;
  std::uint64_t seed = 0;
  std::array<RoundTarget, 3> targets;  // Power, TE, THR
};

struct TargetSummary {
  double deterministic = 0.0;  // prediction at x_star
  double mean_of_means = 0.0;
  double mean_width = 0.0;
  double min_width = 0.0;
  double max_width = 0.0;
  int rounds_mean_within_half_width = 0;
  QuantileInterval pooled;

  double width_ratio() const { return min_width > 0.0 ? max_width / min_width : (max_width > 0.0 ? 1e300 : 1.0); }
};

struct MonteCarloReport {
  MonteCarloSpec spec;
  Vec x_star;
  std::vector<std::string> perturbed;
  std::vector<MonteCarloRound> rounds;
  std::array<TargetSummary, 3> summary;
  std::vector<std::string> warnings;
};

/// Default mask: process inputs only (ambient held fixed).
std::vector<bool> process_input_mask(const Schema& schema, const std::vector<std::string>& input_names,
                                     bool include_ambient = false);

MonteCarloReport monte_carlo(const SurrogateSet& models, const Vec& x_star_eng, const Vec& stds,
                             const std::vector<bool>& mask, const MonteCarloSpec& spec);

}  // namespace madopt
