#pragma once

#include "madopt/dataset.hpp"

#include <cstdint>

namespace madopt {

// Synthetic gas-turbine plant used in place of proprietary operating data.
//
// Inputs are drawn from a Gaussian copula whose marginals are Beta
// distributions on each variable's [min, max], moment-matched to its mean and
// std. Outputs come from a fixed, smooth oracle (all constants below are
// documented modelling choices, not claims about a real plant):
//
//   u_j    = (x_j - min_j) / (max_j - min_j)         per-input position in range
//   load   = 0.42 u_CDP + 0.30 u_GFFR + 0.20 u_CDT + 0.05 u_FGT + 0.03 u_FGEXT
//            - 0.08 (u_AT - 0.43) + 0.02 (u_AP - 0.55),   clipped to <= 1
//   Power  = 185 + 210 (1 - (1 - load)^1.2)                         [MW]
//   TE_raw = 100 Power / (19.5 GFFR) (1 + 0.03 (u_FGT - 0.5)) (1 - 0.004 (AT - 26))
//            (1 + 0.3 (load - 0.5))                       part-load penalty
//   TE     = 47.794 - 8.5048 exp(-0.26206 (TE_raw - 38.825) / 6.1395)  [%]
//   THR    = 360000 / TE                                            [kJ/kWh]
//
// Power rises with CDP, GFFR and CDT; TE rises (concavely) with load and, at a
// fixed power, falls as fuel flow rises; THR is the heat-rate dual of TE. The
// saturating TE map reproduces the left skew of the historical TE column
// (its max sits only 1.7 std above the mean).
// Seeded noise is added to each output (Power 1 MW, TE 0.25 %-points,
// THR 0.4 % relative) and Power is clipped to [185, 395].
struct PlantOracle {
  static constexpr double kFuelConstant = 19.5;  // MW per lb/s of fuel
  static constexpr double kLoadExponent = 1.2;
  static constexpr double kPartLoad = 0.3;
  static constexpr double kTeCap = 47.794;
  static constexpr double kTeSpan = 8.5048;
  static constexpr double kTeRate = 0.26206;
  static constexpr double kTeRawMean = 38.825;
  static constexpr double kTeRawStd = 6.1395;
  static constexpr double kHeatRateConstant = 360000.0;

  /// Inputs in engineering units, plant_schema() input order.
  static double load_index(const Vec& x);
  static double power(const Vec& x);
  /// Noise-free TE given the inputs and a realised power.
  static double thermal_efficiency(const Vec& x, double power_mw);
  static double heat_rate(double te_percent);
};

struct NoiseLevels {
  double power_mw = 1.0;
  double te_points = 0.25;
  double thr_relative = 0.004;
};

/// Target input correlation used by the generator (plant_schema() input order).
CorrelationMatrix plant_input_correlation();

/// Eigenvalue-clipping repair to the nearest positive-definite correlation.
/// Throws if the input is not a valid correlation matrix or if the repair moves
/// any entry by more than `max_change`.
CorrelationMatrix repair_correlation(const CorrelationMatrix& corr, double max_change = 0.1);

struct SynthResult {
  Dataset data;
  double clip_fraction = 0.0;  // rows where any clipping was applied
  CorrelationMatrix repaired;
};

SynthResult synth_plant_generate(const Schema& targets, const CorrelationMatrix& corr, Index n,
                                 std::uint64_t seed, const NoiseLevels& noise = {});

/// Convenience: plant_schema() targets with plant_input_correlation().
SynthResult synth_plant_default(Index n, std::uint64_t seed);

}  // namespace madopt
