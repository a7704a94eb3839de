#include <doctest.h>

#include "madopt/synth.hpp"

#include <cmath>

using namespace madopt;

TEST_CASE("synthetic plant matches its calibration targets") {
  const auto s = synth_plant_default(5000, 7);
  const auto stats = descriptive_stats(s.data);
  const auto& power = find_stats(stats, kPower);
  CHECK(std::abs(power.mean - 297.0) / 297.0 < 0.05);
  CHECK(std::abs(power.std - 59.32) / 59.32 < 0.05);
  CHECK(power.min >= 185.0);
  CHECK(power.max <= 395.0);
  CHECK(s.clip_fraction < 0.02);

  const auto corr = pearson_matrix(s.data);
  CHECK(corr.at("CDP", "GFFR") > 0.9);
}

TEST_CASE("synthetic generator is deterministic per seed") {
  const auto a = synth_plant_default(300, 11).data;
  const auto b = synth_plant_default(300, 11).data;
  const auto c = synth_plant_default(300, 12).data;
  CHECK(a.rows() == b.rows());
  CHECK(a.rows() != c.rows());
}

TEST_CASE("oracle efficiency rises from the min-power to the max-power operating point") {
  const auto schema = plant_schema();
  Vec lo(9), hi(9);
  for (Index j = 0; j < 9; ++j) {
    lo(j) = schema[static_cast<std::size_t>(j)].mean;
    hi(j) = lo(j);
  }
  // load-bearing inputs at their extremes, ambient at the mean
  for (Index j : {0, 1, 2, 7, 8}) {
    lo(j) = schema[static_cast<std::size_t>(j)].min;
    hi(j) = schema[static_cast<std::size_t>(j)].max;
  }
  const double p_lo = PlantOracle::power(lo), p_hi = PlantOracle::power(hi);
  CHECK(p_hi > p_lo);
  CHECK(PlantOracle::thermal_efficiency(hi, p_hi) > PlantOracle::thermal_efficiency(lo, p_lo));
  CHECK(PlantOracle::heat_rate(40.0) == doctest::Approx(9000.0));
}

TEST_CASE("correlation repair") {
  const auto target = plant_input_correlation();
  const auto repaired = repair_correlation(target);
  const Eigen::SelfAdjointEigenSolver<Mat> es(repaired.values);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK((repaired.values - target.values).cwiseAbs().maxCoeff() <= 0.1);

  CorrelationMatrix bad = target;
  bad.values(0, 1) = 1.5;
  CHECK_THROWS_AS(repair_correlation(bad), Error);
}
