#include "madopt/synth.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace madopt {

namespace {

constexpr std::size_t kInputs = 9;

// Engineering ranges of the oracle's inputs (fixed; independent of targets).
struct Range {
  double lo, hi;
  double unit(double x) const { return (x - lo) / (hi - lo); }
};

const std::array<Range, kInputs>& oracle_ranges() {
  static const std::array<Range, kInputs> r = [] {
    std::array<Range, kInputs> out{};
    const auto schema = plant_schema();
    for (std::size_t j = 0; j < kInputs; ++j) out[j] = {schema[j].min, schema[j].max};
    return out;
  }();
  return r;
}

enum Col : Index { CDP = 0, GFFR, FGT, AT, AP, AH, PHGOT, CDT, FGEXT };

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double PlantOracle::load_index(const Vec& x) {
  require(x.size() == static_cast<Index>(kInputs), ErrorCode::InvalidArgument, "oracle expects 9 inputs");
  const auto& r = oracle_ranges();
  auto u = [&](Col c) { return r[static_cast<std::size_t>(c)].unit(x(c)); };
  return 0.42 * u(CDP) + 0.30 * u(GFFR) + 0.20 * u(CDT) + 0.05 * u(FGT) + 0.03 * u(FGEXT) -
         0.08 * (u(AT) - 0.43) + 0.02 * (u(AP) - 0.55);
}

double PlantOracle::power(const Vec& x) {
  const double load = std::min(load_index(x), 1.0);
  return 185.0 + 210.0 * (1.0 - std::pow(1.0 - load, kLoadExponent));
}

double PlantOracle::thermal_efficiency(const Vec& x, double power_mw) {
  const auto& r = oracle_ranges();
  const double u_fgt = r[FGT].unit(x(FGT));
  const double load = std::min(load_index(x), 1.0);
  const double raw = 100.0 * power_mw / (kFuelConstant * x(GFFR)) * (1.0 + 0.03 * (u_fgt - 0.5)) *
                     (1.0 - 0.004 * (x(AT) - 26.0)) * (1.0 + kPartLoad * (load - 0.5));
  return kTeCap - kTeSpan * std::exp(-kTeRate * (raw - kTeRawMean) / kTeRawStd);
}

double PlantOracle::heat_rate(double te_percent) { return kHeatRateConstant / te_percent; }

CorrelationMatrix plant_input_correlation() {
  const std::vector<std::string> names = {"CDP", "GFFR", "FGT", "AT", "AP", "AH", "PHGOT", "CDT", "FGEXT"};
  Mat c = Mat::Identity(9, 9);
  auto set = [&](Col a, Col b, double v) { c(a, b) = c(b, a) = v; };
  // Load-driven process block.
  set(CDP, GFFR, 0.95);
  set(CDP, CDT, 0.92);
  set(GFFR, CDT, 0.90);
  set(CDP, FGT, 0.70);
  set(GFFR, FGT, 0.68);
  set(CDT, FGT, 0.65);
  set(CDP, FGEXT, 0.60);
  set(GFFR, FGEXT, 0.62);
  set(CDT, FGEXT, 0.58);
  set(FGT, FGEXT, 0.45);
  // PHGOT is only weakly tied to load.
  set(PHGOT, CDP, 0.20);
  set(PHGOT, GFFR, 0.18);
  set(PHGOT, CDT, 0.15);
  set(PHGOT, FGT, 0.25);
  set(PHGOT, FGEXT, 0.10);
  // Ambient block.
  set(AT, AH, -0.45);
  set(AT, AP, -0.30);
  set(AP, AH, 0.10);
  set(AT, CDP, -0.15);
  set(AT, GFFR, -0.10);
  set(AT, CDT, 0.10);
  set(AT, FGEXT, 0.20);
  return {names, c};
}

CorrelationMatrix repair_correlation(const CorrelationMatrix& corr, double max_change) {
  const Mat& c = corr.values;
  const Index p = c.rows();
  require(c.cols() == p && static_cast<Index>(corr.names.size()) == p, ErrorCode::InvalidArgument,
          "correlation matrix shape mismatch");
  require((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12, ErrorCode::InvalidArgument,
          "correlation matrix is not symmetric");
  require((c.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12, ErrorCode::InvalidArgument,
          "correlation matrix diagonal must be 1");
  require(c.cwiseAbs().maxCoeff() <= 1.0, ErrorCode::InvalidArgument, "correlation entries must lie in [-1, 1]");

  Eigen::SelfAdjointEigenSolver<Mat> eig(c);
  constexpr double kFloor = 1e-6;
  if (eig.eigenvalues().minCoeff() >= kFloor) return corr;

  const Vec clipped = eig.eigenvalues().cwiseMax(kFloor);
  Mat fixed = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const Vec d = fixed.diagonal().cwiseSqrt().cwiseInverse();
  fixed = d.asDiagonal() * fixed * d.asDiagonal();
  fixed = 0.5 * (fixed + fixed.transpose());
  fixed.diagonal().setOnes();
  require((fixed - c).cwiseAbs().maxCoeff() <= max_change, ErrorCode::Numeric,
          "correlation matrix is too indefinite to repair");
  return {corr.names, fixed};
}

SynthResult synth_plant_generate(const Schema& targets, const CorrelationMatrix& corr, Index n,
                                 std::uint64_t seed, const NoiseLevels& noise) {
  validate_schema(targets);
  const auto canonical = plant_schema();
  require(targets.size() == canonical.size(), ErrorCode::Schema, "synthetic plant needs the 12 plant variables");
  for (std::size_t j = 0; j < canonical.size(); ++j)
    require(targets[j].name == canonical[j].name, ErrorCode::Schema,
            "synthetic plant expects '" + canonical[j].name + "' at position " + std::to_string(j));
  require(n >= 2, ErrorCode::InvalidArgument, "synthetic plant needs n >= 2");
  require(corr.values.rows() == static_cast<Index>(kInputs), ErrorCode::InvalidArgument,
          "input correlation must be 9x9");
  for (std::size_t j = 0; j < kInputs; ++j)
    require(corr.names[j] == canonical[j].name, ErrorCode::InvalidArgument, "correlation names out of order");

  CorrelationMatrix repaired = repair_correlation(corr);
  const Mat chol = Eigen::LLT<Mat>(repaired.values).matrixL();

  // Moment-matched Beta(a, b) on [min, max] per input.
  std::array<double, kInputs> a{}, b{};
  for (std::size_t j = 0; j < kInputs; ++j) {
    const auto& t = targets[j];
    const double range = t.max - t.min;
    require(range > 0.0, ErrorCode::Schema, "degenerate target range for '" + t.name + "'");
    const double m = (t.mean - t.min) / range;
    const double v = (t.std / range) * (t.std / range);
    require(m > 0.0 && m < 1.0 && v > 0.0 && v < m * (1.0 - m), ErrorCode::Schema,
            "no Beta marginal matches the targets of '" + t.name + "'");
    const double nu = m * (1.0 - m) / v - 1.0;
    a[j] = m * nu;
    b[j] = (1.0 - m) * nu;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat rows(n, static_cast<Index>(canonical.size()));
  Index clipped_rows = 0;
  Vec z(static_cast<Index>(kInputs)), x(static_cast<Index>(kInputs));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < z.size(); ++j) z(j) = gauss(rng);
    const Vec corr_z = chol * z;
    for (std::size_t j = 0; j < kInputs; ++j) {
      const auto& t = targets[j];
      const double p = std::clamp(normal_cdf(corr_z(static_cast<Index>(j))), 1e-15, 1.0 - 1e-15);
      x(static_cast<Index>(j)) = t.min + (t.max - t.min) * boost::math::ibeta_inv(a[j], b[j], p);
    }
    bool clipped = PlantOracle::load_index(x) > 1.0;
    double power = PlantOracle::power(x);
    const double te_clean = PlantOracle::thermal_efficiency(x, power);
    power += noise.power_mw * gauss(rng);
    if (power < 185.0 || power > 395.0) {
      clipped = true;
      power = std::clamp(power, 185.0, 395.0);
    }
    const double te = te_clean + noise.te_points * gauss(rng);
    const double thr = PlantOracle::heat_rate(te) * (1.0 + noise.thr_relative * gauss(rng));
    if (clipped) ++clipped_rows;

    rows.row(i).head(static_cast<Index>(kInputs)) = x.transpose();
    rows(i, 9) = power;
    rows(i, 10) = te;
    rows(i, 11) = thr;
  }
  SynthResult out{Dataset(targets, std::move(rows), "synthetic:seed=" + std::to_string(seed)),
                  static_cast<double>(clipped_rows) / static_cast<double>(n), std::move(repaired)};
  return out;
}

SynthResult synth_plant_default(Index n, std::uint64_t seed) {
  return synth_plant_generate(plant_schema(), plant_input_correlation(), n, seed);
}

}  // namespace madopt
