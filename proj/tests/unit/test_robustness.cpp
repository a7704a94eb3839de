#include <doctest.h>

#include "madopt/robustness.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>

using namespace madopt;

TEST_CASE("quantile interval") {
  std::vector<double> s(1000);
  std::iota(s.begin(), s.end(), 1.0);
  const auto q = confidence_interval(s);
  CHECK(q.lower == doctest::Approx(25.975).epsilon(1e-12));
  CHECK(q.upper == doctest::Approx(975.025).epsilon(1e-12));
  CHECK(q.width == doctest::Approx(949.05).epsilon(1e-12));

  CHECK(confidence_interval(std::vector<double>(10, 3.0)).width == 0.0);
  CHECK_THROWS_AS(confidence_interval({}), Error);
  CHECK_THROWS_AS(confidence_interval({1.0}), Error);

  SUBCASE("symmetric samples") {
    testing::Gen g(2);
    std::vector<double> sym;
    for (int i = 0; i < 500; ++i) {
      const double v = g.normal();
      sym.push_back(v);
      sym.push_back(-v);
    }
    const auto c = confidence_interval(sym);
    CHECK(c.lower == doctest::Approx(-c.upper).epsilon(1e-12));
  }

  SUBCASE("duplicating the sample leaves the quantiles nearly unchanged") {
    testing::Gen g(3);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> v;
      const int n = g.integer(2, 400);
      for (int i = 0; i < n; ++i) v.push_back(g.normal());
      auto twice = v;
      twice.insert(twice.end(), v.begin(), v.end());
      const auto a = confidence_interval(v), b = confidence_interval(twice);
      // Linear interpolation moves by at most one order-statistic gap when the
      // sample is duplicated; with the ordered copy the bracketing values are
      // the same, so the change is bounded by that gap.
      std::sort(v.begin(), v.end());
      double gap = 0.0;
      for (std::size_t i = 1; i < v.size(); ++i) gap = std::max(gap, v[i] - v[i - 1]);
      CHECK(std::abs(a.lower - b.lower) <= gap);
      CHECK(std::abs(a.upper - b.upper) <= gap);
      CHECK(b.lower <= b.upper);
    }
  }
}

TEST_CASE("input perturbation") {
  const Vec x = Vec::LinSpaced(4, 1.0, 4.0);
  const Vec stds = (Vec(4) << 2.0, 0.0, 5.0, 1.0).finished();
  const auto a = perturb_inputs(x, stds, 0.01, 1000, 9);
  const auto b = perturb_inputs(x, stds, 0.01, 1000, 9);
  CHECK(a.rows == b.rows);
  REQUIRE(a.warnings.size() == 1);
  CHECK((a.rows.col(1).array() == 2.0).all());

  for (Index j : {0, 2, 3}) {
    const Vec c = a.rows.col(j);
    const double sd = std::sqrt((c.array() - c.mean()).square().sum() / 999.0);
    CHECK(std::abs(sd / (0.01 * stds(j)) - 1.0) < 0.1);
  }

  const auto tiny = perturb_inputs(x, stds, 1e-12, 50, 1);
  CHECK(((tiny.rows.rowwise() - x.transpose()).cwiseAbs().maxCoeff()) < 1e-10);

  const auto masked = perturb_inputs(x, stds, 0.5, 20, 1, {true, true, false, true});
  CHECK((masked.rows.col(2).array() == 3.0).all());
}

TEST_CASE("monte carlo on a constant model gives zero-width intervals") {
  SurrogateSet s;
  std::vector<std::string> names = {"a", "b"};
  s.scaler = ScalerParams({"a", "b", "Power", "TE", "THR"}, Vec::Zero(5), Vec::Ones(5), "u");
  for (auto* m : {&s.power, &s.te, &s.thr}) {
    *m = init_mlp(2, 3, Activation::Tanh, 1);
    m->W1.setZero();
    m->W2.setZero();
    m->b2 = 0.25;
    m->input_names = names;
  }
  s.power.target = "Power";
  s.te.target = "TE";
  s.thr.target = "THR";
  MonteCarloSpec spec;
  spec.rounds = 3;
  spec.n_samples = 50;
  const auto r = monte_carlo(s, Vec::Constant(2, 0.5), Vec::Ones(2), {}, spec);
  for (const auto& round : r.rounds)
    for (const auto& t : round.targets) CHECK(t.interval.width == 0.0);
  CHECK(r.summary[0].deterministic == 0.25);

  MonteCarloSpec bad;
  bad.n_samples = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = MonteCarloSpec{};
  bad.noise_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("monte carlo on the small plant") {
  const auto& plant = testing::small_plant();
  const auto& ctx = plant.ctx;
  const auto names = ctx.models->input_names();
  Vec x(9), stds(9);
  for (std::size_t j = 0; j < 9; ++j) {
    x(static_cast<Index>(j)) = find_stats(ctx.stats, names[j]).mean;
    stds(static_cast<Index>(j)) = find_stats(ctx.stats, names[j]).std;
  }
  const auto mask = process_input_mask(ctx.data.schema(), names);
  CHECK(std::count(mask.begin(), mask.end(), true) == 6);

  MonteCarloSpec spec;
  spec.rounds = 10;
  const auto r1 = monte_carlo(*ctx.models, x, stds, mask, spec);
  const auto again = monte_carlo(*ctx.models, x, stds, mask, spec);
  CHECK(r1.rounds[3].targets[1].mean == again.rounds[3].targets[1].mean);
  CHECK(r1.perturbed.size() == 6);

  for (const auto& round : r1.rounds)
    for (const auto& t : round.targets) {
      CHECK(t.interval.width >= 0.0);
      CHECK(t.interval.lower <= t.mean);
      CHECK(t.mean <= t.interval.upper);
    }

  // widths scale roughly linearly for small noise
  spec.noise_fraction = 0.02;
  const auto r2 = monte_carlo(*ctx.models, x, stds, mask, spec);
  for (std::size_t t = 0; t < 3; ++t) {
    const double ratio = r2.summary[t].mean_width / r1.summary[t].mean_width;
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.4);
  }
}
