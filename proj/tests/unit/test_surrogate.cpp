#include <doctest.h>

#include "madopt/surrogate.hpp"
#include "madopt/synth.hpp"
#include "support.hpp"

#include <cmath>

using namespace madopt;

namespace {

MlpModel zero_model(Index p, Index h, double b2) {
  MlpModel m = init_mlp(p, h, Activation::Tanh, 1);
  m.W1.setZero();
  m.b1.setZero();
  m.W2.setZero();
  m.b2 = b2;
  return m;
}

// central differences, relative error with a unit floor
double fd_error(const MlpModel& m, const Vec& x) {
  const Vec g = m.grad_input(x);
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6;
    Vec a = x, b = x;
    a(j) += h;
    b(j) -= h;
    const double fd = (m.forward(a) - m.forward(b)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g(j)) / std::max(1.0, std::abs(g(j))));
  }
  return worst;
}

}  // namespace

TEST_CASE("model construction") {
  const auto te = init_mlp(9, 16, Activation::Tanh, 4);
  CHECK(te.W1.rows() == 16);
  CHECK(te.W1.cols() == 9);
  const auto p = init_mlp(9, 31, Activation::Tanh, 4);
  CHECK(p.W1.rows() == 31);
  const auto again = init_mlp(9, 31, Activation::Tanh, 4);
  CHECK(p.W1 == again.W1);
  CHECK(p.W2 == again.W2);
}

TEST_CASE("forward pass") {
  testing::Gen g(2);
  const auto z = zero_model(9, 5, 0.5);
  for (int i = 0; i < 5; ++i) CHECK(z.forward(g.uniform_vec(9)) == 0.5);

  const auto m = init_mlp(3, 4, Activation::Tanh, 8);
  const Vec x = Vec::Zero(3);
  double hand = m.b2;
  for (Index k = 0; k < 4; ++k) hand += m.W2(k) * std::tanh(m.b1(k));
  CHECK(std::abs(m.forward(x) - hand) <= 1e-12);
  const Vec x2 = g.uniform_vec(3);
  CHECK(m.forward(x2) == m.forward(x2));

  Mat X(2, 3);
  X.row(0) = x.transpose();
  X.row(1) = x2.transpose();
  const Vec batch = m.forward_batch(X);
  CHECK(std::abs(batch(0) - m.forward(x)) <= 1e-14);
  CHECK(std::abs(batch(1) - m.forward(x2)) <= 1e-14);
}

TEST_CASE("input gradient") {
  CHECK(zero_model(9, 4, 0.2).grad_input(Vec::Constant(9, 0.3)).cwiseAbs().maxCoeff() == 0.0);

  auto lin = init_mlp(4, 3, Activation::Linear, 5);
  const Vec expect = lin.W1.transpose() * lin.W2;
  CHECK((lin.grad_input(Vec::Constant(4, 0.7)) - expect).cwiseAbs().maxCoeff() <= 1e-15);

  testing::Gen g(77);
  const auto m = init_mlp(9, 31, Activation::Tanh, 3);
  for (int i = 0; i < 20; ++i) CHECK(fd_error(m, g.uniform_vec(9)) <= 1e-4);

  Vec grad;
  const Vec x = g.uniform_vec(9);
  CHECK(m.forward_grad(x, grad) == doctest::Approx(m.forward(x)));
  CHECK((grad - m.grad_input(x)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("regression metrics") {
  Vec y(3), yh(3);
  y << 1, 2, 3;
  yh << 1, 2, 4;
  CHECK(compute_metrics(y, yh).rmse == doctest::Approx(std::sqrt(1.0 / 3.0)));
  CHECK(compute_metrics(y, y).r2 == 1.0);
  CHECK(compute_metrics(y, y).rmse == 0.0);
  CHECK(compute_metrics(y, Vec::Constant(3, 2.0)).r2 == 0.0);
  CHECK_THROWS_AS(compute_metrics(Vec::Ones(3), y), Error);
}

TEST_CASE("training") {
  testing::Gen g(19);
  Mat X(200, 2);
  Vec y(200);
  for (Index i = 0; i < 200; ++i) {
    X.row(i) = g.uniform_vec(2).transpose();
    y(i) = 0.3 * X(i, 0);
  }
  TrainConfig cfg;
  cfg.l1 = 0.0;
  cfg.weight_decay = 0.0;
  cfg.max_epochs = 3000;
  const auto init = init_mlp(2, 4, Activation::Tanh, 1);
  const auto r = train_scaled(init, X, y, Mat(), Vec(), cfg);
  CHECK(compute_metrics(y, r.model.forward_batch(X)).r2 > 0.999);

  SUBCASE("deterministic") {
    const auto r2 = train_scaled(init, X, y, Mat(), Vec(), cfg);
    CHECK(r.model.W1 == r2.model.W1);
    CHECK(r.model.b2 == r2.model.b2);
  }

  SUBCASE("heavy L1 shrinks the hidden layer") {
    TrainConfig heavy = cfg;
    heavy.l1 = 1e3;
    heavy.max_epochs = 500;
    const auto rh = train_scaled(init, X, y, Mat(), Vec(), heavy);
    CHECK(rh.model.W1.cwiseAbs().sum() < r.model.W1.cwiseAbs().sum());
  }

  SUBCASE("loss trend is non-increasing after warm-up") {
    const auto& h = r.loss_history;
    REQUIRE(h.size() > 200);
    auto avg = [&](std::size_t end) {
      double s = 0.0;
      for (std::size_t k = end - 50; k < end; ++k) s += h[k];
      return s / 50.0;
    };
    int increases = 0;
    for (std::size_t e = 150; e + 50 <= h.size(); e += 50) increases += avg(e + 50) > avg(e) * (1 + 1e-9) ? 1 : 0;
    CHECK(increases == 0);
  }

  CHECK_THROWS_AS(train_scaled(init, Mat(0, 2), Vec(0), Mat(), Vec(), cfg), Error);
}

TEST_CASE("conformal calibration") {
  std::vector<double> scores;
  for (int i = 1; i <= 100; ++i) scores.push_back(i);
  const auto c = conformal_from_scores(scores, 0.05);
  CHECK(c.quantile == 96.0);

  const auto z = conformal_from_scores(std::vector<double>(100, 0.0), 0.05);
  CHECK(z.quantile == 0.0);

  CHECK_THROWS_AS(conformal_from_scores({1, 2, 3}, 0.05), Error);
}

TEST_CASE("interval construction") {
  const ScalerParams s({"a", "TE"}, Vec::Zero(2), Vec::Ones(2), "u");
  MlpModel m = zero_model(1, 2, 0.4);
  m.target = "TE";
  m.input_names = {"a"};
  ConformalCalibration c;
  c.quantile = 0.1;
  c.calibrated = true;
  const auto iv = predict_interval(m, c, s, Vec::Zero(1));
  CHECK(iv.lower == doctest::Approx(0.3));
  CHECK(iv.upper == doctest::Approx(0.5));
  c.quantile = 0.0;
  const auto deg = predict_interval(m, c, s, Vec::Zero(1));
  CHECK(deg.lower == deg.upper);
}

TEST_CASE("small synthetic plant fidelity") {
  const auto& plant = testing::small_plant();
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(plant.test_metrics[k].r2 > 0.9);
    CHECK(plant.coverage[k] >= 0.85);
  }
  // calibration rows are disjoint from training rows by construction of the split
  CHECK(plant.train.n_rows() + plant.calib.n_rows() + plant.test.n_rows() == plant.ctx.data.n_rows());
}
