#pragma once

// Hand-rolled generators for property tests, plus a small cached plant.

#include "madopt/scenarios.hpp"
#include "madopt/synth.hpp"

#include <random>

namespace testing {

using madopt::Index;
using madopt::Mat;
using madopt::Vec;

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  Vec uniform_vec(Index n, double lo = 0.0, double hi = 1.0) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Vec normal_vec(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Mat normal_mat(Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }
  // Well-conditioned SPD matrix: Q diag(s) Q^T with s in [0.5, 2].
  Mat spd(Index n) {
    const Eigen::HouseholderQR<Mat> qr(normal_mat(n, n));
    const Mat Q = qr.householderQ();
    return Q * uniform_vec(n, 0.5, 2.0).asDiagonal() * Q.transpose();
  }
  // Invertible, moderately conditioned linear map.
  Mat invertible(Index n) {
    Mat A = normal_mat(n, n);
    A.diagonal().array() += 3.0;
    return A;
  }
};

// Small plant shared across tests: 1500 rows, short training.
inline const madopt::TrainedPlant& small_plant() {
  static const madopt::TrainedPlant plant = [] {
    const auto data = madopt::synth_plant_default(1500, 7).data;
    madopt::PipelineConfig cfg;
    cfg.train.max_epochs = 800;
    return madopt::train_plant(data, cfg);
  }();
  return plant;
}

}  // namespace testing
