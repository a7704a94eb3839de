#pragma once

#include "madopt/dataset.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace madopt {

enum class Activation { Tanh, Linear };

const char* to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Single-hidden-layer regressor: y = W2 . act(W1 x + b1) + b2, on scaled data.
struct MlpModel {
  std::string target;  // Power, TE or THR
  Activation activation = Activation::Tanh;
  Mat W1;  // hidden x input
  Vec b1;  // hidden
  Vec W2;  // hidden (the single output row)
  double b2 = 0.0;
  std::string scaler_ref;
  std::vector<std::string> input_names;

  Index input_dim() const { return W1.cols(); }
  Index hidden() const { return W1.rows(); }

  double forward(const Vec& x) const;
  /// One prediction per row of X.
  Vec forward_batch(const Mat& X) const;
  Vec grad_input(const Vec& x) const;
  /// Prediction and input gradient in one pass.
  double forward_grad(const Vec& x, Vec& grad) const;

  bool all_finite() const;
};

MlpModel init_mlp(Index input_dim, Index hidden, Activation activation, std::uint64_t seed);

struct TrainConfig {
  int max_epochs = 5000;
  Index batch_size = 0;  // 0 = full batch
  double learning_rate = 0.01;
  double l1 = 1e-6;             // L1 penalty on weights inside the loss
  double weight_decay = 1e-5;   // decoupled, applied in the update
  std::uint64_t seed = 11;
  int patience = 200;
  double validation_fraction = 0.1;  // carved from the training rows
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_history;        // training objective per epoch
  std::vector<double> validation_history;  // validation MSE per epoch
  int best_epoch = 0;
  int epochs_run = 0;
};

/// Adam on scaled arrays. Validation arrays drive early stopping when
/// non-empty; the best-validation parameters are returned.
TrainResult train_scaled(const MlpModel& model, const Mat& X, const Vec& y, const Mat& X_val,
                         const Vec& y_val, const TrainConfig& config);

/// Scales `train` with `scaler`, holds out config.validation_fraction for early
/// stopping, and trains toward model.target.
TrainResult train(const MlpModel& model, const Dataset& train, const ScalerParams& scaler,
                  const TrainConfig& config);

struct Metrics {
  double r2 = 0.0;
  double rmse = 0.0;  // engineering units
};

Metrics compute_metrics(const Vec& actual, const Vec& predicted);
/// Predictions are unscaled to engineering units before scoring.
Metrics evaluate(const MlpModel& model, const Dataset& data, const ScalerParams& scaler);
/// Engineering-unit predictions for every row of `data`.
Vec predict_dataset(const MlpModel& model, const Dataset& data, const ScalerParams& scaler);

struct HiddenSelection {
  Index hidden = 0;
  std::vector<std::pair<Index, double>> validation_rmse;  // (size, RMSE in target units)
  TrainResult best;
};

/// Trains one model per grid size and keeps the lowest validation RMSE.
HiddenSelection select_hidden(const std::string& target, const Dataset& train, const ScalerParams& scaler,
                              const std::vector<Index>& grid, Activation activation,
                              const TrainConfig& config);

// ---------------------------------------------------------------------------
// Inductive conformal intervals

struct ConformalCalibration {
  std::vector<double> scores;  // sorted absolute residuals, engineering units
  double alpha = 0.05;
  double quantile = 0.0;
  bool calibrated = false;
};

ConformalCalibration conformal_from_scores(std::vector<double> scores, double alpha);
ConformalCalibration calibrate_conformal(const MlpModel& model, const Dataset& calib,
                                         const ScalerParams& scaler, double alpha);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// x is a scaled input row; the interval is in engineering units.
Interval predict_interval(const MlpModel& model, const ConformalCalibration& calib,
                          const ScalerParams& scaler, const Vec& x);

/// Fraction of rows whose actual target lies inside the interval.
double empirical_coverage(const MlpModel& model, const ConformalCalibration& calib, const Dataset& data,
                          const ScalerParams& scaler);

// ---------------------------------------------------------------------------

enum class Target { Power, TE, THR };

const char* to_string(Target t);
Target target_from_string(std::string_view s);

/// The three plant surrogates sharing one scaler (inputs and outputs).
struct SurrogateSet {
  ScalerParams scaler;
  MlpModel power;
  MlpModel te;
  MlpModel thr;

  const MlpModel& model(Target t) const;
  std::vector<std::string> input_names() const { return power.input_names; }
  /// Scaled input row -> engineering-unit prediction.
  double predict(Target t, const Vec& x_scaled) const;
  Vec scale_inputs(const Vec& x_eng) const;
  Vec unscale_inputs(const Vec& x_scaled) const;
};

}  // namespace madopt
