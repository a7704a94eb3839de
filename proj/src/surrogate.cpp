#include "madopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace madopt {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  fail(ErrorCode::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}

const char* to_string(Target t) {
  switch (t) {
    case Target::Power: return "Power";
    case Target::TE: return "TE";
    case Target::THR: return "THR";
  }
  return "unknown";
}

Target target_from_string(std::string_view s) {
  if (s == "Power") return Target::Power;
  if (s == "TE") return Target::TE;
  if (s == "THR") return Target::THR;
  fail(ErrorCode::InvalidArgument, "unknown target '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

namespace {

void check_dim(const MlpModel& m, Index n) {
  require(n == m.input_dim(), ErrorCode::InvalidArgument,
          "input dimension " + std::to_string(n) + " does not match model (" +
              std::to_string(m.input_dim()) + ")");
}

inline Eigen::ArrayXXd activate(Activation a, const Eigen::ArrayXXd& z) {
  return a == Activation::Tanh ? Eigen::ArrayXXd(z.tanh()) : z;
}

inline Eigen::ArrayXXd activate_deriv(Activation a, const Eigen::ArrayXXd& activated) {
  if (a == Activation::Tanh) return 1.0 - activated.square();
  return Eigen::ArrayXXd::Ones(activated.rows(), activated.cols());
}

}  // namespace

double MlpModel::forward(const Vec& x) const {
  check_dim(*this, x.size());
  const Vec z = W1 * x + b1;
  const Vec h = activation == Activation::Tanh ? Vec(z.array().tanh()) : z;
  return W2.dot(h) + b2;
}

Vec MlpModel::forward_batch(const Mat& X) const {
  check_dim(*this, X.cols());
  Mat z = X * W1.transpose();
  z.rowwise() += b1.transpose();
  const Mat h = activate(activation, z.array()).matrix();
  return (h * W2).array() + b2;
}

double MlpModel::forward_grad(const Vec& x, Vec& grad) const {
  check_dim(*this, x.size());
  const Vec z = W1 * x + b1;
  Vec h, dh;
  if (activation == Activation::Tanh) {
    h = z.array().tanh();
    dh = 1.0 - h.array().square();
  } else {
    h = z;
    dh = Vec::Ones(z.size());
  }
  grad = W1.transpose() * (W2.array() * dh.array()).matrix();
  return W2.dot(h) + b2;
}

Vec MlpModel::grad_input(const Vec& x) const {
  Vec g;
  forward_grad(x, g);
  return g;
}

bool MlpModel::all_finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && std::isfinite(b2);
}

MlpModel init_mlp(Index input_dim, Index hidden, Activation activation, std::uint64_t seed) {
  require(hidden >= 1, ErrorCode::InvalidArgument, "hidden layer needs at least one neuron");
  require(input_dim >= 1, ErrorCode::InvalidArgument, "input_dim must be positive");
  std::mt19937_64 rng(seed);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u_in(-in_bound, in_bound);
  std::uniform_real_distribution<double> u_out(-out_bound, out_bound);

  MlpModel m;
  m.activation = activation;
  m.W1.resize(hidden, input_dim);
  m.b1.resize(hidden);
  m.W2.resize(hidden);
  for (Index i = 0; i < hidden; ++i)
    for (Index j = 0; j < input_dim; ++j) m.W1(i, j) = u_in(rng);
  for (Index i = 0; i < hidden; ++i) m.b1(i) = u_in(rng);
  for (Index i = 0; i < hidden; ++i) m.W2(i) = u_out(rng);
  m.b2 = u_out(rng);
  return m;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Flat parameter layout: [W1 (col-major) | b1 | W2 | b2].
struct Layout {
  Index h, d;
  Index w1() const { return 0; }
  Index b1() const { return h * d; }
  Index w2() const { return h * d + h; }
  Index b2() const { return h * d + 2 * h; }
  Index size() const { return h * d + 2 * h + 1; }
};

Vec pack(const MlpModel& m) {
  const Layout L{m.hidden(), m.input_dim()};
  Vec theta(L.size());
  theta.segment(L.w1(), L.h * L.d) = Eigen::Map<const Vec>(m.W1.data(), L.h * L.d);
  theta.segment(L.b1(), L.h) = m.b1;
  theta.segment(L.w2(), L.h) = m.W2;
  theta(L.b2()) = m.b2;
  return theta;
}

void unpack(const Vec& theta, MlpModel& m) {
  const Layout L{m.hidden(), m.input_dim()};
  m.W1 = Eigen::Map<const Mat>(theta.data() + L.w1(), L.h, L.d);
  m.b1 = theta.segment(L.b1(), L.h);
  m.W2 = theta.segment(L.w2(), L.h);
  m.b2 = theta(L.b2());
}

// Objective = MSE + l1 * (|W1|_1 + |W2|_1); fills the gradient.
double objective(const MlpModel& m, const Mat& X, const Vec& y, double l1, Vec& grad) {
  const Layout L{m.hidden(), m.input_dim()};
  const double n = static_cast<double>(X.rows());
  Mat z = X * m.W1.transpose();
  z.rowwise() += m.b1.transpose();
  const Eigen::ArrayXXd h = activate(m.activation, z.array());
  const Vec resid = (h.matrix() * m.W2).array() + m.b2 - y.array();
  const Vec r = (2.0 / n) * resid;

  grad.resize(L.size());
  grad.segment(L.w2(), L.h) = h.matrix().transpose() * r;
  grad(L.b2()) = r.sum();
  const Mat dz = ((r * m.W2.transpose()).array() * activate_deriv(m.activation, h)).matrix();
  const Mat gW1 = dz.transpose() * X;
  grad.segment(L.w1(), L.h * L.d) = Eigen::Map<const Vec>(gW1.data(), L.h * L.d);
  grad.segment(L.b1(), L.h) = dz.colwise().sum().transpose();

  double penalty = 0.0;
  if (l1 > 0.0) {
    penalty = l1 * (m.W1.cwiseAbs().sum() + m.W2.cwiseAbs().sum());
    const Mat s1 = m.W1.array().sign().matrix();
    grad.segment(L.w1(), L.h * L.d) += l1 * Eigen::Map<const Vec>(s1.data(), L.h * L.d);
    grad.segment(L.w2(), L.h) += l1 * m.W2.array().sign().matrix();
  }
  return resid.squaredNorm() / n + penalty;
}

double mse(const MlpModel& m, const Mat& X, const Vec& y) {
  return (m.forward_batch(X) - y).squaredNorm() / static_cast<double>(X.rows());
}

struct Carve {
  std::vector<Index> fit;
  std::vector<Index> val;
};

Carve carve_validation(Index n, double fraction, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Carve out;
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (fraction <= 0.0 || n_val == 0 || n_val >= order.size()) {
    out.fit = std::move(order);
    return out;
  }
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::shuffle(order.begin(), order.end(), rng);
  out.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.fit.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.fit.begin(), out.fit.end());
  return out;
}

Mat take_rows(const Mat& X, const std::vector<Index>& idx) {
  Mat out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = X.row(idx[i]);
  return out;
}

Vec take(const Vec& v, const std::vector<Index>& idx) {
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

}  // namespace

TrainResult train_scaled(const MlpModel& model, const Mat& X, const Vec& y, const Mat& X_val,
                         const Vec& y_val, const TrainConfig& cfg) {
  require(X.rows() > 0 && X.rows() == y.size(), ErrorCode::InvalidArgument, "empty or mismatched training data");
  check_dim(model, X.cols());
  require(cfg.max_epochs > 0 && cfg.learning_rate > 0.0 && cfg.patience > 0, ErrorCode::InvalidArgument,
          "train config: epochs, learning rate and patience must be positive");
  require(cfg.l1 >= 0.0 && cfg.weight_decay >= 0.0, ErrorCode::InvalidArgument,
          "train config: penalties must be non-negative");
  const bool use_val = X_val.rows() > 0;
  if (use_val) check_dim(model, X_val.cols());

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  MlpModel work = model;
  const Layout L{work.hidden(), work.input_dim()};
  Vec theta = pack(work);
  Vec m1 = Vec::Zero(theta.size()), m2 = Vec::Zero(theta.size()), grad;
  // Decoupled decay touches weights only.
  Vec decay_mask = Vec::Zero(theta.size());
  decay_mask.segment(L.w1(), L.h * L.d).setOnes();
  decay_mask.segment(L.w2(), L.h).setOnes();

  const Index n = X.rows();
  const Index batch = (cfg.batch_size <= 0 || cfg.batch_size >= n) ? n : cfg.batch_size;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(cfg.seed);

  TrainResult out;
  Vec best_theta = theta;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (batch == n) {
      unpack(theta, work);
      epoch_loss = objective(work, X, y, cfg.l1, grad);
      ++step;
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      theta -= cfg.learning_rate * ((m1 / c1).array() / ((m2 / c2).array().sqrt() + eps)).matrix() +
               cfg.learning_rate * cfg.weight_decay * decay_mask.cwiseProduct(theta);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (Index start = 0; start < n; start += batch) {
        const Index len = std::min(batch, n - start);
        std::vector<Index> idx(order.begin() + start, order.begin() + start + len);
        unpack(theta, work);
        epoch_loss += objective(work, take_rows(X, idx), take(y, idx), cfg.l1, grad) *
                      static_cast<double>(len) / static_cast<double>(n);
        ++step;
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        theta -= cfg.learning_rate * ((m1 / c1).array() / ((m2 / c2).array().sqrt() + eps)).matrix() +
                 cfg.learning_rate * cfg.weight_decay * decay_mask.cwiseProduct(theta);
      }
    }
    if (!std::isfinite(epoch_loss) || !theta.allFinite())
      fail(ErrorCode::Numeric, "training diverged at epoch " + std::to_string(epoch));
    out.loss_history.push_back(epoch_loss);
    out.epochs_run = epoch + 1;

    if (use_val) {
      unpack(theta, work);
      const double v = mse(work, X_val, y_val);
      out.validation_history.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_theta = theta;
        out.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (!use_val) {
    best_theta = theta;
    out.best_epoch = out.epochs_run - 1;
  }
  unpack(best_theta, work);
  out.model = std::move(work);
  return out;
}

TrainResult train(const MlpModel& model, const Dataset& data, const ScalerParams& scaler,
                  const TrainConfig& config) {
  require(!model.target.empty(), ErrorCode::InvalidArgument, "model has no target");
  const auto names = model.input_names.empty() ? data.input_names() : model.input_names;
  const Mat X = scaler.subset(names).scale_rows(data.columns(names));
  const Vec y = (data.column(model.target).array() - scaler.mins()(scaler.index_of(model.target))) /
                (scaler.maxs()(scaler.index_of(model.target)) - scaler.mins()(scaler.index_of(model.target)));
  const Carve carve = carve_validation(data.n_rows(), config.validation_fraction, config.seed);
  MlpModel init = model;
  init.input_names = names;
  init.scaler_ref = scaler.id();
  auto result = train_scaled(init, take_rows(X, carve.fit), take(y, carve.fit), take_rows(X, carve.val),
                             take(y, carve.val), config);
  result.model.target = model.target;
  result.model.input_names = names;
  result.model.scaler_ref = scaler.id();
  return result;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics compute_metrics(const Vec& actual, const Vec& predicted) {
  require(actual.size() > 0 && actual.size() == predicted.size(), ErrorCode::InvalidArgument,
          "metrics need equal-length non-empty series");
  const double ss_tot = (actual.array() - actual.mean()).square().sum();
  require(ss_tot > 0.0, ErrorCode::Numeric, "R^2 undefined for a zero-variance target");
  const double ss_res = (actual - predicted).squaredNorm();
  return {1.0 - ss_res / ss_tot, std::sqrt(ss_res / static_cast<double>(actual.size()))};
}

Vec predict_dataset(const MlpModel& model, const Dataset& data, const ScalerParams& scaler) {
  const Mat X = scaler.subset(model.input_names).scale_rows(data.columns(model.input_names));
  const Index k = scaler.index_of(model.target);
  const double lo = scaler.mins()(k), range = scaler.maxs()(k) - lo;
  return (model.forward_batch(X).array() * range + lo).matrix();
}

Metrics evaluate(const MlpModel& model, const Dataset& data, const ScalerParams& scaler) {
  return compute_metrics(data.column(model.target), predict_dataset(model, data, scaler));
}

HiddenSelection select_hidden(const std::string& target, const Dataset& data, const ScalerParams& scaler,
                              const std::vector<Index>& grid, Activation activation, const TrainConfig& config) {
  require(!grid.empty(), ErrorCode::InvalidArgument, "hidden-size grid is empty");
  const auto names = data.input_names();
  const Carve carve = carve_validation(data.n_rows(), config.validation_fraction, config.seed);
  require(!carve.val.empty(), ErrorCode::InvalidArgument, "hidden-size selection needs a validation fraction");
  const Dataset val = data.select_rows(carve.val, data.provenance() + "|val");

  HiddenSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (Index h : grid) {
    MlpModel m = init_mlp(static_cast<Index>(names.size()), h, activation, config.seed + static_cast<std::uint64_t>(h));
    m.target = target;
    m.input_names = names;
    auto result = train(m, data, scaler, config);
    const double rmse = evaluate(result.model, val, scaler).rmse;
    out.validation_rmse.emplace_back(h, rmse);
    if (rmse < best) {
      best = rmse;
      out.hidden = h;
      out.best = std::move(result);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conformal

ConformalCalibration conformal_from_scores(std::vector<double> scores, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must be in (0, 1)");
  const double n = static_cast<double>(scores.size());
  require(n + 1.0 >= 1.0 / alpha, ErrorCode::InvalidArgument,
          "calibration set too small for alpha (need n_cal + 1 >= 1/alpha)");
  for (double s : scores) require(std::isfinite(s) && s >= 0.0, ErrorCode::Numeric, "invalid nonconformity score");
  std::sort(scores.begin(), scores.end());
  const auto k = static_cast<std::size_t>(std::ceil((n + 1.0) * (1.0 - alpha) - 1e-9));
  ConformalCalibration out;
  out.alpha = alpha;
  out.quantile = scores[std::clamp<std::size_t>(k, 1, scores.size()) - 1];
  out.scores = std::move(scores);
  out.calibrated = true;
  return out;
}

ConformalCalibration calibrate_conformal(const MlpModel& model, const Dataset& calib, const ScalerParams& scaler,
                                         double alpha) {
  const Vec resid = (calib.column(model.target) - predict_dataset(model, calib, scaler)).cwiseAbs();
  return conformal_from_scores(to_std(resid), alpha);
}

Interval predict_interval(const MlpModel& model, const ConformalCalibration& calib, const ScalerParams& scaler,
                          const Vec& x) {
  require(calib.calibrated, ErrorCode::InvalidArgument, "model has no conformal calibration");
  const double point = scaler.unscale(model.target, model.forward(x));
  return {point - calib.quantile, point + calib.quantile};
}

double empirical_coverage(const MlpModel& model, const ConformalCalibration& calib, const Dataset& data,
                          const ScalerParams& scaler) {
  require(calib.calibrated, ErrorCode::InvalidArgument, "model has no conformal calibration");
  const Vec resid = (data.column(model.target) - predict_dataset(model, data, scaler)).cwiseAbs();
  return static_cast<double>((resid.array() <= calib.quantile).count()) / static_cast<double>(resid.size());
}

// ---------------------------------------------------------------------------

const MlpModel& SurrogateSet::model(Target t) const {
  switch (t) {
    case Target::Power: return power;
    case Target::TE: return te;
    case Target::THR: return thr;
  }
  return power;
}

double SurrogateSet::predict(Target t, const Vec& x_scaled) const {
  const auto& m = model(t);
  return scaler.unscale(m.target, m.forward(x_scaled));
}

Vec SurrogateSet::scale_inputs(const Vec& x_eng) const { return scaler.subset(input_names()).scale(x_eng); }

Vec SurrogateSet::unscale_inputs(const Vec& x_scaled) const {
  return scaler.subset(input_names()).unscale(x_scaled);
}

}  // namespace madopt
