#include "madopt/mahalanobis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace madopt {

Tolerance::Tolerance(double tau) : tau_(tau) {
  require(std::isfinite(tau) && tau > 0.0, ErrorCode::InvalidArgument, "tolerance tau must be > 0");
}

EllipsoidModel::EllipsoidModel(Vec mu, Mat sigma, double ridge, std::vector<std::string> names)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), ridge_(ridge), names_(std::move(names)) {
  const Index p = mu_.size();
  require(p >= 1 && sigma_.rows() == p && sigma_.cols() == p, ErrorCode::InvalidArgument,
          "ellipsoid: mu/sigma shape mismatch");
  require(mu_.allFinite() && sigma_.allFinite(), ErrorCode::Numeric, "ellipsoid: non-finite parameters");
  require((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + sigma_.cwiseAbs().maxCoeff()),
          ErrorCode::InvalidArgument, "ellipsoid: sigma is not symmetric");
  sigma_ = 0.5 * (sigma_ + sigma_.transpose());
  if (names_.empty())
    for (Index j = 0; j < p; ++j) names_.push_back("x" + std::to_string(j));
  require(static_cast<Index>(names_.size()) == p, ErrorCode::InvalidArgument, "ellipsoid: names size mismatch");
  if (ridge_ < 0.0) ridge_ = 1e-8 * sigma_.trace() / static_cast<double>(p);
  Mat reg = sigma_;
  reg.diagonal().array() += ridge_;
  llt_.compute(reg);
  if (llt_.info() != Eigen::Success || !llt_.matrixL().toDenseMatrix().diagonal().allFinite() ||
      llt_.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
    fail(ErrorCode::Numeric, "covariance is not positive definite with ridge " + std::to_string(ridge_) +
                                 "; retry with a larger ridge");
  }
}

Index EllipsoidModel::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j)
    if (names_[j] == name) return static_cast<Index>(j);
  fail(ErrorCode::InvalidArgument, "ellipsoid has no variable '" + std::string(name) + "'");
}

double EllipsoidModel::distance_sq(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::InvalidArgument, "distance: dimension mismatch");
  const Vec z = llt_.matrixL().solve(x - mu_);
  return z.squaredNorm();
}

double EllipsoidModel::distance(const Vec& x) const { return std::sqrt(distance_sq(x)); }

Vec EllipsoidModel::distance_sq_grad(const Vec& x) const {
  require(x.size() == dim(), ErrorCode::InvalidArgument, "distance gradient: dimension mismatch");
  return 2.0 * llt_.solve(x - mu_);
}

Containment EllipsoidModel::contains(const Vec& x, Tolerance tau) const {
  const double margin = tau.value() * tau.value() - distance_sq(x);
  return {margin >= -1e-12, margin};
}

Mat EllipsoidModel::pair_cov(Index i, Index j) const {
  Mat s(2, 2);
  s << sigma_(i, i) + ridge_, sigma_(i, j), sigma_(j, i), sigma_(j, j) + ridge_;
  return s;
}

double EllipsoidModel::pair_distance(std::string_view a, std::string_view b, const Vec& x) const {
  require(x.size() == dim(), ErrorCode::InvalidArgument, "pair distance: dimension mismatch");
  const Index i = index_of(a), j = index_of(b);
  const Eigen::Vector2d dx(x(i) - mu_(i), x(j) - mu_(j));
  const Eigen::Matrix2d s = pair_cov(i, j);
  return std::sqrt(dx.dot(s.llt().solve(dx)));
}

std::vector<Point2> EllipsoidModel::ellipse_2d(std::string_view a, std::string_view b, Tolerance tau,
                                               int points) const {
  require(points >= 3, ErrorCode::InvalidArgument, "ellipse needs at least 3 points");
  const Index i = index_of(a), j = index_of(b);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(Eigen::Matrix2d(pair_cov(i, j)));
  const Eigen::Matrix2d axes = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(points) + 1);
  for (int k = 0; k < points; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
    const Eigen::Vector2d p = tau.value() * axes * Eigen::Vector2d(std::cos(t), std::sin(t));
    out.push_back({mu_(i) + p(0), mu_(j) + p(1)});
  }
  out.push_back(out.front());
  return out;
}

EllipsoidModel fit_ellipsoid(const Mat& X, double ridge, std::vector<std::string> names) {
  const Index n = X.rows(), p = X.cols();
  require(n > p, ErrorCode::InvalidArgument,
          "ellipsoid fit needs more rows (" + std::to_string(n) + ") than variables (" + std::to_string(p) + ")");
  require(X.allFinite(), ErrorCode::Numeric, "ellipsoid fit: non-finite data");
  const Vec mu = X.colwise().mean().transpose();
  const Mat centered = X.rowwise() - mu.transpose();
  const Mat sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return EllipsoidModel(mu, sigma, ridge, std::move(names));
}

EllipsoidModel fit_ellipsoid(const Mat& X, double ridge) { return fit_ellipsoid(X, ridge, {}); }

void write_polyline_csv(const std::string& path, const std::vector<Point2>& pts, std::string_view x_name,
                        std::string_view y_name) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot write '" + path + "'");
  out << x_name << ',' << y_name << '\n' << std::setprecision(17);
  for (const auto& p : pts) out << p.x << ',' << p.y << '\n';
}

}  // namespace madopt
