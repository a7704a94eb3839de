#pragma once

#include "madopt/common.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace madopt {

/// Ellipsoid radius in Mahalanobis units.
class Tolerance {
 public:
  explicit Tolerance(double tau);
  double value() const { return tau_; }

 private:
  double tau_;
};

struct Containment {
  bool inside = false;
  double margin = 0.0;  // tau^2 - d^2
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Multivariate operating envelope over scaled inputs: mean, sample covariance
/// and a Cholesky factor of (sigma + ridge I).
class EllipsoidModel {
 public:
  /// ridge < 0 selects the default 1e-8 * trace(sigma) / p.
  EllipsoidModel(Vec mu, Mat sigma, double ridge, std::vector<std::string> names);

  const Vec& mu() const { return mu_; }
  const Mat& sigma() const { return sigma_; }
  double ridge() const { return ridge_; }
  const std::vector<std::string>& names() const { return names_; }
  Index dim() const { return mu_.size(); }
  Index index_of(std::string_view name) const;

  double distance_sq(const Vec& x) const;
  double distance(const Vec& x) const;
  /// Gradient of d^2: 2 (sigma + ridge I)^-1 (x - mu).
  Vec distance_sq_grad(const Vec& x) const;
  Containment contains(const Vec& x, Tolerance tau) const;

  /// Mahalanobis distance of x's (a, b) coordinates under the pairwise
  /// marginal (2x2 sub-covariance).
  double pair_distance(std::string_view a, std::string_view b, const Vec& x) const;
  /// Closed polyline (first point repeated at the end) of the tau-level
  /// marginal ellipse of the pair in its scaled plane.
  std::vector<Point2> ellipse_2d(std::string_view a, std::string_view b, Tolerance tau,
                                 int points = 256) const;

 private:
  Mat pair_cov(Index i, Index j) const;

  Vec mu_;
  Mat sigma_;
  double ridge_;
  std::vector<std::string> names_;
  Eigen::LLT<Mat> llt_;
};

/// mu = column means, sigma = sample covariance (N - 1). Needs N > p.
EllipsoidModel fit_ellipsoid(const Mat& X, double ridge, std::vector<std::string> names);
EllipsoidModel fit_ellipsoid(const Mat& X, double ridge = -1.0);

void write_polyline_csv(const std::string& path, const std::vector<Point2>& pts,
                        std::string_view x_name = "x", std::string_view y_name = "y");

}  // namespace madopt
