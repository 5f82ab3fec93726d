#pragma once

// Closed-form targets used for calibration and by the demo.

#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Dense>

#include "zvgarch/errors.hpp"

namespace zvgarch {

/// Multivariate normal N(mean, cov) as a differentiable log density.
class GaussianTarget {
 public:
  GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
      : mean_(std::move(mean)), cov_(cov), precision_(cov.inverse()) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (cov.rows() != mean_.size() || llt.info() != Eigen::Success)
      throw DomainError("Gaussian target needs a positive definite covariance");
    const Eigen::MatrixXd l = llt.matrixL();
    log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) -
                l.diagonal().array().log().sum();
  }

  static GaussianTarget standard(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  double log_density(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd c = x - mean_;
    return log_norm_ - 0.5 * c.dot(precision_ * c);
  }

  double log_density_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const Eigen::VectorXd c = x - mean_;
    grad = -(precision_ * c);
    return log_norm_ + 0.5 * c.dot(grad);
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;
};

}  // namespace zvgarch
