#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/model.hpp"
#include "zvgarch/simulate.hpp"

namespace zvgarch::testing {

/// The simulation-study truth: omega=0.05, alpha=0.05, phi=0.1, beta=0.85, mu=0.
inline GjrParams study_truth(ErrorDist d = Normal{}) { return {0.0, 0.05, 0.05, 0.10, 0.85, d}; }

/// A random stationary parameter vector with plausible magnitudes.
template <class Rng>
GjrParams random_params(DistKind k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GjrParams p;
  p.mu = -0.2 + 0.4 * u(rng);
  p.omega = 0.01 + 0.4 * u(rng);
  p.alpha = 0.01 + 0.19 * u(rng);
  p.phi = 0.01 + 0.29 * u(rng);
  p.beta = 0.3 + (0.97 - p.alpha - 0.5 * p.phi - 0.3) * u(rng);
  switch (k) {
    case DistKind::normal: p.dist = Normal{}; break;
    case DistKind::student_t: p.dist = StudentT{3.0 + 27.0 * u(rng)}; break;
    case DistKind::ged: p.dist = Ged{0.6 + 2.4 * u(rng)}; break;
    case DistKind::generalized_t: {
      const double eta = 1.1 + 2.9 * u(rng);
      p.dist = GeneralizedT{eta, 2.0 / eta + 0.5 + 15.0 * u(rng)};
      break;
    }
  }
  return p;
}

/// max_j |g_j - fd_j| / max(1, |g_j|, |fd_j|) with central differences.
template <class F>
double max_gradient_error(const F& f, const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                          double step = 1e-5) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd up = x, dn = x;
    up[j] += step;
    dn[j] -= step;
    const double fd = (f(up) - f(dn)) / (2.0 * step);
    const double scale = std::max({1.0, std::abs(fd), std::abs(grad[j])});
    worst = std::max(worst, std::abs(fd - grad[j]) / scale);
  }
  return worst;
}

}  // namespace zvgarch::testing
