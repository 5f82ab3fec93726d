#pragma once

// Hamiltonian Monte Carlo and pilot-tuned Random-Walk Metropolis on R^d.
//
// Targets are any type exposing
//   std::size_t dim() const;
//   double log_density(const Eigen::VectorXd&) const;
//   double log_density_and_gradient(const Eigen::VectorXd&, Eigen::VectorXd&) const;  (HMC)
// with log_density returning -inf outside the support.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/errors.hpp"

namespace zvgarch {

template <class T>
concept LogDensity = requires(const T& t, const Eigen::VectorXd& x) {
  { t.dim() } -> std::convertible_to<std::size_t>;
  { t.log_density(x) } -> std::convertible_to<double>;
};

template <class T>
concept DifferentiableLogDensity =
    LogDensity<T> && requires(const T& t, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      { t.log_density_and_gradient(x, g) } -> std::convertible_to<double>;
    };

struct HmcConfig {
  double epsilon = 0.05;
  int leapfrog_steps = 20;
  /// Mass matrix M; an empty matrix means the identity.
  Eigen::MatrixXd mass;
  std::size_t n_draws = 1000;
  std::size_t n_burnin = 1000;
  std::uint64_t seed = 1;
};

struct RwmConfig {
  /// Pilot proposal covariance is epsilon_pilot * I.
  double epsilon_pilot = 1e-3;
  std::size_t pilot_draws = 2000;
  /// Initial multiplier of the pilot covariance; adapted during burn-in.
  double epsilon_scale = 0.5;
  double target_acceptance = 0.8;
  std::size_t n_draws = 1000;
  std::size_t n_burnin = 1000;
  std::uint64_t seed = 1;
};

/// Retained draws in unconstrained space. Row l of `gradients` is the
/// log-posterior gradient at row l of `draws`.
struct ChainSample {
  Eigen::MatrixXd draws;
  Eigen::VectorXd log_posterior;
  Eigen::MatrixXd gradients;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  std::string sampler;
  double epsilon = 0.0;
  int leapfrog_steps = 0;
  std::size_t n_burnin = 0;
  std::size_t divergences = 0;
  /// RWM: proposal covariance used by the main chain (epsilon * pilot covariance).
  Eigen::MatrixXd proposal_covariance;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws.cols()); }
  bool has_gradients() const { return gradients.rows() == draws.rows() && gradients.size() > 0; }
};

// ---------------------------------------------------------------------------
// Leapfrog integrator

struct PhasePoint {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  double log_density = 0.0;
  /// Gradient of log density at `position`.
  Eigen::VectorXd gradient;
};

struct LeapfrogResult {
  PhasePoint end;
  bool divergent = false;
};

/// L leapfrog steps of size eps for H = -log pi(theta) + r' M^{-1} r / 2.
/// `log_density_grad(theta, grad)` returns log pi(theta) and fills grad.
/// A non-finite density or gradient anywhere along the path marks the
/// trajectory divergent.
template <class GradFn>
LeapfrogResult leapfrog(GradFn&& log_density_grad, PhasePoint start, double eps, int steps,
                        const Eigen::MatrixXd& mass_inverse = {}) {
  const bool unit = mass_inverse.size() == 0;
  PhasePoint& s = start;
  for (int i = 0; i < steps; ++i) {
    s.momentum.noalias() += 0.5 * eps * s.gradient;
    if (unit) s.position.noalias() += eps * s.momentum;
    else s.position.noalias() += eps * (mass_inverse * s.momentum);
    s.log_density = log_density_grad(s.position, s.gradient);
    if (!std::isfinite(s.log_density) || !s.gradient.allFinite()) return {std::move(start), true};
    s.momentum.noalias() += 0.5 * eps * s.gradient;
  }
  return {std::move(start), false};
}

namespace detail {

struct MassMatrix {
  Eigen::MatrixXd inverse;     // empty for identity
  Eigen::MatrixXd chol_lower;  // empty for identity

  static MassMatrix make(const Eigen::MatrixXd& m, std::size_t d) {
    if (m.size() == 0) return {};
    if (m.rows() != static_cast<Eigen::Index>(d) || m.cols() != m.rows())
      throw ConfigError("mass matrix has wrong dimensions");
    if (!m.isApprox(m.transpose(), 1e-12)) throw ConfigError("mass matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw ConfigError("mass matrix must be positive definite");
    return {llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())), llt.matrixL()};
  }

  double kinetic(const Eigen::VectorXd& r) const {
    return 0.5 * (inverse.size() == 0 ? r.squaredNorm() : r.dot(inverse * r));
  }

  template <class Rng>
  Eigen::VectorXd draw_momentum(Eigen::Index d, Rng& rng) const {
    std::normal_distribution<double> z;
    Eigen::VectorXd r(d);
    for (auto& v : r) v = z(rng);
    return chol_lower.size() == 0 ? r : Eigen::VectorXd(chol_lower * r);
  }
};

template <DifferentiableLogDensity Target>
auto gradient_oracle(const Target& target) {
  return [&target](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return target.log_density_and_gradient(x, g);
  };
}

struct HmcStep {
  bool accepted = false;
  bool divergent = false;
  double accept_prob = 0.0;
};

/// One HMC transition from `current` (position, log density and gradient set).
template <DifferentiableLogDensity Target, class Rng>
HmcStep hmc_transition(const Target& target, PhasePoint& current, double eps, int steps,
                       const MassMatrix& mass, Rng& rng) {
  current.momentum = mass.draw_momentum(current.position.size(), rng);
  const double h0 = -current.log_density + mass.kinetic(current.momentum);
  auto result = leapfrog(gradient_oracle(target), current, eps, steps, mass.inverse);
  std::uniform_real_distribution<double> unif;
  const double u = unif(rng);
  if (result.divergent) return {false, true, 0.0};
  const double h1 = -result.end.log_density + mass.kinetic(result.end.momentum);
  const double log_ratio = h0 - h1;
  const double prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
  if (u < prob) {
    current = std::move(result.end);
    return {true, false, prob};
  }
  return {false, false, prob};
}

template <DifferentiableLogDensity Target>
PhasePoint start_point(const Target& target, const Eigen::VectorXd& init) {
  if (static_cast<std::size_t>(init.size()) != target.dim())
    throw ConfigError("initial point has wrong dimension");
  PhasePoint p{init, Eigen::VectorXd::Zero(init.size()), 0.0, {}};
  p.log_density = target.log_density_and_gradient(init, p.gradient);
  if (!std::isfinite(p.log_density) || !p.gradient.allFinite())
    throw NumericalError("initial point has non-finite log posterior or gradient");
  return p;
}

inline void check_acceptance(ChainSample& chain) {
  if (chain.acceptance_rate < 0.05 || chain.acceptance_rate > 0.995)
    chain.warnings.push_back("acceptance rate " + std::to_string(chain.acceptance_rate) +
                             " outside [0.05, 0.995]; step size likely mis-tuned");
}

}  // namespace detail

/// Plain HMC: full momentum refresh from N(0, M) each iteration, L leapfrog
/// steps, Metropolis correction.
template <DifferentiableLogDensity Target>
ChainSample hmc_sample(const Target& target, const HmcConfig& cfg, const Eigen::VectorXd& init) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("HMC step size must be positive");
  if (cfg.leapfrog_steps < 1) throw ConfigError("HMC needs at least one leapfrog step");
  const auto d = static_cast<Eigen::Index>(target.dim());
  const auto mass = detail::MassMatrix::make(cfg.mass, target.dim());
  std::mt19937_64 rng(cfg.seed);
  auto state = detail::start_point(target, init);

  ChainSample chain;
  chain.sampler = "hmc";
  chain.seed = cfg.seed;
  chain.epsilon = cfg.epsilon;
  chain.leapfrog_steps = cfg.leapfrog_steps;
  chain.n_burnin = cfg.n_burnin;
  const auto n = static_cast<Eigen::Index>(cfg.n_draws);
  chain.draws.resize(n, d);
  chain.gradients.resize(n, d);
  chain.log_posterior.resize(n);

  std::size_t accepted = 0;
  for (std::size_t it = 0; it < cfg.n_burnin + cfg.n_draws; ++it) {
    const auto step =
        detail::hmc_transition(target, state, cfg.epsilon, cfg.leapfrog_steps, mass, rng);
    if (it < cfg.n_burnin) continue;
    const auto row = static_cast<Eigen::Index>(it - cfg.n_burnin);
    accepted += step.accepted;
    chain.divergences += step.divergent;
    chain.draws.row(row) = state.position.transpose();
    chain.gradients.row(row) = state.gradient.transpose();
    chain.log_posterior[row] = state.log_density;
  }
  chain.acceptance_rate =
      cfg.n_draws > 0 ? static_cast<double>(accepted) / static_cast<double>(cfg.n_draws) : 0.0;
  detail::check_acceptance(chain);
  return chain;
}

/// Mean Metropolis acceptance probability over `iterations` HMC transitions
/// started at `start`; `start` is advanced to the final state.
template <DifferentiableLogDensity Target, class Rng>
double measure_acceptance(const Target& target, Eigen::VectorXd& start, double eps, int steps,
                          const Eigen::MatrixXd& mass_matrix, std::size_t iterations, Rng& rng) {
  const auto mass = detail::MassMatrix::make(mass_matrix, target.dim());
  auto state = detail::start_point(target, start);
  double total = 0.0;
  for (std::size_t i = 0; i < iterations; ++i)
    total += detail::hmc_transition(target, state, eps, steps, mass, rng).accept_prob;
  start = state.position;
  return iterations > 0 ? total / static_cast<double>(iterations) : 0.0;
}

struct AcceptanceWindow {
  double low = 0.7;
  double high = 0.9;
  bool contains(double a) const { return a >= low && a <= high; }
};

struct TuneOptions {
  std::size_t trial_iterations = 100;
  int max_rounds = 30;
};

struct TuneResult {
  double epsilon = 0.0;
  double acceptance = 0.0;
  bool converged = false;
  int rounds = 0;
  /// Last position of the trial chains, a good starting point for sampling.
  Eigen::VectorXd position;
  std::vector<std::string> warnings;
};

/// Doubling/halving search on the HMC step size, then geometric bisection once
/// the window is bracketed. Trial chains continue from one another so the
/// search also walks the start point into the bulk of the target.
template <DifferentiableLogDensity Target>
TuneResult tune_epsilon(const Target& target, const HmcConfig& skeleton, AcceptanceWindow window,
                        const Eigen::VectorXd& init, TuneOptions opt = {}) {
  if (!(skeleton.epsilon > 0.0)) throw ConfigError("initial step size must be positive");
  std::mt19937_64 rng(skeleton.seed ^ 0x5bd1e995ULL);
  TuneResult res;
  res.position = init;
  double eps = skeleton.epsilon;
  double too_small = 0.0;  // largest eps seen with acceptance above the window
  double too_large = 0.0;  // smallest eps seen with acceptance below the window
  double best_eps = eps, best_gap = std::numeric_limits<double>::infinity();
  double best_acc = 0.0;
  for (int round = 1; round <= opt.max_rounds; ++round) {
    res.rounds = round;
    const double acc = measure_acceptance(target, res.position, eps, skeleton.leapfrog_steps,
                                          skeleton.mass, opt.trial_iterations, rng);
    if (window.contains(acc)) {
      res.epsilon = eps;
      res.acceptance = acc;
      res.converged = true;
      return res;
    }
    const double gap = acc > window.high ? acc - window.high : window.low - acc;
    if (gap < best_gap) {
      best_gap = gap;
      best_eps = eps;
      best_acc = acc;
    }
    if (acc > window.high) too_small = std::max(too_small, eps);
    else too_large = too_large > 0.0 ? std::min(too_large, eps) : eps;
    // A collapsed or inverted bracket means an earlier verdict was made far
    // from the bulk of the target; restart the bracket from here.
    if (too_small > 0.0 && too_large > 0.0 && too_large / too_small < 1.05) {
      if (acc > window.high) too_large = 0.0;
      else too_small = 0.0;
    }
    if (too_small > 0.0 && too_large > 0.0) eps = std::sqrt(too_small * too_large);
    else if (too_small > 0.0) eps = 2.0 * eps;
    else eps = 0.5 * eps;
  }
  res.epsilon = best_eps;
  res.acceptance = best_acc;
  res.warnings.push_back("step-size search hit its round cap; using best-effort epsilon " +
                         std::to_string(best_eps));
  return res;
}

// ---------------------------------------------------------------------------
// Random-Walk Metropolis

namespace detail {

/// Sample covariance of the rows of `x`.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean;
  return (c.transpose() * c) / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
}

}  // namespace detail

/// Three phases: a pilot chain with proposal covariance epsilon_pilot * I;
/// the sample covariance M of the pilot draws; the main chain with proposal
/// N(current, s M), s adapted toward target_acceptance during burn-in and
/// frozen afterwards. Gradients are evaluated at retained draws when the
/// target provides them.
template <LogDensity Target>
ChainSample rwm_sample(const Target& target, const RwmConfig& cfg, const Eigen::VectorXd& init) {
  if (!(cfg.epsilon_pilot > 0.0) || !(cfg.epsilon_scale > 0.0))
    throw ConfigError("RWM scales must be positive");
  if (!(cfg.target_acceptance > 0.0 && cfg.target_acceptance < 1.0))
    throw ConfigError("RWM target acceptance must lie in (0, 1)");
  if (cfg.pilot_draws < 4) throw ConfigError("RWM pilot needs at least 4 draws");
  const auto d = static_cast<Eigen::Index>(target.dim());
  if (init.size() != d) throw ConfigError("initial point has wrong dimension");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif;

  Eigen::VectorXd x = init;
  double lp = target.log_density(x);
  if (!std::isfinite(lp)) throw NumericalError("initial point has non-finite log posterior");

  auto step = [&](const Eigen::MatrixXd& chol) {
    Eigen::VectorXd e(d);
    for (auto& v : e) v = z(rng);
    const Eigen::VectorXd prop = x + chol * e;
    const double lp_prop = target.log_density(prop);
    const double log_ratio = lp_prop - lp;
    const double prob = std::isfinite(lp_prop) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    const bool accept = unif(rng) < prob;
    if (accept) {
      x = prop;
      lp = lp_prop;
    }
    return std::pair{accept, prob};
  };

  ChainSample chain;
  chain.sampler = "rwm";
  chain.seed = cfg.seed;
  chain.n_burnin = cfg.n_burnin;

  // Phase 1: pilot.
  const Eigen::MatrixXd pilot_chol =
      std::sqrt(cfg.epsilon_pilot) * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd pilot(static_cast<Eigen::Index>(cfg.pilot_draws), d);
  for (Eigen::Index i = 0; i < pilot.rows(); ++i) {
    step(pilot_chol);
    pilot.row(i) = x.transpose();
  }

  // Phase 2: pilot covariance.
  Eigen::MatrixXd cov = detail::sample_covariance(pilot);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const bool degenerate = (cov.diagonal().array() <= 0.0).any();
  if (degenerate || llt.info() != Eigen::Success) {
    Eigen::VectorXd diag = cov.diagonal();
    for (auto& v : diag)
      if (!(v > 0.0)) v = cfg.epsilon_pilot;
    cov = diag.asDiagonal();
    chain.warnings.emplace_back(
        "pilot covariance is singular; falling back to the diagonal of pilot variances");
  }
  const Eigen::MatrixXd cov_chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();

  // Phase 3: main chain, Robbins-Monro adaptation of log s during burn-in.
  double log_scale = std::log(cfg.epsilon_scale);
  for (std::size_t it = 0; it < cfg.n_burnin; ++it) {
    const auto [acc, prob] = step(std::exp(0.5 * log_scale) * cov_chol);
    (void)acc;
    log_scale += (prob - cfg.target_acceptance) / std::pow(static_cast<double>(it) + 1.0, 0.6);
    log_scale = std::clamp(log_scale, -30.0, 10.0);
  }
  const double scale = std::exp(log_scale);
  const Eigen::MatrixXd main_chol = std::sqrt(scale) * cov_chol;
  chain.epsilon = scale;
  chain.proposal_covariance = scale * cov;

  const auto n = static_cast<Eigen::Index>(cfg.n_draws);
  chain.draws.resize(n, d);
  chain.log_posterior.resize(n);
  constexpr bool differentiable = DifferentiableLogDensity<Target>;
  if constexpr (differentiable) chain.gradients.resize(n, d);
  Eigen::VectorXd grad;
  bool grad_stale = true;
  std::size_t accepted = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool acc = step(main_chol).first;
    accepted += acc;
    chain.draws.row(i) = x.transpose();
    chain.log_posterior[i] = lp;
    if constexpr (differentiable) {
      if (acc || grad_stale) {
        target.log_density_and_gradient(x, grad);
        grad_stale = false;
      }
      chain.gradients.row(i) = grad.transpose();
    }
  }
  chain.acceptance_rate = n > 0 ? static_cast<double>(accepted) / static_cast<double>(n) : 0.0;
  detail::check_acceptance(chain);
  return chain;
}

}  // namespace zvgarch
