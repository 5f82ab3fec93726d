#pragma once

// Model-comparison criteria on the deviance scale (lower is better), built
// from per-draw pointwise log-likelihoods. Deviance excludes the prior.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/errors.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/samplers.hpp"

namespace zvgarch {

/// Pareto tail shape above which importance-sampling LOO is unreliable.
inline constexpr double kParetoKThreshold = 0.7;

struct CriteriaReport {
  double dic = 0.0, eaic = 0.0, ebic = 0.0, waic = 0.0, looic = 0.0;
  double mean_deviance = 0.0;       // D bar
  double deviance_at_mean = 0.0;    // D(theta bar)
  double p_dic = 0.0, p_waic = 0.0, p_loo = 0.0;
  double lppd = 0.0, elpd_loo = 0.0;
  std::vector<double> pareto_k;     // one per observation
  double max_pareto_k = 0.0;
  std::size_t n_high_k = 0;         // observations with k > kParetoKThreshold
  std::size_t k = 0, n = 0;
};

/// N x n matrix of log p(y_t | F_{t-1}, theta^(l)). Each row is checked
/// against the log-likelihood implied by the stored log posterior.
inline Eigen::MatrixXd pointwise_loglik(const ChainSample& chain, const GjrPosterior& post) {
  const auto& x = post.data();
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd out(chain.draws.rows(), n);
  for (Eigen::Index l = 0; l < chain.draws.rows(); ++l) {
    const Eigen::VectorXd th = chain.draws.row(l).transpose();
    const auto p = post.natural(th);
    const auto ll = pointwise_log_likelihood(x, p, post.options());
    out.row(l) = Eigen::Map<const Eigen::RowVectorXd>(ll.data(), n);
    if (chain.log_posterior.size() == chain.draws.rows()) {
      const double implied = chain.log_posterior[l] - log_prior(p, post.prior(), post.options()) -
                             log_jacobian(th, post.kind());
      const double sum = out.row(l).sum();
      if (std::abs(sum - implied) > 1e-8 * std::max(1.0, std::abs(sum)))
        throw NumericalError("pointwise log-likelihood of draw " + std::to_string(l) +
                             " does not sum to the stored value (" + std::to_string(sum) + " vs " +
                             std::to_string(implied) + ")");
    }
  }
  return out;
}

namespace detail {

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Generalized Pareto shape k fitted to positive exceedances by the
/// profile-likelihood grid estimator of Zhang and Stephens, with the usual
/// weakly informative shrinkage toward 0.5.
inline double gpd_shape(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 5) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  if (!(x.back() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double prior = 3.0;
  const std::size_t m = 30 + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double xstar = x[static_cast<std::size_t>(std::floor(n / 4.0 + 0.5)) - 1];
  std::vector<double> theta(m), lik(m);
  for (std::size_t j = 0; j < m; ++j) {
    theta[j] = 1.0 / x.back() + (1.0 - std::sqrt(m / (j + 0.5))) / prior / xstar;
    double kk = 0.0;
    for (double v : x) kk += std::log1p(-theta[j] * v);
    kk /= static_cast<double>(n);
    lik[j] = static_cast<double>(n) * (std::log(-theta[j] / kk) - kk - 1.0);
  }
  const double lmax = *std::max_element(lik.begin(), lik.end());
  double wsum = 0.0, theta_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::isfinite(lik[j]) ? std::exp(lik[j] - lmax) : 0.0;
    wsum += w;
    theta_hat += w * theta[j];
  }
  theta_hat /= wsum;
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(n);
  const double a = 10.0;
  return k * static_cast<double>(n) / (n + a) + a * 0.5 / (n + a);
}

/// Pareto k of the upper tail of importance ratios given on the log scale.
inline double pareto_k_of_log_ratios(const Eigen::VectorXd& log_ratios) {
  const auto s = static_cast<std::size_t>(log_ratios.size());
  const auto tail = static_cast<std::size_t>(
      std::ceil(std::min(0.2 * static_cast<double>(s), 3.0 * std::sqrt(static_cast<double>(s)))));
  if (tail < 5 || tail + 1 > s) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lw(log_ratios.data(), log_ratios.data() + s);
  const double m = *std::max_element(lw.begin(), lw.end());
  for (auto& v : lw) v -= m;
  std::sort(lw.begin(), lw.end());
  const double cutoff = std::exp(lw[s - tail - 1]);
  std::vector<double> exceed(tail);
  for (std::size_t i = 0; i < tail; ++i) exceed[i] = std::exp(lw[s - tail + i]) - cutoff;
  return gpd_shape(std::move(exceed));
}

/// All criteria from the pointwise matrix, parameter count k, and the
/// log-likelihood at the posterior mean.
inline CriteriaReport compute_criteria(const Eigen::MatrixXd& pointwise, std::size_t k,
                                       double log_lik_at_mean) {
  const Eigen::Index n_draws = pointwise.rows(), n = pointwise.cols();
  if (n_draws < 2 || n < 1) throw ConfigError("criteria need at least two draws and one observation");
  if (!pointwise.allFinite()) throw NumericalError("non-finite pointwise log-likelihood");
  CriteriaReport r;
  r.k = k;
  r.n = static_cast<std::size_t>(n);
  const double nd = static_cast<double>(n_draws);

  const Eigen::VectorXd row_sums = pointwise.rowwise().sum();
  r.mean_deviance = -2.0 * row_sums.mean();
  r.deviance_at_mean = -2.0 * log_lik_at_mean;
  r.p_dic = r.mean_deviance - r.deviance_at_mean;
  r.dic = r.mean_deviance + r.p_dic;
  r.eaic = r.mean_deviance + 2.0 * static_cast<double>(k);
  r.ebic = r.mean_deviance + static_cast<double>(k) * std::log(static_cast<double>(n));

  const double cap_factor = std::pow(nd, 0.75);
  r.pareto_k.resize(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::VectorXd col = pointwise.col(t);
    r.lppd += detail::log_sum_exp(col) - std::log(nd);
    const double mean = col.mean();
    r.p_waic += (col.array() - mean).square().sum() / (nd - 1.0);

    // Truncated importance sampling: ratios 1/p_t, capped at N^{3/4} times their mean.
    const Eigen::VectorXd log_ratio = -col;
    const double log_mean_ratio = detail::log_sum_exp(log_ratio) - std::log(nd);
    const double log_cap = log_mean_ratio + std::log(cap_factor);
    const Eigen::VectorXd log_w = log_ratio.cwiseMin(log_cap);
    r.elpd_loo += detail::log_sum_exp(log_w + col) - detail::log_sum_exp(log_w);
    const double kt = pareto_k_of_log_ratios(log_ratio);
    r.pareto_k[static_cast<std::size_t>(t)] = kt;
    if (kt > kParetoKThreshold) ++r.n_high_k;
    if (std::isfinite(kt)) r.max_pareto_k = std::max(r.max_pareto_k, kt);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  r.p_loo = r.lppd - r.elpd_loo;
  r.looic = -2.0 * r.elpd_loo;
  return r;
}

/// Criteria for a GJR-GARCH chain; theta bar is the natural-space image of
/// the mean of the unconstrained draws.
inline CriteriaReport criteria_report(const ChainSample& chain, const GjrPosterior& post) {
  const Eigen::MatrixXd pw = pointwise_loglik(chain, post);
  const Eigen::VectorXd mean = chain.draws.colwise().mean().transpose();
  const auto p_bar = post.natural(mean);
  const double ll_bar = log_likelihood(post.data(), p_bar, post.options());
  return compute_criteria(pw, parameter_count(post.kind()), ll_bar);
}

}  // namespace zvgarch
