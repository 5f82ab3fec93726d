#pragma once

// Case-deletion influence: Kullback-Leibler divergence between the full
// posterior and the posterior without observation i, estimated from draws.
// Indices are zero-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/errors.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/samplers.hpp"

namespace zvgarch {

/// Deleting y_i removes its likelihood term and replaces h_{i+1} by
/// omega + (alpha + phi/2 + beta) h_i, the variance with the sign indicator
/// of y_i replaced by its expectation 1/2. Later terms are unchanged.
/// Returns log delta_i for every i.
inline std::vector<double> loo_log_perturbations(std::span<const double> x, const GjrParams& p,
                                                 const ModelOptions& opt = {}) {
  const auto y = demean(x, p.mu);
  const auto h = variance_recursion(y, p, opt);
  const StandardizedDensity dens(p.dist);
  const std::size_t n = y.size();
  auto term = [&](std::size_t t, double ht) { return dens.log_f(y[t] / std::sqrt(ht)) - 0.5 * std::log(ht); };
  std::vector<double> ll(n);
  for (std::size_t t = 0; t < n; ++t) ll[t] = term(t, h[t]);
  const double persistence = p.persistence();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = -ll[i];
    if (i + 1 < n) out[i] += term(i + 1, p.omega + persistence * h[i]) - ll[i + 1];
  }
  return out;
}

inline double loo_log_perturbation(std::size_t i, std::span<const double> x, const GjrParams& p,
                                   const ModelOptions& opt = {}) {
  if (i >= x.size())
    throw ConfigError("observation index " + std::to_string(i) + " out of range [0, " +
                      std::to_string(x.size()) + ")");
  return loo_log_perturbations(x, p, opt)[i];
}

/// N x n matrix of log delta_i at every draw of the chain.
inline Eigen::MatrixXd log_perturbation_matrix(const ChainSample& chain, const GjrPosterior& post) {
  const auto& x = post.data();
  Eigen::MatrixXd out(chain.draws.rows(), static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index l = 0; l < chain.draws.rows(); ++l) {
    const auto p = post.natural(chain.draws.row(l).transpose());
    const auto row = loo_log_perturbations(x, p, post.options());
    out.row(l) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  }
  return out;
}

struct InfluenceReport {
  std::vector<double> kl;           // KL estimate per observation
  std::vector<double> proportion;   // share of draws where the observation is the most influential
  std::vector<bool> flagged;        // perturbation not computable at some draw
  std::size_t argmax_kl = 0;
  std::size_t argmax_proportion = 0;
};

namespace detail {

/// Per-draw divergences KL_i^(l) = -(log delta_i^(l) - log mean_l delta_i^(l)),
/// with the mean taken by log-sum-exp. Columns with non-finite entries are NaN.
inline Eigen::MatrixXd per_draw_kl(const Eigen::MatrixXd& log_delta, std::vector<bool>& flagged) {
  const Eigen::Index n_draws = log_delta.rows(), n = log_delta.cols();
  if (n_draws == 0 || n == 0) throw ConfigError("influence diagnostics need draws and observations");
  flagged.assign(static_cast<std::size_t>(n), false);
  Eigen::MatrixXd out(n_draws, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = log_delta.col(i);
    if (!col.allFinite()) {
      flagged[static_cast<std::size_t>(i)] = true;
      out.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double m = col.maxCoeff();
    const double log_mean = m + std::log((col.array() - m).exp().sum() / static_cast<double>(n_draws));
    out.col(i) = -(col.array() - log_mean);
  }
  return out;
}

}  // namespace detail

/// KL estimates from any matrix of log posterior perturbations (draws x cases).
inline std::vector<double> kl_from_log_perturbations(const Eigen::MatrixXd& log_delta,
                                                     std::vector<bool>* flagged_out = nullptr) {
  std::vector<bool> flagged;
  const Eigen::MatrixXd per_draw = detail::per_draw_kl(log_delta, flagged);
  std::vector<double> kl(static_cast<std::size_t>(per_draw.cols()));
  for (Eigen::Index i = 0; i < per_draw.cols(); ++i) {
    double v = per_draw.col(i).mean();
    if (std::isfinite(v) && v < 0.0) {
      // Jensen: the exact value is non-negative; only rounding may push it below.
      if (v < -1e-8) throw NumericalError("negative KL estimate " + std::to_string(v));
      v = 0.0;
    }
    kl[static_cast<std::size_t>(i)] = v;
  }
  if (flagged_out) *flagged_out = std::move(flagged);
  return kl;
}

/// Share of draws in which observation i has the strictly largest KL_i^(l).
inline std::vector<double> proportions_from_log_perturbations(const Eigen::MatrixXd& log_delta) {
  std::vector<bool> flagged;
  const Eigen::MatrixXd per_draw = detail::per_draw_kl(log_delta, flagged);
  const Eigen::Index n_draws = per_draw.rows(), n = per_draw.cols();
  std::vector<double> p(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index l = 0; l < n_draws; ++l) {
    Eigen::Index best = -1;
    double top = -std::numeric_limits<double>::infinity(), second = top;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = per_draw(l, i);
      if (std::isnan(v)) continue;
      if (v > top) {
        second = top;
        top = v;
        best = i;
      } else if (v > second) {
        second = v;
      }
    }
    if (best >= 0 && top > second) p[static_cast<std::size_t>(best)] += 1.0;
  }
  for (auto& v : p) v /= static_cast<double>(n_draws);
  return p;
}

inline std::vector<double> kl_estimates(const ChainSample& chain, const GjrPosterior& post) {
  return kl_from_log_perturbations(log_perturbation_matrix(chain, post));
}

inline std::vector<double> influence_proportions(const ChainSample& chain, const GjrPosterior& post) {
  return proportions_from_log_perturbations(log_perturbation_matrix(chain, post));
}

inline InfluenceReport influence_report(const ChainSample& chain, const GjrPosterior& post) {
  const Eigen::MatrixXd log_delta = log_perturbation_matrix(chain, post);
  InfluenceReport r;
  r.kl = kl_from_log_perturbations(log_delta, &r.flagged);
  r.proportion = proportions_from_log_perturbations(log_delta);
  auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::isnan(v[best]) || v[i] > v[best]) best = i;
    return best;
  };
  r.argmax_kl = argmax(r.kl);
  r.argmax_proportion = argmax(r.proportion);
  return r;
}

}  // namespace zvgarch
