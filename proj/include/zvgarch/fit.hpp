#pragma once

// End-to-end posterior fit: step-size tuning, two chains, zero-variance report.

#include <chrono>
#include <optional>
#include <cstdint>
#include <string>
#include <vector>

#include "zvgarch/errors.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/samplers.hpp"
#include "zvgarch/simulate.hpp"
#include "zvgarch/zv.hpp"

namespace zvgarch {

enum class SamplerKind { hmc, rwm };

inline std::string to_string(SamplerKind s) { return s == SamplerKind::hmc ? "hmc" : "rwm"; }

inline SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "hmc") return SamplerKind::hmc;
  if (s == "rwm") return SamplerKind::rwm;
  throw ConfigError("unknown sampler '" + s + "' (expected hmc or rwm)");
}

enum class ZvProtocol {
  two_chains,  // fit on one chain, estimate on an independent one
  split_chain, // one chain; first half fits, second half estimates
};

struct FitConfig {
  SamplerKind sampler = SamplerKind::hmc;
  /// HMC step size; 0 means tune it to land in `acceptance_window`.
  double epsilon = 0.0;
  int leapfrog_steps = 20;
  double initial_epsilon = 0.01;
  AcceptanceWindow acceptance_window{0.7, 0.9};
  TuneOptions tune{};
  double epsilon_pilot = 1e-3;
  std::size_t pilot_draws = 2000;
  double target_acceptance = 0.8;
  std::size_t n_draws = 1000;
  std::size_t n_burnin = 1000;
  ZvProtocol protocol = ZvProtocol::two_chains;
  QuadraticBasis basis = QuadraticBasis::full;
  std::uint64_t seed = 1;
};

struct FitResult {
  DistKind dist = DistKind::normal;
  std::vector<ChainSample> chains;  // chains[0] fits, chains.back() estimates
  double epsilon = 0.0;
  std::optional<TuneResult> tuning;
  ZvReport zv;
  double runtime_seconds = 0.0;
  std::vector<std::string> warnings;

  /// Chain whose draws produce the reported estimates.
  const ChainSample& estimation_chain() const { return chains.back(); }
};

namespace detail {

inline void collect(std::vector<std::string>& out, const std::vector<std::string>& in,
                    const std::string& prefix) {
  for (const auto& w : in) out.push_back(prefix + w);
}

}  // namespace detail

inline FitResult fit_posterior(const GjrPosterior& post, const FitConfig& cfg) {
  const auto start_time = std::chrono::steady_clock::now();
  FitResult res;
  res.dist = post.kind();
  const Eigen::VectorXd init = transform(initial_params(post.data(), post.kind())).theta;
  const std::size_t n_chains = cfg.protocol == ZvProtocol::two_chains ? 2 : 1;

  if (cfg.sampler == SamplerKind::hmc) {
    HmcConfig h;
    h.leapfrog_steps = cfg.leapfrog_steps;
    h.n_draws = cfg.n_draws;
    h.n_burnin = cfg.n_burnin;
    Eigen::VectorXd start = init;
    if (cfg.epsilon > 0.0) {
      h.epsilon = cfg.epsilon;
    } else {
      HmcConfig skeleton = h;
      skeleton.epsilon = cfg.initial_epsilon;
      skeleton.seed = derive_seed(cfg.seed, 0);
      // Aim at the central half of the window: the acceptance of a fresh
      // chain scatters around the trial estimate.
      const auto& w = cfg.acceptance_window;
      const double quarter = 0.25 * (w.high - w.low);
      auto tuned = tune_epsilon(post, skeleton, {w.low + quarter, w.high - quarter}, init, cfg.tune);
      detail::collect(res.warnings, tuned.warnings, "tuning: ");
      h.epsilon = tuned.epsilon;
      start = tuned.position;
      res.tuning = std::move(tuned);
    }
    res.epsilon = h.epsilon;
    for (std::size_t c = 0; c < n_chains; ++c) {
      h.seed = derive_seed(cfg.seed, c + 1);
      res.chains.push_back(hmc_sample(post, h, start));
    }
  } else {
    RwmConfig r;
    r.epsilon_pilot = cfg.epsilon_pilot;
    r.pilot_draws = cfg.pilot_draws;
    r.target_acceptance = cfg.target_acceptance;
    r.n_draws = cfg.n_draws;
    r.n_burnin = cfg.n_burnin;
    for (std::size_t c = 0; c < n_chains; ++c) {
      r.seed = derive_seed(cfg.seed, c + 1);
      res.chains.push_back(rwm_sample(post, r, init));
    }
    res.epsilon = res.chains.front().epsilon;
  }
  for (std::size_t c = 0; c < res.chains.size(); ++c)
    detail::collect(res.warnings, res.chains[c].warnings, "chain " + std::to_string(c + 1) + ": ");

  if (cfg.protocol == ZvProtocol::two_chains) {
    res.zv = zv_report(res.chains[0], res.chains[1], post.kind(), cfg.basis);
  } else {
    auto [a, b] = split_chain(res.chains[0]);
    res.chains = {std::move(a), std::move(b)};
    res.zv = zv_report(res.chains[0], res.chains[1], post.kind(), cfg.basis);
  }
  for (const auto& e : res.zv.estimates) {
    detail::collect(res.warnings, e.linear.warnings, "zv linear: ");
    detail::collect(res.warnings, e.quadratic.warnings, "zv quadratic: ");
  }
  res.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return res;
}

}  // namespace zvgarch
