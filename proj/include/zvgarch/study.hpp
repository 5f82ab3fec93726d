#pragma once

// Replicated bias / standard-error study over samplers and ZV variants.

#include <algorithm>
#include <array>
#include <limits>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "zvgarch/errors.hpp"
#include "zvgarch/fit.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/simulate.hpp"

namespace zvgarch {

enum class StudyMethod { hmc, zv_hmc_l, zv_hmc_q, rwm, zv_rwm_l, zv_rwm_q };

inline constexpr std::array<StudyMethod, 6> kAllStudyMethods = {
    StudyMethod::hmc, StudyMethod::zv_hmc_l, StudyMethod::zv_hmc_q,
    StudyMethod::rwm, StudyMethod::zv_rwm_l, StudyMethod::zv_rwm_q};

inline std::string to_string(StudyMethod m) {
  switch (m) {
    case StudyMethod::hmc: return "HMC";
    case StudyMethod::zv_hmc_l: return "ZV-HMC-L";
    case StudyMethod::zv_hmc_q: return "ZV-HMC-Q";
    case StudyMethod::rwm: return "RWM";
    case StudyMethod::zv_rwm_l: return "ZV-RWM-L";
    case StudyMethod::zv_rwm_q: return "ZV-RWM-Q";
  }
  return "?";
}

struct StudyConfig {
  std::size_t replications = 20;
  std::vector<std::size_t> sample_sizes{200, 500};
  GjrParams truth{0.0, 0.05, 0.05, 0.10, 0.85, Normal{}};
  PriorSpec prior = PriorSpec::with_variance(1000.0);
  ModelOptions model{};
  bool run_hmc = true;
  bool run_rwm = true;
  /// Sampler settings; sampler kind and seed are set per replication.
  FitConfig fit{};
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (replications < 1) throw ConfigError("study needs at least one replication");
    if (sample_sizes.empty()) throw ConfigError("study needs at least one sample size");
    if (!(truth.persistence() < 1.0)) throw ConfigError("study truth violates alpha + phi/2 + beta < 1");
    zvgarch::validate(truth.dist);
    if (!run_hmc && !run_rwm) throw ConfigError("study needs at least one sampler");
  }

  std::vector<StudyMethod> methods() const {
    std::vector<StudyMethod> m;
    for (auto s : kAllStudyMethods) {
      const bool hmc = s == StudyMethod::hmc || s == StudyMethod::zv_hmc_l || s == StudyMethod::zv_hmc_q;
      if (hmc ? run_hmc : run_rwm) m.push_back(s);
    }
    return m;
  }
};

/// One replication's estimate and within-chain standard error.
struct StudyRecord {
  std::size_t n = 0, replication = 0;
  StudyMethod method{};
  std::string parameter;
  double estimate = 0.0, mcse = 0.0;
};

struct StudyCell {
  std::size_t n = 0;
  std::string parameter;
  StudyMethod method{};
  double bias = 0.0;
  /// Mean over replications of the within-chain batch-means standard error.
  double se = 0.0;
  /// Standard deviation of the point estimates across replications.
  double se_between = 0.0;
  std::size_t replications = 0;
};

struct StudyFailure {
  std::size_t n = 0, replication = 0;
  std::string sampler, message;
};

struct StudyResult {
  std::vector<std::string> parameters;
  std::vector<StudyMethod> methods;
  std::vector<StudyCell> cells;  // ordered by n, parameter, method
  std::vector<StudyRecord> records;
  std::vector<StudyFailure> failures;

  const StudyCell& cell(std::size_t n, const std::string& par, StudyMethod m) const {
    for (const auto& c : cells)
      if (c.n == n && c.parameter == par && c.method == m) return c;
    throw ConfigError("no study cell for n=" + std::to_string(n) + ", " + par + ", " + to_string(m));
  }
};

/// Seed of replication r at sample size n.
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t r) {
  return derive_seed(derive_seed(master, n), r);
}

namespace detail {

// Order-independent mean: values are sorted before summation.
inline double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sorted_sd(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sorted_mean(v);
  for (auto& x : v) x = (x - m) * (x - m);
  std::sort(v.begin(), v.end());
  return std::sqrt(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size() - 1));
}

struct ReplicationOutcome {
  std::vector<StudyRecord> records;
  std::vector<StudyFailure> failures;
};

inline ReplicationOutcome run_replication(const StudyConfig& cfg, std::size_t n, std::size_t r) {
  ReplicationOutcome out;
  const std::uint64_t seed = replication_seed(cfg.seed, n, r);
  std::mt19937_64 rng(derive_seed(seed, 0));
  const auto x = simulate_series(cfg.truth, n, rng);
  const GjrPosterior post(x, kind_of(cfg.truth.dist), cfg.prior, cfg.model);
  const auto names = parameter_names(post.kind());
  auto record = [&](SamplerKind s, std::uint64_t stream, StudyMethod raw, StudyMethod lin, StudyMethod quad) {
    FitConfig fc = cfg.fit;
    fc.sampler = s;
    fc.seed = derive_seed(seed, stream);
    try {
      const auto fit = fit_posterior(post, fc);
      for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& e = fit.zv.estimates[j];
        out.records.push_back({n, r, raw, names[j], e.raw_mean, e.raw_se});
        out.records.push_back({n, r, lin, names[j], e.linear_mean, e.linear_se});
        out.records.push_back({n, r, quad, names[j], e.quadratic_mean, e.quadratic_se});
      }
    } catch (const std::exception& ex) {
      out.failures.push_back({n, r, to_string(s), ex.what()});
    }
  };
  if (cfg.run_hmc)
    record(SamplerKind::hmc, 1, StudyMethod::hmc, StudyMethod::zv_hmc_l, StudyMethod::zv_hmc_q);
  if (cfg.run_rwm)
    record(SamplerKind::rwm, 2, StudyMethod::rwm, StudyMethod::zv_rwm_l, StudyMethod::zv_rwm_q);
  return out;
}

}  // namespace detail

/// Bias, mean within-chain SE and between-replication SD per cell. The
/// result does not depend on the order of the records.
inline StudyResult aggregate_study(const StudyConfig& cfg, std::vector<StudyRecord> records) {
  StudyResult res;
  res.parameters = parameter_names(kind_of(cfg.truth.dist));
  res.methods = cfg.methods();
  res.records = std::move(records);
  const auto truth_vec = to_vector(cfg.truth);
  for (auto n : cfg.sample_sizes) {
    for (std::size_t j = 0; j < res.parameters.size(); ++j) {
      for (auto m : res.methods) {
        std::vector<double> err, est, se;
        for (const auto& rec : res.records) {
          if (rec.n != n || rec.method != m || rec.parameter != res.parameters[j]) continue;
          err.push_back(rec.estimate - truth_vec[static_cast<Eigen::Index>(j)]);
          est.push_back(rec.estimate);
          se.push_back(rec.mcse);
        }
        StudyCell c{n, res.parameters[j], m};
        c.replications = est.size();
        if (!est.empty()) {
          c.bias = detail::sorted_mean(err);
          c.se = detail::sorted_mean(se);
          c.se_between = detail::sorted_sd(est);
        } else {
          c.bias = c.se = c.se_between = std::numeric_limits<double>::quiet_NaN();
        }
        res.cells.push_back(c);
      }
    }
  }
  return res;
}

/// Runs every (n, replication) pair, in parallel when threads allow. Each
/// replication simulates one series shared by all methods.
inline StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  struct Job {
    std::size_t n, r;
  };
  std::vector<Job> jobs;
  for (auto n : cfg.sample_sizes)
    for (std::size_t r = 0; r < cfg.replications; ++r) jobs.push_back({n, r});
  std::vector<detail::ReplicationOutcome> outcomes(jobs.size());

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next++) < jobs.size();)
      outcomes[j] = detail::run_replication(cfg, jobs[j].n, jobs[j].r);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<StudyRecord> records;
  std::vector<StudyFailure> failures;
  for (auto& o : outcomes) {
    records.insert(records.end(), o.records.begin(), o.records.end());
    failures.insert(failures.end(), o.failures.begin(), o.failures.end());
  }
  auto res = aggregate_study(cfg, std::move(records));
  res.failures = std::move(failures);
  return res;
}

/// One row per (n, parameter, method).
inline void write_study_csv(std::ostream& os, const StudyResult& res) {
  os << "n,parameter,method,bias,se,se_between,replications\n";
  char buf[256];
  for (const auto& c : res.cells) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.10g,%.10g,%.10g,%zu\n", c.n, c.parameter.c_str(),
                  to_string(c.method).c_str(), c.bias, c.se, c.se_between, c.replications);
    os << buf;
  }
}

inline std::vector<std::size_t> study_sample_sizes(const StudyResult& res) {
  std::vector<std::size_t> ns;
  for (const auto& c : res.cells)
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
  return ns;
}

/// Text table: one block per n, rows per parameter, bias and SE per method,
/// followed by the between-replication standard deviations.
inline void write_study_table(std::ostream& os, const StudyResult& res) {
  char buf[128];
  const auto ns = study_sample_sizes(res);
  auto rule = [&] { os << std::string(8 + 22 * res.methods.size(), '-') << "\n"; };
  auto header = [&] {
    std::snprintf(buf, sizeof buf, "%-8s", "n / par");
    os << buf;
    for (auto m : res.methods) {
      std::snprintf(buf, sizeof buf, "%22s", to_string(m).c_str());
      os << buf;
    }
    os << "\n";
  };

  os << "Bias and standard error (mean within-chain MCSE) by method\n";
  rule();
  header();
  os << std::string(8, ' ');
  for (std::size_t i = 0; i < res.methods.size(); ++i) os << "        Bias        SE";
  os << "\n";
  for (auto n : ns) {
    rule();
    std::snprintf(buf, sizeof buf, "n = %zu\n", n);
    os << buf;
    for (const auto& p : res.parameters) {
      std::snprintf(buf, sizeof buf, "%-8s", p.c_str());
      os << buf;
      for (auto m : res.methods) {
        const auto& c = res.cell(n, p, m);
        std::snprintf(buf, sizeof buf, "%12.5f%10.5f", c.bias, c.se);
        os << buf;
      }
      os << "\n";
    }
  }
  rule();

  os << "\nStandard deviation of the estimates across replications\n";
  rule();
  header();
  for (auto n : ns) {
    rule();
    std::snprintf(buf, sizeof buf, "n = %zu\n", n);
    os << buf;
    for (const auto& p : res.parameters) {
      std::snprintf(buf, sizeof buf, "%-8s", p.c_str());
      os << buf;
      for (auto m : res.methods) {
        std::snprintf(buf, sizeof buf, "%22.5f", res.cell(n, p, m).se_between);
        os << buf;
      }
      os << "\n";
    }
  }
  rule();
  if (!res.failures.empty()) {
    std::snprintf(buf, sizeof buf, "%zu replication run(s) failed and were skipped\n", res.failures.size());
    os << buf;
  }
}

}  // namespace zvgarch
