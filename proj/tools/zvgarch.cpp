// zvgarch: fit, diagnose, compare and simulate Bayesian GJR-GARCH(1,1) models.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zvgarch/criteria.hpp"
#include "zvgarch/diagnostics.hpp"
#include "zvgarch/fit.hpp"
#include "zvgarch/io.hpp"
#include "zvgarch/study.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace zvgarch;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

struct DataOptions {
  std::string path;
  std::string mode = "prices";
  std::string date_col = "date";
  std::string value_col = "close";
};

struct ModelChoice {
  std::string dist = "normal";
  double prior_var = 100.0;
  std::string initial_variance = "unconditional";
};

struct SamplerOptions {
  std::string sampler = "hmc";
  std::size_t draws = 5000;
  std::size_t burnin = 5000;
  std::uint64_t seed = 1;
  double epsilon = 0.0;
  int leapfrog_steps = 20;
  double epsilon_pilot = 1e-3;
  std::size_t pilot_draws = 2000;
  double target_acceptance = 0.8;
  std::string protocol = "two-chains";
  std::string basis = "full";
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void add_data_options(CLI::App* app, DataOptions& d, bool required) {
  auto* o = app->add_option("--data", d.path, "CSV file with a header row");
  if (required) o->required();
  app->add_option("--mode", d.mode, "prices (100 x log differences) or returns")
      ->check(CLI::IsMember({"prices", "returns"}))
      ->capture_default_str();
  app->add_option("--date-col", d.date_col, "Date column name")->capture_default_str();
  app->add_option("--value-col", d.value_col, "Value column name")->capture_default_str();
}

void add_model_options(CLI::App* app, ModelChoice& m, bool with_dist = true) {
  if (with_dist)
    app->add_option("--dist", m.dist, "Error distribution")
        ->check(CLI::IsMember({"normal", "t", "ged", "gt"}))
        ->capture_default_str();
  app->add_option("--prior-var", m.prior_var, "Variance of every truncated-normal prior")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--initial-variance", m.initial_variance, "h_1 policy")
      ->check(CLI::IsMember({"unconditional", "sample"}))
      ->capture_default_str();
}

void add_sampler_options(CLI::App* app, SamplerOptions& s, bool with_sampler = true) {
  if (with_sampler)
    app->add_option("--sampler", s.sampler, "hmc or rwm")
        ->check(CLI::IsMember({"hmc", "rwm"}))
        ->capture_default_str();
  app->add_option("--draws", s.draws, "Retained draws per chain")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--burnin", s.burnin, "Burn-in iterations per chain")->capture_default_str();
  app->add_option("--seed", s.seed, "Master seed")->capture_default_str();
  app->add_option("--epsilon", s.epsilon, "HMC step size (0 tunes it)")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--leapfrog-steps", s.leapfrog_steps, "HMC leapfrog steps")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--epsilon-pilot", s.epsilon_pilot, "RWM pilot proposal variance")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--pilot-draws", s.pilot_draws, "RWM pilot length")->capture_default_str();
  app->add_option("--target-acceptance", s.target_acceptance, "RWM target acceptance")->capture_default_str();
  app->add_option("--protocol", s.protocol, "ZV fit/estimate split")
      ->check(CLI::IsMember({"two-chains", "split"}))
      ->capture_default_str();
  app->add_option("--basis", s.basis, "Quadratic ZV basis")
      ->check(CLI::IsMember({"full", "diagonal"}))
      ->capture_default_str();
}

ModelOptions model_options(const ModelChoice& m) {
  ModelOptions o;
  o.initial_variance = m.initial_variance == "sample" ? InitialVariance::sample_variance
                                                      : InitialVariance::unconditional;
  return o;
}

FitConfig fit_config(const SamplerOptions& s) {
  FitConfig c;
  c.sampler = parse_sampler_kind(s.sampler);
  c.epsilon = s.epsilon;
  c.leapfrog_steps = s.leapfrog_steps;
  c.epsilon_pilot = s.epsilon_pilot;
  c.pilot_draws = s.pilot_draws;
  c.target_acceptance = s.target_acceptance;
  c.n_draws = s.draws;
  c.n_burnin = s.burnin;
  c.protocol = s.protocol == "split" ? ZvProtocol::split_chain : ZvProtocol::two_chains;
  c.basis = s.basis == "diagonal" ? QuadraticBasis::diagonal : QuadraticBasis::full;
  c.seed = s.seed;
  return c;
}

json data_json(const DataOptions& d, const Series& s) {
  return {{"path", d.path},          {"mode", d.mode},
          {"date_col", d.date_col},  {"value_col", d.value_col},
          {"observations", s.values.size()}, {"dropped_rows", s.dropped_rows},
          {"hash", hex64(series_hash(s.values))}};
}

json model_json(const ModelChoice& m) {
  return {{"dist", m.dist}, {"prior_var", m.prior_var}, {"initial_variance", m.initial_variance}};
}

json sampler_json(const SamplerOptions& s) {
  return {{"sampler", s.sampler},
          {"draws", s.draws},
          {"burnin", s.burnin},
          {"seed", s.seed},
          {"epsilon", s.epsilon},
          {"leapfrog_steps", s.leapfrog_steps},
          {"epsilon_pilot", s.epsilon_pilot},
          {"pilot_draws", s.pilot_draws},
          {"target_acceptance", s.target_acceptance},
          {"protocol", s.protocol},
          {"basis", s.basis}};
}

Series load(const DataOptions& d) {
  auto s = ingest_file(d.path, parse_input_mode(d.mode), d.date_col, d.value_col);
  if (s.dropped_rows > 0)
    std::cerr << "warning: dropped " << s.dropped_rows << " row(s) with missing values\n";
  return s;
}

void warn_all(const std::vector<std::string>& warnings) {
  std::vector<std::string> seen;
  for (const auto& w : warnings) {
    if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
    seen.push_back(w);
    std::cerr << "warning: " << w << "\n";
  }
}

FitResult checked_fit(const GjrPosterior& post, const FitConfig& cfg) {
  auto res = fit_posterior(post, cfg);
  if (res.tuning && !res.tuning->converged)
    throw NumericalError("step-size tuning failed to reach the acceptance window (best acceptance " +
                         fmt("%.3f", res.tuning->acceptance) + ")");
  return res;
}

/// INI reader that files unsectioned keys under the subcommand being run, so a
/// plain key=value file serves every command.
class FlatConfig : public CLI::ConfigINI {
 public:
  explicit FlatConfig(std::string command) : command_(std::move(command)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    auto items = CLI::ConfigINI::from_config(in);
    for (auto& item : items)
      if (item.parents.empty() && !command_.empty() && item.name != "++" && item.name != "--")
        item.parents = {command_};
    return items;
  }

 private:
  std::string command_;
};

// ---------------------------------------------------------------------------
// Output formatting

std::string summary_csv(const ZvReport& zv) {
  std::ostringstream os;
  os << "parameter,mean,se,zv_l_mean,zv_l_se,zv_q_mean,zv_q_se\n";
  for (std::size_t j = 0; j < zv.names.size(); ++j) {
    const auto& e = zv.estimates[j];
    os << zv.names[j];
    for (double v : {e.raw_mean, e.raw_se, e.linear_mean, e.linear_se, e.quadratic_mean, e.quadratic_se})
      os << "," << fmt("%.10g", v);
    os << "\n";
  }
  return os.str();
}

std::string summary_table(const FitResult& fit, const std::string& sampler) {
  std::ostringstream os;
  std::string up = sampler;
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s%20s%20s%20s\n", "", up.c_str(), ("ZV-" + up + "-L").c_str(),
                ("ZV-" + up + "-Q").c_str());
  os << buf;
  std::snprintf(buf, sizeof buf, "%-8s%10s%10s%10s%10s%10s%10s\n", "par", "mean", "SE", "mean", "SE", "mean", "SE");
  os << buf << std::string(68, '-') << "\n";
  for (std::size_t j = 0; j < fit.zv.names.size(); ++j) {
    const auto& e = fit.zv.estimates[j];
    std::snprintf(buf, sizeof buf, "%-8s%10.5f%10.5f%10.5f%10.5f%10.5f%10.5f\n", fit.zv.names[j].c_str(),
                  e.raw_mean, e.raw_se, e.linear_mean, e.linear_se, e.quadratic_mean, e.quadratic_se);
    os << buf;
  }
  os << std::string(68, '-') << "\n";
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    std::snprintf(buf, sizeof buf, "chain %zu: acceptance %.5f, draws %zu\n", c + 1,
                  fit.chains[c].acceptance_rate, fit.chains[c].size());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "epsilon %.5f\n", fit.epsilon);
  os << buf;
  return os.str();
}

std::string chain_csv(const ChainSample& chain, DistKind k) {
  std::ostringstream os;
  os << "draw";
  for (const auto& n : parameter_names(k)) os << "," << n;
  os << ",log_posterior\n";
  for (Eigen::Index l = 0; l < chain.draws.rows(); ++l) {
    const auto v = to_vector(inverse_transform(chain.draws.row(l).transpose(), k));
    os << l;
    for (double x : v) os << "," << fmt("%.17g", x);
    os << "," << fmt("%.17g", chain.log_posterior[l]) << "\n";
  }
  return os.str();
}

json criteria_json(const CriteriaReport& r) {
  return {{"dic", r.dic},       {"eaic", r.eaic},     {"ebic", r.ebic},         {"waic", r.waic},
          {"looic", r.looic},   {"p_dic", r.p_dic},   {"p_waic", r.p_waic},     {"p_loo", r.p_loo},
          {"max_pareto_k", r.max_pareto_k}, {"high_pareto_k", r.n_high_k}};
}

std::string criteria_csv(const CriteriaReport& r) {
  std::ostringstream os;
  os << "criterion,value\n";
  const json j = criteria_json(r);
  for (const auto& [k, v] : j.items()) os << k << "," << fmt("%.10g", v.get<double>()) << "\n";
  return os.str();
}

void write_json(const fs::path& p, const json& j) { write_atomic(p, j.dump(2) + "\n"); }

json base_metadata(const std::string& command) {
  return {{"command", command}, {"version", kVersion}};
}

// ---------------------------------------------------------------------------
// Commands

struct FitCommand {
  DataOptions data;
  ModelChoice model;
  SamplerOptions sampler;
  std::string out = "fit-out";
  bool write_chain = true;

  int run() const {
    const auto series = load(data);
    const auto kind = parse_dist_kind(model.dist);
    const GjrPosterior post(series.values, kind, PriorSpec::with_variance(model.prior_var), model_options(model));
    const auto fit = checked_fit(post, fit_config(sampler));
    warn_all(fit.warnings);
    const auto crit = criteria_report(fit.estimation_chain(), post);
    const fs::path dir(out);
    write_atomic(dir / "summary.csv", summary_csv(fit.zv));
    write_atomic(dir / "summary.txt", summary_table(fit, sampler.sampler));
    write_atomic(dir / "criteria.csv", criteria_csv(crit));
    // The estimation chain is what diagnose reads back.
    if (write_chain) write_atomic(dir / "chain.csv", chain_csv(fit.estimation_chain(), kind));

    json meta = base_metadata("fit");
    meta["data"] = data_json(data, series);
    meta["model"] = model_json(model);
    meta["sampler"] = sampler_json(sampler);
    json chains = json::array();
    for (const auto& c : fit.chains)
      chains.push_back({{"seed", c.seed}, {"acceptance_rate", c.acceptance_rate}, {"draws", c.size()},
                        {"divergences", c.divergences}});
    meta["chains"] = chains;
    meta["epsilon"] = fit.epsilon;
    meta["criteria"] = criteria_json(crit);
    meta["warnings"] = fit.warnings;
    meta["runtime_seconds"] = fit.runtime_seconds;
    write_json(dir / "metadata.json", meta);
    std::cout << summary_table(fit, sampler.sampler);
    return kOk;
  }
};

/// Reads a chain CSV written by fit back into unconstrained draws.
ChainSample read_chain(const fs::path& path, const GjrPosterior& post) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open chain file " + path.string());
  std::string line;
  std::getline(in, line);
  const auto names = parameter_names(post.kind());
  const auto header = detail::split_csv_line(line);
  if (header.size() != names.size() + 2)
    throw ConfigError("chain file columns do not match the " + std::string(to_string(post.kind())) + " model");
  std::vector<Eigen::VectorXd> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw DataError("malformed chain row " + std::to_string(rows.size() + 2));
    Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) v[static_cast<Eigen::Index>(j)] = std::stod(f[j + 1]);
    rows.push_back(transform(from_vector(v, post.kind())).theta);
  }
  ChainSample chain;
  chain.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  chain.log_posterior.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t l = 0; l < rows.size(); ++l) {
    chain.draws.row(static_cast<Eigen::Index>(l)) = rows[l].transpose();
    chain.log_posterior[static_cast<Eigen::Index>(l)] = post.log_density(rows[l]);
  }
  if (rows.empty()) throw DataError("chain file has no draws");
  return chain;
}

struct DiagnoseCommand {
  DataOptions data;
  std::string fit_dir;
  std::string out;
  std::size_t top = 10;

  int run() const {
    const fs::path dir(fit_dir);
    std::ifstream mf(dir / "metadata.json");
    if (!mf) throw ConfigError("no metadata.json in " + dir.string());
    const json meta = json::parse(mf);
    DataOptions d = data;
    if (d.path.empty()) d.path = meta["data"]["path"].get<std::string>();
    const auto series = load(d);
    if (hex64(series_hash(series.values)) != meta["data"]["hash"].get<std::string>())
      throw ConfigError("data do not match the fitted run (hash mismatch); refit or pass the original data");
    ModelChoice m;
    m.dist = meta["model"]["dist"].get<std::string>();
    m.prior_var = meta["model"]["prior_var"].get<double>();
    m.initial_variance = meta["model"]["initial_variance"].get<std::string>();
    const GjrPosterior post(series.values, parse_dist_kind(m.dist), PriorSpec::with_variance(m.prior_var),
                            model_options(m));
    const auto chain = read_chain(dir / "chain.csv", post);
    const auto rep = influence_report(chain, post);

    std::ostringstream csv, plot, table;
    csv << "index,date,kl,proportion\n";
    plot << "index,date,kl\n";
    for (std::size_t i = 0; i < rep.kl.size(); ++i) {
      csv << i + 1 << "," << series.dates[i] << "," << fmt("%.10g", rep.kl[i]) << ","
          << fmt("%.10g", rep.proportion[i]) << "\n";
      plot << i + 1 << "," << series.dates[i] << "," << fmt("%.10g", rep.kl[i]) << "\n";
    }
    std::vector<std::size_t> order(rep.kl.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rep.kl[a] > rep.kl[b]; });
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6s%8s  %-12s%12s%12s%12s\n", "rank", "index", "date", "value", "KL", "P");
    table << buf << std::string(62, '-') << "\n";
    for (std::size_t r = 0; r < std::min(top, order.size()); ++r) {
      const auto i = order[r];
      std::snprintf(buf, sizeof buf, "%-6zu%8zu  %-12s%12.5f%12.5f%12.5f\n", r + 1, i + 1, series.dates[i].c_str(),
                    series.values[i], rep.kl[i], rep.proportion[i]);
      table << buf;
    }
    std::size_t flagged = 0;
    for (bool f : rep.flagged) flagged += f;
    if (flagged) table << flagged << " observation(s) flagged: perturbation not computable\n";

    const fs::path od = out.empty() ? dir : fs::path(out);
    write_atomic(od / "influence.csv", csv.str());
    write_atomic(od / "influence_plot.csv", plot.str());
    write_atomic(od / "influence_top.txt", table.str());
    json dm = base_metadata("diagnose");
    dm["fit_dir"] = dir.string();
    dm["data"] = data_json(d, series);
    dm["draws"] = chain.size();
    dm["argmax_kl"] = rep.argmax_kl + 1;
    dm["argmax_proportion"] = rep.argmax_proportion + 1;
    write_json(od / "influence_metadata.json", dm);
    std::cout << table.str();
    return kOk;
  }
};

struct CompareCommand {
  DataOptions data;
  ModelChoice model;
  SamplerOptions sampler;
  std::vector<std::string> dists{"normal", "t", "ged", "gt"};
  std::string out = "compare-out";

  int run() const {
    const auto series = load(data);
    struct Row {
      std::string dist;
      bool ok = false;
      CriteriaReport crit;
      std::string error;
    };
    std::vector<Row> rows;
    for (const auto& name : dists) {
      Row row;
      row.dist = name;
      try {
        const GjrPosterior post(series.values, parse_dist_kind(name), PriorSpec::with_variance(model.prior_var),
                                model_options(model));
        const auto fit = checked_fit(post, fit_config(sampler));
        warn_all(fit.warnings);
        row.crit = criteria_report(fit.estimation_chain(), post);
        row.ok = true;
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        row.error = e.what();
        std::cerr << "warning: " << name << " fit failed: " << e.what() << "\n";
      }
      rows.push_back(row);
    }
    const char* names[5] = {"EAIC", "EBIC", "DIC", "WAIC", "LOOIC"};
    auto value = [](const CriteriaReport& r, int c) {
      const double v[5] = {r.eaic, r.ebic, r.dic, r.waic, r.looic};
      return v[c];
    };
    std::vector<std::string> winner(5, "-");
    for (int c = 0; c < 5; ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : rows)
        if (r.ok && value(r.crit, c) < best) {
          best = value(r.crit, c);
          winner[c] = r.dist;
        }
    }
    std::ostringstream csv, table;
    csv << "dist,eaic,ebic,dic,waic,looic,p_dic,p_waic,p_loo,max_pareto_k,status\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s%12s%12s%12s%12s%12s\n", "dist", names[0], names[1], names[2], names[3], names[4]);
    table << buf << std::string(68, '-') << "\n";
    for (const auto& r : rows) {
      if (!r.ok) {
        csv << r.dist << ",,,,,,,,,,failed\n";
        std::snprintf(buf, sizeof buf, "%-8s%12s%12s%12s%12s%12s\n", r.dist.c_str(), "failed", "failed", "failed",
                      "failed", "failed");
        table << buf;
        continue;
      }
      const auto& c = r.crit;
      csv << r.dist;
      for (double v : {c.eaic, c.ebic, c.dic, c.waic, c.looic, c.p_dic, c.p_waic, c.p_loo, c.max_pareto_k})
        csv << "," << fmt("%.10g", v);
      csv << ",ok\n";
      std::snprintf(buf, sizeof buf, "%-8s%12.1f%12.1f%12.1f%12.1f%12.1f\n", r.dist.c_str(), c.eaic, c.ebic, c.dic,
                    c.waic, c.looic);
      table << buf;
    }
    table << std::string(68, '-') << "\n";
    std::snprintf(buf, sizeof buf, "%-8s%12s%12s%12s%12s%12s\n", "best", winner[0].c_str(), winner[1].c_str(),
                  winner[2].c_str(), winner[3].c_str(), winner[4].c_str());
    table << buf;
    for (const auto& r : rows)
      if (r.ok && r.crit.n_high_k > 0)
        table << r.dist << ": " << r.crit.n_high_k << " observation(s) with Pareto k > 0.7; LOOIC unreliable\n";
    for (const auto& r : rows)
      if (r.ok && r.crit.p_dic < 0.0)
        table << r.dist << ": negative p_D; the plug-in point is far from the posterior bulk\n";

    const fs::path dir(out);
    write_atomic(dir / "comparison.csv", csv.str());
    write_atomic(dir / "comparison.txt", table.str());
    json meta = base_metadata("compare");
    meta["data"] = data_json(data, series);
    meta["model"] = model_json(model);
    meta["sampler"] = sampler_json(sampler);
    meta["dists"] = dists;
    json fails = json::object();
    for (const auto& r : rows)
      if (!r.ok) fails[r.dist] = r.error;
    meta["failures"] = fails;
    write_json(dir / "metadata.json", meta);
    std::cout << table.str();
    bool any = false;
    for (const auto& r : rows) any = any || r.ok;
    if (!any) throw NumericalError("every fit failed");
    return kOk;
  }
};

struct TruthOptions {
  std::string dist = "normal";
  std::vector<double> params{0.0, 0.05, 0.05, 0.10, 0.85};
  std::vector<double> shape;

  GjrParams build() const {
    if (params.size() != 5) throw ConfigError("--truth needs mu,omega,alpha,phi,beta");
    const auto kind = parse_dist_kind(dist);
    const auto d = shape.empty() ? default_dist(kind) : make_dist(kind, shape);
    return {params[0], params[1], params[2], params[3], params[4], d};
  }
};

void add_truth_options(CLI::App* app, TruthOptions& t) {
  app->add_option("--dist", t.dist, "Error distribution")
      ->check(CLI::IsMember({"normal", "t", "ged", "gt"}))
      ->capture_default_str();
  app->add_option("--truth", t.params, "mu,omega,alpha,phi,beta")->delimiter(',')->capture_default_str();
  app->add_option("--shape", t.shape, "Shape parameters (t/ged: nu; gt: eta,nu)")->delimiter(',');
}

struct StudyCommand {
  TruthOptions truth;
  ModelChoice model;
  SamplerOptions sampler;
  std::size_t replications = 20;
  std::vector<std::size_t> sizes{200, 500};
  std::vector<std::string> samplers{"hmc", "rwm"};
  unsigned threads = 0;
  std::string out = "study-out";

  int run() const {
    StudyConfig cfg;
    cfg.replications = replications;
    cfg.sample_sizes = sizes;
    cfg.truth = truth.build();
    cfg.prior = PriorSpec::with_variance(model.prior_var);
    cfg.model = model_options(model);
    cfg.run_hmc = std::find(samplers.begin(), samplers.end(), "hmc") != samplers.end();
    cfg.run_rwm = std::find(samplers.begin(), samplers.end(), "rwm") != samplers.end();
    cfg.fit = fit_config(sampler);
    cfg.seed = sampler.seed;
    cfg.threads = threads;
    const auto res = run_study(cfg);
    for (const auto& f : res.failures)
      std::cerr << "warning: n=" << f.n << " replication " << f.replication << " (" << f.sampler
                << ") failed: " << f.message << "\n";
    std::ostringstream csv, table;
    write_study_csv(csv, res);
    write_study_table(table, res);
    const fs::path dir(out);
    write_atomic(dir / "study.csv", csv.str());
    write_atomic(dir / "study.txt", table.str());
    json meta = base_metadata("study");
    meta["truth"] = {{"dist", truth.dist}, {"params", truth.params}, {"shape", shape_values(cfg.truth.dist)}};
    meta["model"] = model_json(model);
    meta["sampler"] = sampler_json(sampler);
    meta["replications"] = replications;
    meta["sample_sizes"] = sizes;
    meta["samplers"] = samplers;
    meta["failures"] = res.failures.size();
    write_json(dir / "metadata.json", meta);
    std::cout << table.str();
    return kOk;
  }
};

struct SimulateCommand {
  TruthOptions truth;
  std::size_t n = 2000;
  std::uint64_t seed = 1;
  std::string as = "prices";
  std::string out = "simulated.csv";

  int run() const {
    const auto p = truth.build();
    std::mt19937_64 rng(seed);
    const auto x = simulate_series(p, n, rng);
    std::ostringstream os;
    os << (as == "prices" ? "date,close\n" : "date,return\n");
    // Business-day style integer dates keep the file free of calendar logic.
    double price = 1000.0;
    if (as == "prices") os << "d0," << fmt("%.10f", price) << "\n";
    for (std::size_t t = 0; t < x.size(); ++t) {
      if (as == "prices") {
        price *= std::exp(x[t] / 100.0);
        os << "d" << t + 1 << "," << fmt("%.10f", price) << "\n";
      } else {
        os << "d" << t + 1 << "," << fmt("%.10f", x[t]) << "\n";
      }
    }
    write_atomic(out, os.str());
    std::cout << "wrote " << n << " observations to " << out << "\n";
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian GJR-GARCH(1,1) with zero-variance MCMC post-processing"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  FitCommand fit;
  auto* fit_app = app.add_subcommand("fit", "Fit one model and report raw and ZV posterior means");
  add_data_options(fit_app, fit.data, true);
  add_model_options(fit_app, fit.model);
  add_sampler_options(fit_app, fit.sampler);
  fit_app->add_option("--out", fit.out, "Output directory")->capture_default_str();
  fit_app->add_option("--chain", fit.write_chain, "Write the estimation chain CSV")->capture_default_str();

  DiagnoseCommand diag;
  auto* diag_app = app.add_subcommand("diagnose", "Influence of each observation from a fitted chain");
  add_data_options(diag_app, diag.data, false);
  diag_app->add_option("--fit", diag.fit_dir, "Output directory of a previous fit")->required();
  diag_app->add_option("--out", diag.out, "Output directory (default: the fit directory)");
  diag_app->add_option("--top", diag.top, "Rows in the ranked table")->capture_default_str();

  CompareCommand cmp;
  auto* cmp_app = app.add_subcommand("compare", "Information criteria across error distributions");
  add_data_options(cmp_app, cmp.data, true);
  add_model_options(cmp_app, cmp.model, false);
  add_sampler_options(cmp_app, cmp.sampler);
  cmp_app->add_option("--dists", cmp.dists, "Distributions to fit")
      ->delimiter(',')
      ->check(CLI::IsMember({"normal", "t", "ged", "gt"}))
      ->capture_default_str();
  cmp_app->add_option("--out", cmp.out, "Output directory")->capture_default_str();

  StudyCommand study;
  study.model.prior_var = 1000.0;
  study.sampler.draws = 1000;
  study.sampler.burnin = 1000;
  auto* study_app = app.add_subcommand("study", "Replicated bias / standard-error study on simulated data");
  add_truth_options(study_app, study.truth);
  add_model_options(study_app, study.model, false);
  add_sampler_options(study_app, study.sampler, false);
  study_app->add_option("--replications", study.replications, "Replications per sample size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  study_app->add_option("--sizes", study.sizes, "Sample sizes")->delimiter(',')->capture_default_str();
  study_app->add_option("--samplers", study.samplers, "Samplers to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"hmc", "rwm"}))
      ->capture_default_str();
  study_app->add_option("--threads", study.threads, "Worker threads (0: all cores)")->capture_default_str();
  study_app->add_option("--out", study.out, "Output directory")->capture_default_str();

  SimulateCommand sim;
  auto* sim_app = app.add_subcommand("simulate", "Write a simulated GJR-GARCH series as CSV");
  add_truth_options(sim_app, sim.truth);
  sim_app->add_option("--n", sim.n, "Observations")->check(CLI::PositiveNumber)->capture_default_str();
  sim_app->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  sim_app->add_option("--as", sim.as, "prices or returns")
      ->check(CLI::IsMember({"prices", "returns"}))
      ->capture_default_str();
  sim_app->add_option("--out", sim.out, "Output CSV")->capture_default_str();

  app.set_config("--config", "", "key=value file using the long flag names; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  std::string active;
  for (int i = 1; i < argc && active.empty(); ++i)
    for (auto* sub : app.get_subcommands({}))
      if (sub->get_name() == argv[i]) active = argv[i];
  app.config_formatter(std::make_shared<FlatConfig>(active));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit_app) return fit.run();
    if (*diag_app) return diag.run();
    if (*cmp_app) return cmp.run();
    if (*study_app) return study.run();
    if (*sim_app) return sim.run();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed metadata: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
