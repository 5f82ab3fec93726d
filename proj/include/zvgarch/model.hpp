#pragma once

// GJR-GARCH(1,1):
//   x_t = y_t + mu,   y_t = e_t sqrt(h_t),   e_t ~ D(0, 1)
//   h_t = omega + (alpha + phi I_{t-1}) y_{t-1}^2 + beta h_{t-1},  I_t = [y_t <= 0]
// with truncated-normal priors and a per-coordinate bijection to R^d.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/distributions.hpp"
#include "zvgarch/errors.hpp"

namespace zvgarch {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Number of mean/variance-equation parameters (mu, omega, alpha, phi, beta).
inline constexpr std::size_t kCoreParams = 5;

struct GjrParams {
  double mu = 0.0;
  double omega = 0.05;
  double alpha = 0.05;
  double phi = 0.10;
  double beta = 0.85;
  ErrorDist dist = Normal{};

  double persistence() const { return alpha + 0.5 * phi + beta; }
  double unconditional_variance() const { return omega / (1.0 - persistence()); }
};

/// Prior variances of the zero-mean truncated-normal priors.
struct PriorSpec {
  double var_mu = 1000.0;
  double var_omega = 1000.0;
  double var_alpha = 1000.0;
  double var_phi = 1000.0;
  double var_beta = 1000.0;
  double var_nu = 1000.0;
  double var_eta = 1000.0;

  static PriorSpec with_variance(double v) { return {v, v, v, v, v, v, v}; }

  void validate() const {
    for (double v : {var_mu, var_omega, var_alpha, var_phi, var_beta, var_nu, var_eta})
      if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError("prior variances must be positive and finite");
  }
};

enum class InitialVariance {
  unconditional,    ///< h_1 = omega / (1 - alpha - phi/2 - beta)
  sample_variance,  ///< h_1 = sample variance of the series
};

struct ModelOptions {
  InitialVariance initial_variance = InitialVariance::unconditional;
  /// Reject (log prior = -inf) states with alpha + phi/2 + beta >= 1.
  bool enforce_stationarity = true;
};

/// Natural-space parameter names in the order used throughout the library.
inline std::vector<std::string> parameter_names(DistKind k) {
  std::vector<std::string> names{"mu", "omega", "alpha", "phi", "beta"};
  for (auto& s : shape_names(k)) names.push_back(s);
  return names;
}

inline std::size_t parameter_count(DistKind k) { return kCoreParams + shape_count(k); }

inline Eigen::VectorXd to_vector(const GjrParams& p) {
  const auto shapes = shape_values(p.dist);
  Eigen::VectorXd v(kCoreParams + shapes.size());
  v << p.mu, p.omega, p.alpha, p.phi, p.beta;
  for (std::size_t i = 0; i < shapes.size(); ++i) v[kCoreParams + i] = shapes[i];
  return v;
}

inline GjrParams from_vector(const Eigen::VectorXd& v, DistKind k) {
  if (static_cast<std::size_t>(v.size()) != parameter_count(k))
    throw std::invalid_argument("parameter vector has wrong length");
  GjrParams p{v[0], v[1], v[2], v[3], v[4], Normal{}};
  std::vector<double> shapes(v.data() + kCoreParams, v.data() + v.size());
  p.dist = make_dist(k, shapes);
  return p;
}

/// True when all bounds (and, if enabled, stationarity) hold.
inline bool in_support(const GjrParams& p, const ModelOptions& opt = {}) {
  if (!(p.omega > 0.0) || !(p.alpha > 0.0 && p.alpha < 1.0) ||
      !(p.phi > 0.0 && p.phi < 2.0) || !(p.beta > 0.0 && p.beta < 1.0) ||
      !std::isfinite(p.mu) || !std::isfinite(p.omega))
    return false;
  if (opt.enforce_stationarity && !(p.persistence() < 1.0)) return false;
  return is_valid(p.dist);
}

namespace detail {

inline void check_finite(std::span<const double> x) {
  for (std::size_t t = 0; t < x.size(); ++t)
    if (!std::isfinite(x[t]))
      throw DataError("non-finite observation at index " + std::to_string(t));
}

inline double centered_variance(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size());
}

inline double initial_variance(const GjrParams& p, std::span<const double> y,
                               const ModelOptions& opt) {
  if (opt.initial_variance == InitialVariance::sample_variance) return centered_variance(y);
  const double denom = 1.0 - p.persistence();
  return denom > 0.0 ? p.omega / denom : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Conditional variances h_1..h_n of the demeaned series y.
/// Throws DataError on non-finite y, DomainError if h_1 is undefined
/// (unconditional policy with persistence >= 1).
inline std::vector<double> variance_recursion(std::span<const double> y, const GjrParams& p,
                                              const ModelOptions& opt = {}) {
  if (y.empty()) throw DataError("variance recursion needs at least one observation");
  detail::check_finite(y);
  std::vector<double> h(y.size());
  h[0] = detail::initial_variance(p, y, opt);
  if (!(h[0] > 0.0) || !std::isfinite(h[0]))
    throw DomainError("initial variance undefined: persistence must be < 1");
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double y2 = y[t - 1] * y[t - 1];
    const double arch = y[t - 1] <= 0.0 ? p.alpha + p.phi : p.alpha;
    h[t] = p.omega + arch * y2 + p.beta * h[t - 1];
  }
  return h;
}

inline std::vector<double> demean(std::span<const double> x, double mu) {
  std::vector<double> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) y[t] = x[t] - mu;
  return y;
}

/// Per-observation conditional log-likelihood terms log p(y_t | F_{t-1}).
inline std::vector<double> pointwise_log_likelihood(std::span<const double> x, const GjrParams& p,
                                                    const ModelOptions& opt = {}) {
  const auto y = demean(x, p.mu);
  const auto h = variance_recursion(y, p, opt);
  const StandardizedDensity dens(p.dist);
  std::vector<double> ll(y.size());
  for (std::size_t t = 0; t < y.size(); ++t)
    ll[t] = dens.log_f(y[t] / std::sqrt(h[t])) - 0.5 * std::log(h[t]);
  return ll;
}

inline double log_likelihood(std::span<const double> x, const GjrParams& p,
                             const ModelOptions& opt = {}) {
  double s = 0.0;
  for (double v : pointwise_log_likelihood(x, p, opt)) s += v;
  return s;
}

namespace detail {

/// log of N(0, var) mass on (lo, inf).
inline double log_upper_mass(double lo, double var) {
  return std::log(0.5 * std::erfc(lo / std::sqrt(2.0 * var)));
}

/// log of N(0, var) mass on (lo, hi).
inline double log_interval_mass(double lo, double hi, double var) {
  const double s = std::sqrt(2.0 * var);
  return std::log(0.5 * (std::erf(hi / s) - std::erf(lo / s)));
}

inline double log_normal_kernel(double x, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * x * x / var;
}

}  // namespace detail

/// Sum of truncated-normal log-densities; -inf outside the support.
inline double log_prior(const GjrParams& p, const PriorSpec& s, const ModelOptions& opt = {}) {
  if (!in_support(p, opt)) return kNegInf;
  using detail::log_normal_kernel;
  double lp = log_normal_kernel(p.mu, s.var_mu);
  lp += log_normal_kernel(p.omega, s.var_omega) - detail::log_upper_mass(0.0, s.var_omega);
  lp += log_normal_kernel(p.alpha, s.var_alpha) -
        detail::log_interval_mass(0.0, 1.0, s.var_alpha);
  lp += log_normal_kernel(p.phi, s.var_phi) - detail::log_interval_mass(0.0, 2.0, s.var_phi);
  lp += log_normal_kernel(p.beta, s.var_beta) -
        detail::log_interval_mass(0.0, 1.0, s.var_beta);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, StudentT>) {
          lp += log_normal_kernel(d.nu, s.var_nu) - detail::log_upper_mass(2.0, s.var_nu);
        } else if constexpr (std::is_same_v<T, Ged>) {
          lp += log_normal_kernel(d.nu, s.var_nu) - detail::log_upper_mass(0.0, s.var_nu);
        } else if constexpr (std::is_same_v<T, GeneralizedT>) {
          lp += log_normal_kernel(d.eta, s.var_eta) - detail::log_upper_mass(1.0, s.var_eta);
          lp += log_normal_kernel(d.nu, s.var_nu) -
                detail::log_upper_mass(2.0 / d.eta, s.var_nu);
        }
      },
      p.dist);
  return lp;
}

// ---------------------------------------------------------------------------
// Transformations.
//   mu* = mu, omega* = log omega, alpha* = logit alpha, beta* = logit beta,
//   phi* = log(phi / (2 - phi)),
//   t: nu* = log(nu - 2); GED: nu* = log nu; GT: eta* = log(eta - 1),
//   nu* = log(nu - 2/eta).

namespace detail {

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// log(s(x) (1 - s(x))) for the logistic s.
inline double log_logistic_jacobian(double x) { return -softplus(x) - softplus(-x); }

}  // namespace detail

struct Transformed {
  Eigen::VectorXd theta;
  double log_jacobian = 0.0;
};

/// log |d p / d theta*| evaluated from the unconstrained point.
inline double log_jacobian(const Eigen::VectorXd& th, DistKind k) {
  double lj = th[1] + detail::log_logistic_jacobian(th[2]) +
              std::log(2.0) + detail::log_logistic_jacobian(th[3]) +
              detail::log_logistic_jacobian(th[4]);
  for (std::size_t i = 0; i < shape_count(k); ++i) lj += th[kCoreParams + i];
  return lj;
}

inline Transformed transform(const GjrParams& p) {
  const DistKind k = kind_of(p.dist);
  Eigen::VectorXd th(parameter_count(k));
  th[0] = p.mu;
  th[1] = std::log(p.omega);
  th[2] = std::log(p.alpha / (1.0 - p.alpha));
  th[3] = std::log(p.phi / (2.0 - p.phi));
  th[4] = std::log(p.beta / (1.0 - p.beta));
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, StudentT>) th[5] = std::log(d.nu - 2.0);
        else if constexpr (std::is_same_v<T, Ged>) th[5] = std::log(d.nu);
        else if constexpr (std::is_same_v<T, GeneralizedT>) {
          th[5] = std::log(d.eta - 1.0);
          th[6] = std::log(d.nu - 2.0 / d.eta);
        }
      },
      p.dist);
  return {th, log_jacobian(th, k)};
}

inline GjrParams inverse_transform(const Eigen::VectorXd& th, DistKind k) {
  if (static_cast<std::size_t>(th.size()) != parameter_count(k))
    throw std::invalid_argument("unconstrained vector has wrong length");
  GjrParams p;
  p.mu = th[0];
  p.omega = std::exp(th[1]);
  p.alpha = detail::logistic(th[2]);
  p.phi = 2.0 * detail::logistic(th[3]);
  p.beta = detail::logistic(th[4]);
  switch (k) {
    case DistKind::normal: p.dist = Normal{}; break;
    case DistKind::student_t: p.dist = StudentT{2.0 + std::exp(th[5])}; break;
    case DistKind::ged: p.dist = Ged{std::exp(th[5])}; break;
    case DistKind::generalized_t: {
      const double eta = 1.0 + std::exp(th[5]);
      p.dist = GeneralizedT{eta, 2.0 / eta + std::exp(th[6])};
      break;
    }
  }
  return p;
}

/// Default starting point: sample mean, omega = 0.1 var(x), alpha = 0.05,
/// phi = 0.1, beta = 0.8, default shapes.
inline GjrParams initial_params(std::span<const double> x, DistKind k) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  const double var = detail::centered_variance(x);
  return {mean, 0.1 * (var > 0.0 ? var : 1.0), 0.05, 0.10, 0.80, default_dist(k)};
}

/// Unnormalized log-posterior of the unconstrained parameters:
/// log L + log prior + log|Jacobian|, with its analytic gradient.
class GjrPosterior {
 public:
  GjrPosterior(std::vector<double> x, DistKind kind, PriorSpec prior = {},
               ModelOptions options = {})
      : x_(std::move(x)), kind_(kind), prior_(prior), options_(options) {
    if (x_.empty()) throw DataError("empty series");
    detail::check_finite(x_);
    prior_.validate();
    sample_var_ = detail::centered_variance(x_);
  }

  std::size_t dim() const { return parameter_count(kind_); }
  DistKind kind() const { return kind_; }
  const std::vector<double>& data() const { return x_; }
  const PriorSpec& prior() const { return prior_; }
  const ModelOptions& options() const { return options_; }

  GjrParams natural(const Eigen::VectorXd& th) const { return inverse_transform(th, kind_); }

  double log_density(const Eigen::VectorXd& th) const {
    const GjrParams p = natural(th);
    const double lp = log_prior(p, prior_, options_);
    if (!std::isfinite(lp)) return kNegInf;
    const double h1 = initial_h(p);
    if (!(h1 > 0.0) || !std::isfinite(h1)) return kNegInf;
    const StandardizedDensity dens(p.dist);
    double ll = 0.0;
    double h = h1;
    double y_prev = 0.0;
    for (std::size_t t = 0; t < x_.size(); ++t) {
      if (t > 0)
        h = p.omega + (y_prev <= 0.0 ? p.alpha + p.phi : p.alpha) * y_prev * y_prev + p.beta * h;
      const double y = x_[t] - p.mu;
      ll += dens.log_f(y / std::sqrt(h)) - 0.5 * std::log(h);
      y_prev = y;
    }
    const double v = ll + lp + log_jacobian(th, kind_);
    return std::isnan(v) ? kNegInf : v;
  }

  /// Returns log density and writes its gradient into grad (resized to dim()).
  /// Outside the support the value is -inf and grad is filled with NaN.
  double log_density_and_gradient(const Eigen::VectorXd& th, Eigen::VectorXd& grad) const {
    grad.resize(static_cast<Eigen::Index>(dim()));
    const GjrParams p = natural(th);
    const double lp = log_prior(p, prior_, options_);
    const double h1 = std::isfinite(lp) ? initial_h(p) : 0.0;
    if (!std::isfinite(lp) || !(h1 > 0.0) || !std::isfinite(h1)) {
      grad.setConstant(std::numeric_limits<double>::quiet_NaN());
      return kNegInf;
    }
    const StandardizedDensity dens(p.dist);

    // Natural-space gradient of the log-likelihood: (mu, omega, alpha, phi, beta, shapes).
    std::array<double, 7> g{};
    // dh_t / d(mu, omega, alpha, phi, beta)
    std::array<double, 5> dh{};
    if (options_.initial_variance == InitialVariance::unconditional) {
      const double inv = 1.0 / (1.0 - p.persistence());
      dh = {0.0, inv, p.omega * inv * inv, 0.5 * p.omega * inv * inv, p.omega * inv * inv};
    }
    double ll = 0.0;
    double h = h1;
    double y_prev = 0.0;
    for (std::size_t t = 0; t < x_.size(); ++t) {
      if (t > 0) {
        const bool neg = y_prev <= 0.0;
        const double arch = neg ? p.alpha + p.phi : p.alpha;
        const double y2 = y_prev * y_prev;
        // Sensitivity recursion; d y_{t-1} / d mu = -1.
        dh[0] = -2.0 * arch * y_prev + p.beta * dh[0];
        dh[1] = 1.0 + p.beta * dh[1];
        dh[2] = y2 + p.beta * dh[2];
        dh[3] = (neg ? y2 : 0.0) + p.beta * dh[3];
        dh[4] = h + p.beta * dh[4];
        h = p.omega + arch * y2 + p.beta * h;
      }
      const double y = x_[t] - p.mu;
      const double sd = std::sqrt(h);
      const double e = y / sd;
      const DensityTerms dt = dens.terms(e);
      ll += dt.log_f - 0.5 * std::log(h);
      // d l_t = f'(e) (dy / sd) - (1 + f'(e) e) dh / (2h)
      const double ch = -0.5 * (1.0 + dt.d_e * e) / h;
      g[0] += -dt.d_e / sd + ch * dh[0];
      for (int j = 1; j < 5; ++j) g[j] += ch * dh[j];
      g[5] += dt.d_shape[0];
      g[6] += dt.d_shape[1];
      y_prev = y;
    }

    add_prior_gradient(p, g);
    chain_to_unconstrained(th, p, g, grad);
    const double v = ll + lp + log_jacobian(th, kind_);
    if (std::isnan(v)) {
      grad.setConstant(std::numeric_limits<double>::quiet_NaN());
      return kNegInf;
    }
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& th) const {
    Eigen::VectorXd g;
    log_density_and_gradient(th, g);
    return g;
  }

 private:
  double initial_h(const GjrParams& p) const {
    if (options_.initial_variance == InitialVariance::sample_variance) return sample_var_;
    const double denom = 1.0 - p.persistence();
    return denom > 0.0 ? p.omega / denom : std::numeric_limits<double>::quiet_NaN();
  }

  void add_prior_gradient(const GjrParams& p, std::array<double, 7>& g) const {
    g[0] += -p.mu / prior_.var_mu;
    g[1] += -p.omega / prior_.var_omega;
    g[2] += -p.alpha / prior_.var_alpha;
    g[3] += -p.phi / prior_.var_phi;
    g[4] += -p.beta / prior_.var_beta;
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, StudentT> || std::is_same_v<T, Ged>) {
            g[5] += -d.nu / prior_.var_nu;
          } else if constexpr (std::is_same_v<T, GeneralizedT>) {
            g[5] += -d.eta / prior_.var_eta;
            g[6] += -d.nu / prior_.var_nu;
            // The nu truncation point 2/eta moves with eta:
            // d/deta [-log Z(c)] with c = 2/eta, Z(c) = P(N(0, var) > c).
            const double c = 2.0 / d.eta;
            const double var = prior_.var_nu;
            const double log_z = detail::log_upper_mass(c, var);
            const double dlogz_dc =
                -std::exp(-0.5 * c * c / var - log_z) / std::sqrt(2.0 * std::numbers::pi * var);
            g[5] += -dlogz_dc * (-2.0 / (d.eta * d.eta));
          }
        },
        p.dist);
  }

  void chain_to_unconstrained(const Eigen::VectorXd& th, const GjrParams& p,
                              const std::array<double, 7>& g, Eigen::VectorXd& out) const {
    out[0] = g[0];
    out[1] = g[1] * p.omega + 1.0;
    out[2] = g[2] * p.alpha * (1.0 - p.alpha) + (1.0 - 2.0 * p.alpha);
    out[3] = g[3] * 0.5 * p.phi * (2.0 - p.phi) + (1.0 - p.phi);
    out[4] = g[4] * p.beta * (1.0 - p.beta) + (1.0 - 2.0 * p.beta);
    switch (kind_) {
      case DistKind::normal: break;
      case DistKind::student_t: out[5] = g[5] * std::exp(th[5]) + 1.0; break;
      case DistKind::ged: out[5] = g[5] * std::exp(th[5]) + 1.0; break;
      case DistKind::generalized_t: {
        const auto& d = std::get<GeneralizedT>(p.dist);
        const double deta = d.eta - 1.0;  // d eta / d eta*
        out[5] = g[5] * deta + g[6] * (-2.0 / (d.eta * d.eta)) * deta + 1.0;
        out[6] = g[6] * std::exp(th[6]) + 1.0;
        break;
      }
    }
  }

  std::vector<double> x_;
  DistKind kind_;
  PriorSpec prior_;
  ModelOptions options_;
  double sample_var_ = 1.0;
};

}  // namespace zvgarch
