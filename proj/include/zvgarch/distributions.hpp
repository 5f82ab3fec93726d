#pragma once

// Standardized (zero mean, unit variance) error densities used by the
// GJR-GARCH likelihood: Normal, Student-t, GED and Generalized-t.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "zvgarch/errors.hpp"

namespace zvgarch {

struct Normal {};

/// Student-t rescaled to unit variance; requires nu > 2.
struct StudentT {
  double nu = 8.0;
};

/// Generalized error distribution; nu = 2 is the Normal, nu = 1 the Laplace.
struct Ged {
  double nu = 2.0;
};

/// Generalized-t (McDonald-Newey) rescaled to unit variance.
/// Requires eta > 1 and nu > 2 / eta (finite variance).
struct GeneralizedT {
  double eta = 2.0;
  double nu = 8.0;
};

using ErrorDist = std::variant<Normal, StudentT, Ged, GeneralizedT>;

enum class DistKind { normal, student_t, ged, generalized_t };

inline constexpr std::array<DistKind, 4> kAllDistKinds = {
    DistKind::normal, DistKind::student_t, DistKind::ged,
    DistKind::generalized_t};

inline DistKind kind_of(const ErrorDist& d) {
  return static_cast<DistKind>(d.index());
}

inline std::string_view to_string(DistKind k) {
  switch (k) {
    case DistKind::normal: return "normal";
    case DistKind::student_t: return "t";
    case DistKind::ged: return "ged";
    case DistKind::generalized_t: return "gt";
  }
  return "?";
}

inline DistKind parse_dist_kind(std::string_view s) {
  if (s == "normal" || s == "norm" || s == "gaussian") return DistKind::normal;
  if (s == "t" || s == "student" || s == "student-t") return DistKind::student_t;
  if (s == "ged") return DistKind::ged;
  if (s == "gt" || s == "generalized-t") return DistKind::generalized_t;
  throw std::invalid_argument("unknown error distribution '" + std::string(s) +
                              "' (expected normal, t, ged or gt)");
}

/// Number of shape parameters carried by a distribution family.
inline std::size_t shape_count(DistKind k) {
  switch (k) {
    case DistKind::normal: return 0;
    case DistKind::student_t:
    case DistKind::ged: return 1;
    case DistKind::generalized_t: return 2;
  }
  return 0;
}

/// Shape parameter names in storage order. GT stores (eta, nu).
inline std::vector<std::string> shape_names(DistKind k) {
  switch (k) {
    case DistKind::normal: return {};
    case DistKind::student_t:
    case DistKind::ged: return {"nu"};
    case DistKind::generalized_t: return {"eta", "nu"};
  }
  return {};
}

inline std::vector<double> shape_values(const ErrorDist& d) {
  return std::visit(
      [](const auto& v) -> std::vector<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Normal>) return {};
        else if constexpr (std::is_same_v<T, GeneralizedT>) return {v.eta, v.nu};
        else return {v.nu};
      },
      d);
}

/// Throws DomainError naming the violated bound.
inline void validate(const ErrorDist& d) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StudentT>) {
          if (!(v.nu > 2.0))
            throw DomainError("Student-t requires nu > 2, got nu = " + std::to_string(v.nu));
        } else if constexpr (std::is_same_v<T, Ged>) {
          if (!(v.nu > 0.0))
            throw DomainError("GED requires nu > 0, got nu = " + std::to_string(v.nu));
        } else if constexpr (std::is_same_v<T, GeneralizedT>) {
          if (!(v.eta > 1.0))
            throw DomainError("generalized-t requires eta > 1, got eta = " + std::to_string(v.eta));
          if (!(v.nu > 2.0 / v.eta))
            throw DomainError("generalized-t requires nu > 2/eta, got nu = " +
                              std::to_string(v.nu) + " with eta = " + std::to_string(v.eta));
        }
      },
      d);
}

inline bool is_valid(const ErrorDist& d) {
  try {
    validate(d);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

inline ErrorDist make_dist(DistKind k, std::span<const double> shapes) {
  if (shapes.size() != shape_count(k))
    throw std::invalid_argument("wrong number of shape parameters for " +
                                std::string(to_string(k)));
  switch (k) {
    case DistKind::normal: return Normal{};
    case DistKind::student_t: return StudentT{shapes[0]};
    case DistKind::ged: return Ged{shapes[0]};
    case DistKind::generalized_t: return GeneralizedT{shapes[0], shapes[1]};
  }
  return Normal{};
}

/// Default shapes used to initialise samplers.
inline ErrorDist default_dist(DistKind k) {
  switch (k) {
    case DistKind::normal: return Normal{};
    case DistKind::student_t: return StudentT{8.0};
    case DistKind::ged: return Ged{2.0};
    case DistKind::generalized_t: return GeneralizedT{2.0, 8.0};
  }
  return Normal{};
}

/// log f(e) together with d/de and d/dshape (shape order as in shape_names).
struct DensityTerms {
  double log_f = 0.0;
  double d_e = 0.0;
  std::array<double, 2> d_shape{0.0, 0.0};
};

namespace detail {

inline double digamma(double x) { return boost::math::digamma(x); }

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Shape-dependent constants are evaluated once per parameter value; the
/// likelihood then calls terms(e) for every observation.
class NormalKernel {
 public:
  DensityTerms terms(double e) const {
    return {-kLogSqrt2Pi - 0.5 * e * e, -e, {0.0, 0.0}};
  }
  double log_f(double e) const { return -kLogSqrt2Pi - 0.5 * e * e; }
};

class StudentTKernel {
 public:
  explicit StudentTKernel(double nu) : nu_(nu) {
    const double nm2 = nu - 2.0;
    log_norm_ = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                0.5 * std::log(std::numbers::pi * nm2);
    d_log_norm_ = 0.5 * digamma(0.5 * (nu + 1.0)) - 0.5 * digamma(0.5 * nu) -
                  0.5 / nm2;
  }

  double log_f(double e) const {
    return log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(e * e / (nu_ - 2.0));
  }

  DensityTerms terms(double e) const {
    const double nm2 = nu_ - 2.0;
    const double e2 = e * e;
    const double l1p = std::log1p(e2 / nm2);
    DensityTerms t;
    t.log_f = log_norm_ - 0.5 * (nu_ + 1.0) * l1p;
    t.d_e = -(nu_ + 1.0) * e / (nm2 + e2);
    t.d_shape[0] = d_log_norm_ - 0.5 * l1p + 0.5 * (nu_ + 1.0) * e2 / (nm2 * (nm2 + e2));
    return t;
  }

 private:
  double nu_;
  double log_norm_;
  double d_log_norm_;
};

class GedKernel {
 public:
  explicit GedKernel(double nu) : nu_(nu) {
    const double inv = 1.0 / nu;
    log_lambda_ = 0.5 * (-2.0 * inv * std::numbers::ln2 + std::lgamma(inv) -
                         std::lgamma(3.0 * inv));
    d_log_lambda_ = 0.5 * inv * inv *
                    (2.0 * std::numbers::ln2 - digamma(inv) + 3.0 * digamma(3.0 * inv));
    log_norm_ = std::log(nu) - log_lambda_ - (1.0 + inv) * std::numbers::ln2 -
                std::lgamma(inv);
    d_log_norm_ = inv - d_log_lambda_ + inv * inv * std::numbers::ln2 +
                  inv * inv * digamma(inv);
  }

  double log_f(double e) const {
    if (e == 0.0) return log_norm_;
    const double log_u = std::log(std::abs(e)) - log_lambda_;
    return log_norm_ - 0.5 * std::exp(nu_ * log_u);
  }

  DensityTerms terms(double e) const {
    DensityTerms t;
    t.d_shape[0] = d_log_norm_;
    t.log_f = log_norm_;
    // |e|^nu term has a kink at zero; its gradient there is taken as 0.
    if (e == 0.0) return t;
    const double log_u = std::log(std::abs(e)) - log_lambda_;
    const double u_nu = std::exp(nu_ * log_u);
    t.log_f -= 0.5 * u_nu;
    t.d_e = -0.5 * nu_ * u_nu / e;
    t.d_shape[0] -= 0.5 * u_nu * (log_u - nu_ * d_log_lambda_);
    return t;
  }

 private:
  double nu_;
  double log_lambda_;
  double d_log_lambda_;
  double log_norm_;
  double d_log_norm_;
};

/// Unit-variance generalized-t: e = X / s where X has the unit-scale
/// density g and s^2 = Var X. With a = 1/eta,
///   log s = a log nu + (lgamma(3a) + lgamma(nu - 2a) - lgamma(a) - lgamma(nu)) / 2
///   log f(e) = log eta - log 2 - a log nu - log B(a, nu) + log s
///              - (nu + a) log(1 + w / nu),   w = (s |e|)^eta.
class GeneralizedTKernel {
 public:
  GeneralizedTKernel(double eta, double nu) : eta_(eta), nu_(nu), a_(1.0 / eta) {
    const double a = a_;
    const double log_nu = std::log(nu);
    log_s_ = a * log_nu +
             0.5 * (std::lgamma(3.0 * a) + std::lgamma(nu - 2.0 * a) -
                    std::lgamma(a) - std::lgamma(nu));
    dls_da_ = log_nu + 0.5 * (3.0 * digamma(3.0 * a) - 2.0 * digamma(nu - 2.0 * a) -
                              digamma(a));
    dls_dnu_ = a / nu + 0.5 * (digamma(nu - 2.0 * a) - digamma(nu));
    const double log_beta = std::lgamma(a) + std::lgamma(nu) - std::lgamma(a + nu);
    log_norm_ = std::log(eta) - std::numbers::ln2 - a * log_nu - log_beta + log_s_;
    const double psi_anu = digamma(a + nu);
    // Partials of log_norm_ in (a, nu) at fixed eta; eta enters explicitly via log(eta).
    dnorm_da_ = -log_nu - (digamma(a) - psi_anu) + dls_da_;
    dnorm_dnu_ = -a / nu - (digamma(nu) - psi_anu) + dls_dnu_;
  }

  double log_f(double e) const {
    if (e == 0.0) return log_norm_;
    const double log_u = std::log(std::abs(e)) + log_s_;
    const double w = std::exp(eta_ * log_u);
    return log_norm_ - (nu_ + a_) * std::log1p(w / nu_);
  }

  DensityTerms terms(double e) const {
    double w = 0.0;
    double w_log_u = 0.0;
    if (e != 0.0) {
      const double log_u = std::log(std::abs(e)) + log_s_;
      w = std::exp(eta_ * log_u);
      w_log_u = w * log_u;
    }
    const double l1p = std::log1p(w / nu_);
    const double k = (nu_ + a_) / (nu_ + w);

    DensityTerms t;
    t.log_f = log_norm_ - (nu_ + a_) * l1p;
    t.d_e = (e == 0.0) ? 0.0 : -k * eta_ * w / e;

    // dw/da = eta w dls/da ; dw/dnu = eta w dls/dnu ; dw/deta|explicit = w log u
    const double df_da = dnorm_da_ - l1p - k * eta_ * w * dls_da_;
    const double df_deta_explicit = 1.0 / eta_ - k * w_log_u;
    const double df_dnu = dnorm_dnu_ - l1p - k * (eta_ * w * dls_dnu_ - w / nu_);
    t.d_shape[0] = df_deta_explicit - df_da * a_ * a_;
    t.d_shape[1] = df_dnu;
    return t;
  }

 private:
  double eta_;
  double nu_;
  double a_;
  double log_s_;
  double dls_da_;
  double dls_dnu_;
  double log_norm_;
  double dnorm_da_;
  double dnorm_dnu_;
};

}  // namespace detail

/// Precomputed density for one parameter value. Construction validates.
class StandardizedDensity {
 public:
  explicit StandardizedDensity(const ErrorDist& d) : kind_(kind_of(d)) {
    validate(d);
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Normal>) kernel_ = detail::NormalKernel{};
          else if constexpr (std::is_same_v<T, StudentT>) kernel_ = detail::StudentTKernel{v.nu};
          else if constexpr (std::is_same_v<T, Ged>) kernel_ = detail::GedKernel{v.nu};
          else kernel_ = detail::GeneralizedTKernel{v.eta, v.nu};
        },
        d);
  }

  DistKind kind() const { return kind_; }

  double log_f(double e) const {
    return std::visit([e](const auto& k) { return k.log_f(e); }, kernel_);
  }

  DensityTerms terms(double e) const {
    return std::visit([e](const auto& k) { return k.terms(e); }, kernel_);
  }

 private:
  DistKind kind_;
  std::variant<detail::NormalKernel, detail::StudentTKernel, detail::GedKernel,
               detail::GeneralizedTKernel>
      kernel_;
};

inline double log_density(double e, const ErrorDist& d) {
  return StandardizedDensity(d).log_f(e);
}

struct DensityGradient {
  double d_e = 0.0;
  std::vector<double> d_shape;
};

inline DensityGradient log_density_grad(double e, const ErrorDist& d) {
  const auto t = StandardizedDensity(d).terms(e);
  DensityGradient g{t.d_e, {}};
  const auto m = shape_count(kind_of(d));
  g.d_shape.assign(t.d_shape.begin(), t.d_shape.begin() + static_cast<std::ptrdiff_t>(m));
  return g;
}

/// Standard deviation of the unit-scale generalized-t density.
inline double generalized_t_scale(double eta, double nu) {
  const double a = 1.0 / eta;
  return std::exp(a * std::log(nu) +
                  0.5 * (std::lgamma(3.0 * a) + std::lgamma(nu - 2.0 * a) -
                         std::lgamma(a) - std::lgamma(nu)));
}

/// Excess kurtosis of the GED.
inline double ged_excess_kurtosis(double nu) {
  return std::exp(std::lgamma(1.0 / nu) + std::lgamma(5.0 / nu) -
                  2.0 * std::lgamma(3.0 / nu)) -
         3.0;
}

/// Exact draw from the standardized distribution.
template <class Rng>
double sample(const ErrorDist& d, Rng& rng) {
  validate(d);
  return std::visit(
      [&rng](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        std::normal_distribution<double> normal;
        if constexpr (std::is_same_v<T, Normal>) {
          return normal(rng);
        } else if constexpr (std::is_same_v<T, StudentT>) {
          std::student_t_distribution<double> t(v.nu);
          return t(rng) * std::sqrt((v.nu - 2.0) / v.nu);
        } else if constexpr (std::is_same_v<T, Ged>) {
          // |e| = lambda * G^{1/nu} with G ~ Gamma(1/nu, scale 2).
          const double lambda = std::exp(
              0.5 * (-2.0 / v.nu * std::numbers::ln2 + std::lgamma(1.0 / v.nu) -
                     std::lgamma(3.0 / v.nu)));
          std::gamma_distribution<double> gamma(1.0 / v.nu, 2.0);
          const double mag = lambda * std::pow(gamma(rng), 1.0 / v.nu);
          std::bernoulli_distribution coin(0.5);
          return coin(rng) ? mag : -mag;
        } else {
          // |X| = (nu G / B)^{1/eta}, G ~ Gamma(1/eta), B ~ Gamma(nu).
          std::gamma_distribution<double> g(1.0 / v.eta, 1.0);
          std::gamma_distribution<double> b(v.nu, 1.0);
          const double gv = g(rng);
          const double bv = b(rng);
          const double mag = std::pow(v.nu * gv / bv, 1.0 / v.eta) /
                             generalized_t_scale(v.eta, v.nu);
          std::bernoulli_distribution coin(0.5);
          return coin(rng) ? mag : -mag;
        }
      },
      d);
}

}  // namespace zvgarch
