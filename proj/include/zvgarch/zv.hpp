#pragma once

// Zero-variance post-processing of chain averages.
//
// With z = -grad(log pi)/2 and a polynomial P, f~ = f - lap(P)/2 + grad(P).z
// has the same expectation as f. Linear P gives f~ = f + a'z; quadratic
// P = a'th + th'B th/2 gives f~ = f - tr(B)/2 + (a + B th)'z.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zvgarch/errors.hpp"
#include "zvgarch/mcse.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/samplers.hpp"

namespace zvgarch {

/// Condition number above which the regression falls back to a ridge solve.
inline constexpr double kZvMaxCondition = 1e10;

struct ControlVariates {
  Eigen::MatrixXd z;  // N x d
};

inline ControlVariates control_variates(const ChainSample& chain) {
  if (!chain.has_gradients()) throw ConfigError("chain carries no per-draw gradients");
  ControlVariates cv{-0.5 * chain.gradients};
  if (!cv.z.allFinite()) throw NumericalError("non-finite gradient in chain");
  return cv;
}

enum class QuadraticBasis {
  full,      // B symmetric with cross terms
  diagonal,  // B diagonal
};

struct LinearFit {
  Eigen::VectorXd a;
  double condition = 1.0;
  std::vector<std::string> warnings;
};

struct QuadraticFit {
  Eigen::VectorXd a;
  Eigen::MatrixXd B;
  QuadraticBasis basis = QuadraticBasis::full;
  double condition = 1.0;
  std::vector<std::string> warnings;

  /// Number of free coefficients in the expanded basis.
  std::size_t basis_size() const {
    const auto d = static_cast<std::size_t>(a.size());
    return basis == QuadraticBasis::full ? d + d * (d + 1) / 2 : 2 * d;
  }
};

namespace detail {

inline Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
  return x.rowwise() - x.colwise().mean();
}

inline void check_fit_inputs(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& z,
                             const Eigen::VectorXd& f, Eigen::Index basis) {
  if (theta.rows() != z.rows() || theta.cols() != z.cols() || f.size() != z.rows())
    throw ConfigError("draws, control variates and target values disagree in size");
  if (z.rows() <= basis + 1)
    throw ConfigError("need more draws (" + std::to_string(z.rows()) + ") than basis functions (" +
                      std::to_string(basis) + ")");
  if (!f.allFinite()) throw NumericalError("non-finite target function value");
}

/// Minimizes the sample variance of f + X c over c. Columns are centered and
/// scaled before an SVD; with a poorly conditioned design a ridge penalty is
/// added and a warning recorded.
inline Eigen::VectorXd variance_minimizing_coefficients(const Eigen::MatrixXd& x,
                                                        const Eigen::VectorXd& f, double& condition,
                                                        std::vector<std::string>& warnings) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd xc = centered(x);
  const Eigen::VectorXd fc = f.array() - f.mean();
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale[j] = xc.col(j).norm();
    if (scale[j] > 0.0) xc.col(j) /= scale[j];
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  const double smin = s.size() > 0 ? s[s.size() - 1] : 0.0;
  condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  Eigen::VectorXd filter(s.size());
  if (condition <= kZvMaxCondition) {
    for (Eigen::Index i = 0; i < s.size(); ++i) filter[i] = 1.0 / s[i];
  } else {
    const double lambda = smax * smax / kZvMaxCondition;
    for (Eigen::Index i = 0; i < s.size(); ++i) filter[i] = s[i] / (s[i] * s[i] + lambda);
    warnings.push_back("control-variate design is ill-conditioned (condition number " +
                       std::to_string(condition) + "); ridge-regularized solve used");
  }
  const Eigen::VectorXd beta =
      svd.matrixV() * (filter.asDiagonal() * (svd.matrixU().transpose() * fc));
  Eigen::VectorXd c(p);
  for (Eigen::Index j = 0; j < p; ++j) c[j] = scale[j] > 0.0 ? -beta[j] / scale[j] : 0.0;
  return c;
}

}  // namespace detail

/// Expanded covariates for the quadratic polynomial: z_i, then th_i z_i - 1/2
/// for each i, then th_i z_j + th_j z_i for i < j (full basis only).
inline Eigen::MatrixXd quadratic_covariates(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& z,
                                            QuadraticBasis basis) {
  const Eigen::Index n = z.rows(), d = z.cols();
  const Eigen::Index p = basis == QuadraticBasis::full ? d + d * (d + 1) / 2 : 2 * d;
  Eigen::MatrixXd x(n, p);
  x.leftCols(d) = z;
  Eigen::Index col = d;
  for (Eigen::Index i = 0; i < d; ++i)
    x.col(col++) = theta.col(i).cwiseProduct(z.col(i)).array() - 0.5;
  if (basis == QuadraticBasis::full)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j)
        x.col(col++) = theta.col(i).cwiseProduct(z.col(j)) + theta.col(j).cwiseProduct(z.col(i));
  return x;
}

/// a = -Var(z)^{-1} Cov(z, f) from sample moments.
inline LinearFit fit_linear(const Eigen::MatrixXd& z, const Eigen::VectorXd& f) {
  detail::check_fit_inputs(z, z, f, z.cols());
  const double n1 = static_cast<double>(z.rows() - 1);
  const Eigen::MatrixXd zc = detail::centered(z);
  const Eigen::MatrixXd var = zc.transpose() * zc / n1;
  const Eigen::VectorXd cov = zc.transpose() * (f.array() - f.mean()).matrix() / n1;

  LinearFit fit;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(var);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double emax = ev.maxCoeff(), emin = ev.minCoeff();
  fit.condition = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
  if (emax <= 0.0) {
    fit.a = Eigen::VectorXd::Zero(z.cols());
    fit.warnings.push_back("control variates have zero variance; coefficients set to zero");
    return fit;
  }
  if (fit.condition <= kZvMaxCondition) {
    fit.a = -var.ldlt().solve(cov);
  } else {
    const double lambda = emax / kZvMaxCondition;
    fit.a = -(var + lambda * Eigen::MatrixXd::Identity(var.rows(), var.cols())).ldlt().solve(cov);
    fit.warnings.push_back("Var(z) is near-singular (condition number " + std::to_string(fit.condition) +
                           "); ridge-regularized solve used");
  }
  return fit;
}

inline LinearFit fit_linear(const ChainSample& chain, const Eigen::VectorXd& f) {
  return fit_linear(control_variates(chain).z, f);
}

inline QuadraticFit fit_quadratic(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& z,
                                  const Eigen::VectorXd& f,
                                  QuadraticBasis basis = QuadraticBasis::full) {
  const Eigen::Index d = z.cols();
  const Eigen::MatrixXd x = quadratic_covariates(theta, z, basis);
  detail::check_fit_inputs(theta, z, f, x.cols());
  QuadraticFit fit;
  fit.basis = basis;
  const Eigen::VectorXd c = detail::variance_minimizing_coefficients(x, f, fit.condition, fit.warnings);
  fit.a = c.head(d);
  fit.B = Eigen::MatrixXd::Zero(d, d);
  Eigen::Index col = d;
  for (Eigen::Index i = 0; i < d; ++i) fit.B(i, i) = c[col++];
  if (basis == QuadraticBasis::full)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j) fit.B(i, j) = fit.B(j, i) = c[col++];
  return fit;
}

inline QuadraticFit fit_quadratic(const ChainSample& chain, const Eigen::VectorXd& f,
                                  QuadraticBasis basis = QuadraticBasis::full) {
  return fit_quadratic(chain.draws, control_variates(chain).z, f, basis);
}

/// f + a'z per draw.
inline Eigen::VectorXd apply_linear(const Eigen::MatrixXd& z, const Eigen::VectorXd& f,
                                    const LinearFit& fit) {
  return f + z * fit.a;
}

/// f - tr(B)/2 + (a + B th)'z per draw.
inline Eigen::VectorXd apply_quadratic(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& z,
                                       const Eigen::VectorXd& f, const QuadraticFit& fit) {
  const Eigen::MatrixXd grad_p = (theta * fit.B).rowwise() + fit.a.transpose();
  return (f + grad_p.cwiseProduct(z).rowwise().sum()).array() - 0.5 * fit.B.trace();
}

struct ZvEstimate {
  double raw_mean = 0.0, raw_se = 0.0;
  double linear_mean = 0.0, linear_se = 0.0;
  double quadratic_mean = 0.0, quadratic_se = 0.0;
  LinearFit linear;
  QuadraticFit quadratic;
  /// Coefficients were fitted on the draws they are applied to.
  bool same_chain = false;
};

inline ZvEstimate apply(const ChainSample& chain, const LinearFit& lin, const QuadraticFit& quad,
                        const Eigen::VectorXd& f, bool same_chain = false) {
  const Eigen::MatrixXd z = control_variates(chain).z;
  if (f.size() != z.rows()) throw ConfigError("target values do not match chain length");
  if (lin.a.size() != z.cols() || quad.a.size() != z.cols())
    throw ConfigError("coefficient dimension does not match chain dimension");
  ZvEstimate est;
  est.linear = lin;
  est.quadratic = quad;
  est.same_chain = same_chain;
  est.raw_mean = f.mean();
  est.raw_se = batch_means_se(f);
  const Eigen::VectorXd fl = apply_linear(z, f, lin);
  est.linear_mean = fl.mean();
  est.linear_se = batch_means_se(fl);
  const Eigen::VectorXd fq = apply_quadratic(chain.draws, z, f, quad);
  est.quadratic_mean = fq.mean();
  est.quadratic_se = batch_means_se(fq);
  if (same_chain) {
    est.linear.warnings.push_back("coefficients fitted and applied on the same draws");
    est.quadratic.warnings.push_back("coefficients fitted and applied on the same draws");
  }
  return est;
}

/// Natural-space parameter values of every draw (N x k).
inline Eigen::MatrixXd natural_draws(const ChainSample& chain, DistKind k) {
  Eigen::MatrixXd out(chain.draws.rows(), chain.draws.cols());
  for (Eigen::Index l = 0; l < chain.draws.rows(); ++l)
    out.row(l) = to_vector(inverse_transform(chain.draws.row(l).transpose(), k)).transpose();
  return out;
}

struct ZvReport {
  std::vector<std::string> names;
  std::vector<ZvEstimate> estimates;
};

/// Fits on `fit_chain` and estimates on `est_chain`, one target per column of
/// the value matrices.
inline ZvReport zv_report(const ChainSample& fit_chain, const Eigen::MatrixXd& fit_values,
                          const ChainSample& est_chain, const Eigen::MatrixXd& est_values,
                          std::vector<std::string> names,
                          QuadraticBasis basis = QuadraticBasis::full) {
  if (fit_values.cols() != est_values.cols() || names.size() != static_cast<std::size_t>(fit_values.cols()))
    throw ConfigError("target function sets disagree");
  const bool same = &fit_chain == &est_chain;
  const Eigen::MatrixXd z = control_variates(fit_chain).z;
  ZvReport report{std::move(names), {}};
  for (Eigen::Index j = 0; j < fit_values.cols(); ++j) {
    const Eigen::VectorXd f = fit_values.col(j);
    const auto lin = fit_linear(z, f);
    const auto quad = fit_quadratic(fit_chain.draws, z, f, basis);
    report.estimates.push_back(apply(est_chain, lin, quad, est_values.col(j), same));
  }
  return report;
}

/// Two-chain protocol on GJR-GARCH natural parameters.
inline ZvReport zv_report(const ChainSample& fit_chain, const ChainSample& est_chain, DistKind k,
                          QuadraticBasis basis = QuadraticBasis::full) {
  return zv_report(fit_chain, natural_draws(fit_chain, k), est_chain, natural_draws(est_chain, k),
                   parameter_names(k), basis);
}

/// Splits a chain into two halves: the first fits, the second estimates.
inline std::pair<ChainSample, ChainSample> split_chain(const ChainSample& chain) {
  const Eigen::Index h = chain.draws.rows() / 2;
  if (h < 2) throw ConfigError("chain too short to split");
  ChainSample a = chain, b = chain;
  a.draws = chain.draws.topRows(h);
  a.log_posterior = chain.log_posterior.head(h);
  a.gradients = chain.gradients.topRows(h);
  const Eigen::Index r = chain.draws.rows() - h;
  b.draws = chain.draws.bottomRows(r);
  b.log_posterior = chain.log_posterior.tail(r);
  b.gradients = chain.gradients.bottomRows(r);
  return {std::move(a), std::move(b)};
}

}  // namespace zvgarch
