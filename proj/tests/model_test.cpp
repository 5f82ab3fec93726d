#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "zvgarch/model.hpp"
#include "zvgarch/simulate.hpp"

namespace zvgarch {
namespace {

GjrParams truth(ErrorDist d = Normal{}) { return {0.0, 0.05, 0.05, 0.10, 0.85, d}; }

std::vector<double> noise_series(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  for (auto& v : x) v = scale * z(rng);
  return x;
}

TEST(VarianceRecursion, ZeroReturnGivesOmegaPlusBeta) {
  // h1 = omega / (1 - 0.95) = 1 under the unconditional policy.
  const auto h = variance_recursion(std::vector<double>{0.0, 0.3}, truth());
  EXPECT_NEAR(h[0], 1.0, 1e-14);
  EXPECT_NEAR(h[1], 0.90, 1e-14);
}

TEST(VarianceRecursion, IndicatorFiresOnNonPositiveReturns) {
  auto p = truth();
  EXPECT_NEAR(variance_recursion(std::vector<double>{-1.0, 0.0}, p)[1], 1.05, 1e-14);
  EXPECT_NEAR(variance_recursion(std::vector<double>{1.0, 0.0}, p)[1], 0.95, 1e-14);

  // Brute force over a random series.
  const auto y = noise_series(50, 3);
  const auto h = variance_recursion(y, p);
  double hb = p.omega / (1.0 - 0.95);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double ind = y[t - 1] <= 0.0 ? 1.0 : 0.0;
    hb = p.omega + (p.alpha + p.phi * ind) * y[t - 1] * y[t - 1] + p.beta * hb;
    EXPECT_NEAR(h[t], hb, 1e-12 * hb);
  }
}

TEST(VarianceRecursion, DegenerateRecursionIsConstant) {
  GjrParams p{0.0, 0.7, 0.0, 0.0, 0.0, Normal{}};
  const auto h = variance_recursion(noise_series(20, 1), p);
  for (std::size_t t = 1; t < h.size(); ++t) EXPECT_DOUBLE_EQ(h[t], 0.7);
}

TEST(VarianceRecursion, NonFiniteObservationReportsIndex) {
  std::vector<double> y{0.1, 0.2, std::nan(""), 0.3};
  try {
    variance_recursion(y, truth());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos);
  }
}

TEST(VarianceRecursion, PositiveOnRandomSupportPoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto y = noise_series(300, 4, 3.0);
  for (int i = 0; i < 100; ++i) {
    GjrParams p{0.0, 0.01 + u(rng), 0.3 * u(rng), 0.5 * u(rng), 0.6 * u(rng), Normal{}};
    for (double h : variance_recursion(y, p)) EXPECT_GT(h, 0.0);
  }
}

TEST(LogLikelihood, SingleObservation) {
  const std::vector<double> x{0.0};
  EXPECT_NEAR(log_likelihood(x, truth()), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(LogLikelihood, MatchesDirectNormalEvaluation) {
  const auto x = noise_series(200, 8, 1.3);
  GjrParams p{0.1, 0.05, 0.05, 0.10, 0.85, Normal{}};
  // Independent evaluation with the textbook Normal density of y_t given h_t.
  double expected = 0.0;
  double h = p.unconditional_variance();
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (t > 0) {
      const double yp = x[t - 1] - p.mu;
      h = p.omega + (p.alpha + (yp <= 0 ? p.phi : 0.0)) * yp * yp + p.beta * h;
    }
    const double y = x[t] - p.mu;
    expected += -0.5 * std::log(2 * std::numbers::pi * h) - y * y / (2 * h);
  }
  EXPECT_NEAR(log_likelihood(x, p), expected, 1e-9);
}

TEST(LogLikelihood, GedTwoEqualsNormal) {
  const auto x = noise_series(300, 9);
  EXPECT_NEAR(log_likelihood(x, truth(Ged{2.0})), log_likelihood(x, truth()), 1e-9);
}

TEST(LogPrior, ClosedFormTerms) {
  const double v = 1000.0;
  const double base = -0.5 * std::log(2 * std::numbers::pi * v);
  // Isolate the mu term: compare two mu values; the difference is quadratic.
  auto p = truth();
  const auto s = PriorSpec::with_variance(v);
  const double lp0 = log_prior(p, s);
  p.mu = 1.0;
  EXPECT_NEAR(log_prior(p, s) - lp0, -1.0 / (2 * v), 1e-12);

  // Full sum evaluated by hand.
  p = truth();
  auto interval = [v](double hi) { return 0.5 * std::erf(hi / std::sqrt(2 * v)); };
  const double expected = base                                              // mu = 0
                          + base - 0.05 * 0.05 / (2 * v) - std::log(0.5)    // omega
                          + base - 0.05 * 0.05 / (2 * v) - std::log(interval(1.0))
                          + base - 0.10 * 0.10 / (2 * v) - std::log(interval(2.0))
                          + base - 0.85 * 0.85 / (2 * v) - std::log(interval(1.0));
  EXPECT_NEAR(log_prior(p, s), expected, 1e-12);
}

TEST(LogPrior, OutsideSupportIsMinusInfinity) {
  auto p = truth();
  p.alpha = 1.5;
  EXPECT_EQ(log_prior(p, {}), kNegInf);
  p = truth();
  p.beta = 0.95;  // persistence 1.05
  EXPECT_EQ(log_prior(p, {}), kNegInf);
  EXPECT_TRUE(std::isfinite(log_prior(p, {}, ModelOptions{InitialVariance::unconditional, false})));
  p = truth(StudentT{1.9});
  EXPECT_EQ(log_prior(p, {}), kNegInf);
}

TEST(Transform, FixedPoints) {
  GjrParams p{0.0, 1.0, 0.5, 1.0, 0.5, Normal{}};
  const auto t = transform(p);
  EXPECT_DOUBLE_EQ(t.theta[1], 0.0);
  EXPECT_DOUBLE_EQ(t.theta[2], 0.0);
  EXPECT_DOUBLE_EQ(t.theta[3], 0.0);
  EXPECT_DOUBLE_EQ(t.theta[4], 0.0);
}

TEST(Transform, RoundTripOnRandomUnconstrainedPoints) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z(0.0, 2.0);
  for (DistKind k : kAllDistKinds) {
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd th(static_cast<Eigen::Index>(parameter_count(k)));
      for (auto& v : th) v = z(rng);
      const auto back = transform(inverse_transform(th, k)).theta;
      EXPECT_LT((back - th).cwiseAbs().maxCoeff(), 1e-12) << to_string(k);
    }
  }
}

TEST(Transform, LogJacobianMatchesNumericalDeterminant) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z(0.0, 1.0);
  for (DistKind k : kAllDistKinds) {
    const auto d = static_cast<Eigen::Index>(parameter_count(k));
    Eigen::VectorXd th(d);
    for (auto& v : th) v = z(rng);
    Eigen::MatrixXd jac(d, d);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::VectorXd up = th, dn = th;
      up[j] += h;
      dn[j] -= h;
      jac.col(j) = (to_vector(inverse_transform(up, k)) - to_vector(inverse_transform(dn, k))) / (2 * h);
    }
    EXPECT_NEAR(std::log(std::abs(jac.determinant())), log_jacobian(th, k), 1e-6) << to_string(k);
    EXPECT_NEAR(transform(inverse_transform(th, k)).log_jacobian, log_jacobian(th, k), 1e-10);
  }
}

TEST(Posterior, ComposesTermByTerm) {
  const auto x = noise_series(150, 21);
  for (DistKind k : kAllDistKinds) {
    GjrPosterior post(x, k, PriorSpec::with_variance(100.0));
    GjrParams p = truth(default_dist(k));
    p.mu = 0.02;
    const auto t = transform(p);
    const double expected = log_likelihood(x, p) + log_prior(p, post.prior()) + t.log_jacobian;
    EXPECT_NEAR(post.log_density(t.theta), expected, 1e-9) << to_string(k);
    Eigen::VectorXd g;
    EXPECT_NEAR(post.log_density_and_gradient(t.theta, g), expected, 1e-9);
  }
}

TEST(Posterior, FiniteAtSimulationTruth) {
  const auto x = noise_series(500, 2);
  GjrPosterior post(x, DistKind::normal);
  EXPECT_TRUE(std::isfinite(post.log_density(transform(truth()).theta)));
}

TEST(Posterior, LocationShiftLeavesLikelihoodInvariant) {
  const auto x = noise_series(100, 6);
  auto shifted = x;
  for (auto& v : shifted) v += 3.0;
  auto p = truth();
  auto q = p;
  q.mu = 3.0;
  EXPECT_NEAR(log_likelihood(x, p), log_likelihood(shifted, q), 1e-10);
}

TEST(Posterior, PureAndBitIdentical) {
  const auto x = noise_series(100, 6);
  GjrPosterior post(x, DistKind::generalized_t);
  const auto th = transform(truth(GeneralizedT{1.7, 4.0})).theta;
  const double a = post.log_density(th);
  const double b = post.log_density(th);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Posterior, OutsideStationarityIsRejected) {
  const auto x = noise_series(100, 6);
  GjrPosterior post(x, DistKind::normal);
  auto p = truth();
  p.beta = 0.95;
  EXPECT_EQ(post.log_density(transform(p).theta), kNegInf);
  GjrPosterior loose(x, DistKind::normal, {}, {InitialVariance::sample_variance, false});
  EXPECT_TRUE(std::isfinite(loose.log_density(transform(p).theta)));
}

TEST(Gradient, MuGradientVanishesAtOptimumOfConstantSeries) {
  // For a constant series c with h constant in mu (sample-variance start and
  // alpha = phi = beta -> 0), the likelihood is maximised at mu = c; with a flat
  // mu prior the derivative there is zero.
  const std::vector<double> x(40, 0.37);
  PriorSpec s = PriorSpec::with_variance(100.0);
  s.var_mu = 1e300;
  GjrPosterior post(x, DistKind::normal, s, {InitialVariance::sample_variance, true});
  GjrParams p{0.37, 0.2, 1e-6, 1e-6, 1e-6, Normal{}};
  const auto g = post.gradient(transform(p).theta);
  EXPECT_NEAR(g[0], 0.0, 1e-8);
}

TEST(Gradient, DegenerateOmegaClosedForm) {
  // alpha = phi = beta -> 0 and h_1 = omega: every h_t = omega and
  // d loglik / d omega* = sum_t (y_t^2 / omega - 1) / 2.
  const auto x = noise_series(80, 12, 0.8);
  PriorSpec s = PriorSpec::with_variance(1e300);
  GjrPosterior post(x, DistKind::normal, s);
  const double omega = 0.6;
  GjrParams p{0.0, omega, 1e-12, 1e-12, 1e-12, Normal{}};
  const auto g = post.gradient(transform(p).theta);
  double expected = 0.0;
  for (double v : x) expected += 0.5 * (v * v / omega - 1.0);
  expected += 1.0;  // log-Jacobian of omega* = log omega
  EXPECT_NEAR(g[1], expected, 1e-6 * std::abs(expected));
}

}  // namespace
}  // namespace zvgarch

namespace zvgarch {
namespace {

TEST(Gradient, MatchesCentralDifferencesAllDistributions) {
  std::mt19937_64 rng(2024);
  for (DistKind k : kAllDistKinds) {
    for (int rep = 0; rep < 25; ++rep) {
      const auto data_truth = testing::random_params(k, rng);
      const auto x = simulate_series(data_truth, 200, rng);
      GjrPosterior post(x, k, PriorSpec::with_variance(100.0));
      const auto th = transform(testing::random_params(k, rng)).theta;
      Eigen::VectorXd g;
      ASSERT_TRUE(std::isfinite(post.log_density_and_gradient(th, g)));
      const double err = testing::max_gradient_error(
          [&](const Eigen::VectorXd& v) { return post.log_density(v); }, th, g);
      EXPECT_LT(err, 1e-6) << to_string(k) << " rep " << rep;
    }
  }
}

TEST(Gradient, SampleVariancePolicyAlsoMatches) {
  std::mt19937_64 rng(77);
  for (DistKind k : kAllDistKinds) {
    const auto x = simulate_series(testing::study_truth(default_dist(k)), 150, rng);
    GjrPosterior post(x, k, {}, {InitialVariance::sample_variance, false});
    const auto th = transform(testing::random_params(k, rng)).theta;
    Eigen::VectorXd g;
    post.log_density_and_gradient(th, g);
    EXPECT_LT(testing::max_gradient_error([&](const Eigen::VectorXd& v) { return post.log_density(v); },
                                          th, g),
              1e-6);
  }
}

}  // namespace
}  // namespace zvgarch
