#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "zvgarch/criteria.hpp"
#include "zvgarch/fit.hpp"

namespace zvgarch {
namespace {

struct SmallFit {
  GjrPosterior post;
  ChainSample chain;
};

SmallFit small_fit(DistKind k, std::uint64_t seed, std::size_t n = 300) {
  std::mt19937_64 rng(seed);
  auto x = simulate_series(testing::study_truth(default_dist(k)), n, rng);
  GjrPosterior post(x, k);
  FitConfig cfg;
  cfg.seed = seed;
  cfg.n_draws = 400;
  cfg.n_burnin = 400;
  cfg.protocol = ZvProtocol::split_chain;
  auto fit = fit_posterior(post, cfg);
  return {std::move(post), fit.chains.back()};
}

TEST(PointwiseLoglik, RowsSumToStoredLikelihood) {
  for (DistKind k : kAllDistKinds) {
    const auto f = small_fit(k, 11);
    const Eigen::MatrixXd pw = pointwise_loglik(f.chain, f.post);
    ASSERT_EQ(pw.rows(), f.chain.draws.rows());
    for (Eigen::Index l = 0; l < pw.rows(); l += 37) {
      const auto p = f.post.natural(f.chain.draws.row(l).transpose());
      EXPECT_NEAR(pw.row(l).sum(), log_likelihood(f.post.data(), p), 1e-8);
    }
  }
}

TEST(PointwiseLoglik, SingleObservation) {
  GjrParams p{0.1, 0.5, 0.1, 0.1, 0.5, StudentT{5}};
  const std::vector<double> x{0.9};
  const double h1 = 0.5 / (1.0 - 0.65);
  EXPECT_NEAR(pointwise_log_likelihood(x, p)[0],
              log_density(0.8 / std::sqrt(h1), p.dist) - 0.5 * std::log(h1), 1e-14);
}

TEST(PointwiseLoglik, CorruptedStoredValueIsDetected) {
  auto f = small_fit(DistKind::normal, 12);
  f.chain.log_posterior[5] += 1e-3;
  EXPECT_THROW(pointwise_loglik(f.chain, f.post), NumericalError);
}

TEST(Criteria, DegenerateChain) {
  Eigen::MatrixXd pw(200, 30);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (Eigen::Index t = 0; t < 30; ++t) pw.col(t).setConstant(z(rng) - 1.0);
  const double ll = pw.row(0).sum();
  const auto r = compute_criteria(pw, 5, ll);
  EXPECT_NEAR(r.p_dic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_waic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_loo, 0.0, 1e-12);
  EXPECT_NEAR(r.dic, -2.0 * ll, 1e-10);
  EXPECT_NEAR(r.dic, r.eaic - 10.0, 1e-10);
  EXPECT_NEAR(r.waic, r.looic, 1e-10);
}

TEST(Criteria, ShiftByConstant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  Eigen::MatrixXd pw(300, 40);
  for (auto& v : pw.reshaped()) v = -1.0 + 0.2 * z(rng);
  const double ll = pw.colwise().mean().sum();
  const double c = 3.7;
  const auto a = compute_criteria(pw, 5, ll);
  const auto b = compute_criteria((pw.array() + c / 40.0).matrix(), 5, ll + c);
  EXPECT_NEAR(b.dic - a.dic, -2.0 * c, 1e-9);
  EXPECT_NEAR(b.eaic - a.eaic, -2.0 * c, 1e-9);
  EXPECT_NEAR(b.ebic - a.ebic, -2.0 * c, 1e-9);
  EXPECT_NEAR(b.waic - a.waic, -2.0 * c, 1e-9);
  EXPECT_NEAR(b.looic - a.looic, -2.0 * c, 1e-9);
}

TEST(Criteria, EbicAtLeastEaic) {
  Eigen::MatrixXd pw = Eigen::MatrixXd::Constant(10, 8, -1.0);
  pw(0, 0) = -2.0;
  const auto r = compute_criteria(pw, 6, -8.0);
  EXPECT_GE(r.ebic, r.eaic);
}

TEST(Criteria, WaicCloseToLooicOnHealthyChain) {
  const auto f = small_fit(DistKind::student_t, 13, 500);
  const auto r = criteria_report(f.chain, f.post);
  EXPECT_LT(std::abs(r.waic - r.looic), 2.0);
  EXPECT_TRUE(std::isfinite(r.dic));
  EXPECT_LT(r.max_pareto_k, kParetoKThreshold);
  EXPECT_EQ(r.k, 6u);
}

TEST(ParetoK, RecoversGeneralizedParetoShape) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  for (double k : {0.2, 0.5, 0.9}) {
    std::vector<double> x(20000);
    for (auto& v : x) v = (std::pow(1.0 - u(rng), -k) - 1.0) / k;  // sigma = 1
    EXPECT_NEAR(gpd_shape(x), k, 0.05) << k;
  }
}

TEST(ParetoK, HeavyImportanceRatiosAreFlagged) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  Eigen::VectorXd log_ratio(4000);
  for (auto& v : log_ratio) v = std::log(std::pow(1.0 - u(rng), -1.2));  // Pareto tail, k = 1.2
  EXPECT_GT(pareto_k_of_log_ratios(log_ratio), kParetoKThreshold);
}

TEST(Criteria, HeavyTailedModelsBeatNormalOnStudentData) {
  std::mt19937_64 rng(6);
  const auto x = simulate_series(testing::study_truth(StudentT{8}), 1000, rng);
  double dic[3];
  const DistKind kinds[3] = {DistKind::normal, DistKind::student_t, DistKind::ged};
  for (int j = 0; j < 3; ++j) {
    GjrPosterior post(x, kinds[j]);
    FitConfig cfg;
    cfg.seed = 17;
    cfg.protocol = ZvProtocol::split_chain;
    const auto fit = fit_posterior(post, cfg);
    dic[j] = criteria_report(fit.estimation_chain(), post).dic;
  }
  EXPECT_LT(std::min(dic[1], dic[2]), dic[0]);
}

}  // namespace
}  // namespace zvgarch
