#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "zvgarch/distributions.hpp"

namespace zvgarch {
namespace {

const std::vector<ErrorDist> kVariants = {
    Normal{},          StudentT{8.0},          StudentT{2.5},          Ged{2.0},
    Ged{0.8},          Ged{1.4},               Ged{5.0},               GeneralizedT{1.0 + 1e-9, 4.0},
    GeneralizedT{2.0, 8.0}, GeneralizedT{1.5, 3.0}, GeneralizedT{4.0, 0.9}};

// Symmetric densities: integrate over (0, inf) and double.
double half_line_integral(const ErrorDist& d, int power) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double e) { return std::pow(e, power) * std::exp(log_density(e, d)); };
  return 2.0 * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

TEST(Distributions, NormalAtMode) {
  EXPECT_NEAR(log_density(0.0, Normal{}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(log_density(0.0, Normal{}), -0.9189385, 1e-7);
}

TEST(Distributions, GedTwoIsNormal) {
  for (double e = -6.0; e <= 6.0; e += 0.01)
    EXPECT_NEAR(log_density(e, Ged{2.0}), log_density(e, Normal{}), 1e-12) << e;
  EXPECT_NEAR(log_density(1.3, Ged{2.0}), log_density(1.3, Normal{}), 1e-12);
}

TEST(Distributions, StudentTLargeNuApproachesNormal) {
  for (double e = -4.0; e <= 4.0; e += 0.05)
    EXPECT_LT(std::abs(log_density(e, StudentT{1e6}) - log_density(e, Normal{})), 1e-4) << e;
}

TEST(Distributions, StudentTMatchesQuadratureNormalizedKernel) {
  // Kernel (1 + e^2/(nu-2))^{-(nu+1)/2} normalized with 30-digit quadrature.
  EXPECT_NEAR(log_density(0.7, StudentT{8.0}), -1.15953135262008668, 1e-12);

  boost::math::quadrature::exp_sinh<double> integrator;
  const double nu = 8.0;
  auto kernel = [nu](double e) { return std::pow(1.0 + e * e / (nu - 2.0), -(nu + 1.0) / 2.0); };
  const double z = 2.0 * integrator.integrate(kernel, 0.0, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(log_density(0.7, StudentT{nu}), std::log(kernel(0.7) / z), 1e-10);
}

TEST(Distributions, GeneralizedTMatchesDisplayedKernelAfterScaling) {
  // Unit-scale kernel from the density display, rescaled to unit variance.
  const double eta = 1.5, nu = 3.0;
  const double s = generalized_t_scale(eta, nu);
  auto g = [&](double x) {
    return eta * std::tgamma(nu + 1.0 / eta) /
           (2.0 * std::pow(nu, 1.0 / eta) * std::tgamma(1.0 / eta) * std::tgamma(nu)) *
           std::pow(1.0 + std::pow(std::abs(x), eta) / nu, -(nu + 1.0 / eta));
  };
  for (double e : {-2.0, -0.3, 0.0, 0.8, 3.5})
    EXPECT_NEAR(log_density(e, GeneralizedT{eta, nu}), std::log(g(e * s) * s), 1e-12);
}

TEST(Distributions, QuadratureNormalizationAndUnitVariance) {
  for (const auto& d : kVariants) {
    EXPECT_NEAR(half_line_integral(d, 0), 1.0, 1e-6) << d.index();
    EXPECT_NEAR(half_line_integral(d, 2), 1.0, 1e-6) << d.index();
  }
}

TEST(Distributions, InvalidShapesAreRejected) {
  EXPECT_THROW(log_density(0.0, StudentT{2.0}), DomainError);
  EXPECT_THROW(log_density(0.0, Ged{0.0}), DomainError);
  EXPECT_THROW(log_density(0.0, GeneralizedT{1.0, 5.0}), DomainError);
  EXPECT_THROW(log_density(0.0, GeneralizedT{2.0, 1.0}), DomainError);
  try {
    validate(StudentT{1.5});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("nu > 2"), std::string::npos);
  }
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

TEST(Distributions, GradientAtModeIsZero) {
  EXPECT_EQ(log_density_grad(0.0, Normal{}).d_e, 0.0);
  EXPECT_EQ(log_density_grad(0.0, Ged{0.8}).d_e, 0.0);
  EXPECT_EQ(log_density_grad(0.0, GeneralizedT{2.0, 3.0}).d_e, 0.0);
}

TEST(Distributions, GradientsMatchCentralDifferences) {
  const double h = 1e-5;
  for (const auto& d : kVariants) {
    for (double e : {-3.1, -1.0, -0.2, 0.5, 1.0, 2.7}) {
      const auto g = log_density_grad(e, d);
      const double fd_e = (log_density(e + h, d) - log_density(e - h, d)) / (2 * h);
      EXPECT_LT(relative_error(g.d_e, fd_e), 1e-6) << d.index() << " e=" << e;

      auto shapes = shape_values(d);
      for (std::size_t j = 0; j < shapes.size(); ++j) {
        auto up = shapes, dn = shapes;
        up[j] += h;
        dn[j] -= h;
        const auto k = kind_of(d);
        if (!is_valid(make_dist(k, dn))) continue;
        const double fd = (log_density(e, make_dist(k, up)) - log_density(e, make_dist(k, dn))) / (2 * h);
        EXPECT_LT(relative_error(g.d_shape[j], fd), 1e-6) << d.index() << " shape " << j << " e=" << e;
      }
    }
  }
}

TEST(Distributions, NamedGradientExamples) {
  const double h = 1e-5;
  const double fd_t = (log_density(1.0 + h, StudentT{8}) - log_density(1.0 - h, StudentT{8})) / (2 * h);
  EXPECT_NEAR(log_density_grad(1.0, StudentT{8}).d_e, fd_t, 1e-6 * std::abs(fd_t));
  const double fd_ged = (log_density(0.5, Ged{1.4 + h}) - log_density(0.5, Ged{1.4 - h})) / (2 * h);
  EXPECT_NEAR(log_density_grad(0.5, Ged{1.4}).d_shape[0], fd_ged, 1e-6 * std::max(1.0, std::abs(fd_ged)));
}

TEST(Distributions, SamplingIsReproducible) {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(sample(Normal{}, a), sample(Normal{}, b));
    EXPECT_EQ(sample(GeneralizedT{1.5, 3.0}, a), sample(GeneralizedT{1.5, 3.0}, b));
  }
}

struct Moments {
  double mean, var, excess_kurtosis;
};

Moments sample_moments(const ErrorDist& d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);
  double m = 0.0;
  for (auto& v : x) m += (v = sample(d, rng));
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = (v - m) * (v - m);
    m2 += c;
    m4 += c * c;
  }
  m2 /= n;
  m4 /= n;
  return {m, m2, m4 / (m2 * m2) - 3.0};
}

TEST(Distributions, StudentTSampleVariance) {
  const auto m = sample_moments(StudentT{8.0}, 1'000'000, 7);
  EXPECT_GE(m.var, 0.98);
  EXPECT_LE(m.var, 1.02);
  EXPECT_NEAR(m.mean, 0.0, 0.005);
}

TEST(Distributions, GedSampleKurtosis) {
  const double target = ged_excess_kurtosis(0.8);
  EXPECT_NEAR(target, 5.5651444208686778, 1e-10);
  const auto m = sample_moments(Ged{0.8}, 1'000'000, 11);
  EXPECT_NEAR(m.excess_kurtosis, target, 0.3);
  EXPECT_NEAR(m.var, 1.0, 0.02);
}

TEST(Distributions, AllSamplersHaveUnitVariance) {
  for (const auto& d : kVariants) {
    // The sample variance settles slowly unless moments well past the fourth exist.
    if (const auto* t = std::get_if<StudentT>(&d); t && t->nu <= 6.0) continue;
    if (const auto* g = std::get_if<GeneralizedT>(&d); g && g->nu * g->eta <= 6.0) continue;
    const auto m = sample_moments(d, 400'000, 3);
    EXPECT_NEAR(m.var, 1.0, 0.03) << d.index();
  }
}

}  // namespace
}  // namespace zvgarch
