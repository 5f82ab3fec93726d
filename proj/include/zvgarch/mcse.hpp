#pragma once

// Monte Carlo standard errors for means of correlated chains.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace zvgarch {

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

/// Batch-means standard error of the mean with floor(sqrt(N)) batches of
/// equal size; trailing draws that do not fill a batch are ignored.
inline double batch_means_se(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (batches < 2) return 0.0;
  const std::size_t size = n / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = mean_of(x.subspan(b * size, size));
  return std::sqrt(variance_of(means) / static_cast<double>(batches));
}

inline double batch_means_se(const Eigen::VectorXd& x) {
  return batch_means_se(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

}  // namespace zvgarch
