#pragma once

// Synthetic GJR-GARCH(1,1) paths.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "zvgarch/distributions.hpp"
#include "zvgarch/errors.hpp"
#include "zvgarch/model.hpp"

namespace zvgarch {

inline constexpr std::size_t kSimulationBurnIn = 500;

/// Simulates n observations x_t = mu + e_t sqrt(h_t). The recursion starts at
/// the unconditional variance and the first `burn_in` values are discarded.
template <class Rng>
std::vector<double> simulate_series(const GjrParams& truth, std::size_t n, Rng& rng,
                                    std::size_t burn_in = kSimulationBurnIn) {
  if (!(truth.persistence() < 1.0))
    throw DomainError("simulation requires alpha + phi/2 + beta < 1");
  validate(truth.dist);
  std::vector<double> x;
  x.reserve(n);
  double h = truth.unconditional_variance();
  double y_prev = 0.0;
  for (std::size_t t = 0; t < burn_in + n; ++t) {
    if (t > 0)
      h = truth.omega + (y_prev <= 0.0 ? truth.alpha + truth.phi : truth.alpha) * y_prev * y_prev +
          truth.beta * h;
    const double y = sample(truth.dist, rng) * std::sqrt(h);
    if (t >= burn_in) x.push_back(y + truth.mu);
    y_prev = y;
  }
  return x;
}

/// Well-mixed 64-bit seed for stream `stream` of a master seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace zvgarch
