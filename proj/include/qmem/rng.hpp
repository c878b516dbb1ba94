#pragma once

#include <cstdint>
#include <random>

namespace qmem::rng {

// Platform-stable draws on top of mt19937_64: the standard distributions are
// implementation-defined, so sampling is done by hand.

inline double uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& g, double p) {
  return uniform(g) < p;
}

// Multiplicative (Knuth) sampler, chunked so large means stay in range.
inline std::uint64_t poisson(std::mt19937_64& g, double mean) {
  std::uint64_t total = 0;
  while (mean > 30.0) {
    double part = 30.0;
    double limit = std::exp(-part);
    double prod = uniform(g);
    std::uint64_t k = 0;
    while (prod > limit) {
      ++k;
      prod *= uniform(g);
    }
    total += k;
    mean -= part;
  }
  double limit = std::exp(-mean);
  double prod = uniform(g);
  std::uint64_t k = 0;
  while (prod > limit) {
    ++k;
    prod *= uniform(g);
  }
  return total + k;
}

inline double gaussian(std::mt19937_64& g) {
  // Box-Muller, one value per call for draw-order stability
  double u1 = uniform(g);
  double u2 = uniform(g);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace qmem::rng
