#pragma once

// Seeded random streams. Every stochastic routine takes an explicit Rng; streams for
// chains, replicates and commands are derived from one master seed via SplitMix64.

#include <cmath>
#include <cstdint>
#include <random>

namespace nhmm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream `stream` of master seed `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double gamma_draw(Rng& rng, double shape) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

inline double beta_draw(Rng& rng, double a, double b) {
  const double x = gamma_draw(rng, a);
  const double y = gamma_draw(rng, b);
  return x / (x + y);
}

/// Index drawn from unnormalised non-negative weights.
template <class Weights>
int categorical_draw(Rng& rng, const Weights& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double u = uniform01(rng) * total;
  int last = -1;
  int i = 0;
  for (double x : w) {
    if (x > 0.0) {
      last = i;
      if (u < x) return i;
      u -= x;
    }
    ++i;
  }
  return last;
}

}  // namespace nhmm
