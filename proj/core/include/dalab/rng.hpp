#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dalab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for work item `index` under `seed`.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL * (tag + 1))));
}

// 53-bit uniform in [0,1), independent of the standard library's distributions.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace dalab

namespace dalab {

// Box-Muller; one variate per call keeps streams simple to reason about.
inline double normal01(std::mt19937_64& g) {
  double u = uniform01(g);
  while (u <= 0.0) u = uniform01(g);
  const double v = uniform01(g);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

}  // namespace dalab
