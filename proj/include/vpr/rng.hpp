#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic randomness helpers. std::mt19937_64 output is fully
// specified by the standard, but the std distributions are not, so raw
// engine output is mapped here to keep seeded runs reproducible across
// toolchains.
namespace vpr::rng {

using Engine = std::mt19937_64;

// Uniform integer in [0, bound) by rejection.
inline std::uint64_t below(Engine& eng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double unit_real(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal deviate (Box-Muller, cosine branch).
inline double normal(Engine& eng) {
  const double u1 = 1.0 - unit_real(eng);  // (0, 1]
  const double u2 = unit_real(eng);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// k distinct indices drawn uniformly from [0, n), returned ascending.
inline std::vector<std::size_t> sample_indices(Engine& eng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(below(eng, n - j));
    std::swap(pool[j], pool[pick]);
  }
  std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vpr::rng
