#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace mibci {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a run seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// derive_seed(s, {a, b}) = splitmix64(splitmix64(splitmix64(s) ^ a) ^ b)
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (auto t : tags) h = splitmix64(h ^ t);
  return h;
}

/// Portable random stream.
///
/// The engine is the standard 64-bit Mersenne Twister (std::mt19937_64), whose
/// output sequence is fixed by the C++ standard. The std distributions are not
/// portable, so every derived quantity is computed here from raw 64-bit draws:
///
///   uniform()  = (u64 >> 11) * 2^-53                       in [0, 1)
///   below(n)   = u64 % n, rejecting u64 >= 2^64 - (2^64 mod n)
///   normal()   = sqrt(-2 ln(1 - uniform())) * cos(2 pi uniform())   (no caching)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x <= limit) return x % n;
    }
  }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mibci
