#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace eftlab {

// Counter-based deterministic random source. The state is (seed, counter);
// each draw hashes the next counter value with a splitmix64-style mixer, so
// identical seed + identical call sequence gives identical outputs on any
// platform with IEEE-754 doubles.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift mapping keeps bias below 2^-64.
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (cosine branch, no cached spare).
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// FNV-1a over mixed inputs, for deriving independent stream seeds from a base
// seed plus a purpose tag. Experiment cells seeded this way are reproducible
// regardless of scheduling order.
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = hash_combine(h, base);
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename... Ints>
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          Ints... indices) {
  std::uint64_t h = derive_seed(base, tag);
  ((h = hash_combine(h, static_cast<std::uint64_t>(indices))), ...);
  return h;
}

// Stable bit pattern for hashing double-valued cell keys (e.g. noise levels).
inline std::uint64_t bits_of(double x) {
  std::uint64_t u;
  static_assert(sizeof(u) == sizeof(x));
  __builtin_memcpy(&u, &x, sizeof(u));
  return u;
}

}  // namespace eftlab
