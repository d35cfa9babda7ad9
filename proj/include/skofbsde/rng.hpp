#pragma once

#include <cstdint>

#include "skofbsde/normal.hpp"

namespace skofbsde {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Fixed 64-bit integer
// arithmetic, so streams are identical on every platform.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Seed of path `index` in a run seeded with `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64_mix(base + (index + 1) * kGoldenGamma);
}

// Counter-based stream: draw k is mix(key + (k + 1) * gamma), i.e. the k-th
// output of a SplitMix64 generator started at `key`. Normals are obtained by
// inverting the normal CDF on a 53-bit uniform in the open interval (0, 1).
class NormalStream {
 public:
  explicit constexpr NormalStream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return norm_quantile(next_uniform()); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace skofbsde
