#pragma once

#include <cmath>
#include <cstdint>

namespace randlr::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; a 64-bit bijective mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: draw i of stream s under seed k is
// mix64(key(k,s) + i*gamma), so any entry can be produced independently and
// in parallel with bit-identical results.
class Counter {
 public:
  Counter(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed) ^ mix64(0x5851f42d4c957f2dULL + stream)) {}

  std::uint64_t u64_at(std::uint64_t i) const { return mix64(key_ + i * kGamma); }

  // Uniform in the open interval (0, 1).
  double uniform_at(std::uint64_t i) const {
    return (static_cast<double>(u64_at(i) >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via Box-Muller (cosine branch); one value per index,
  // consuming the uniform pair (2i, 2i+1).
  double gaussian_at(std::uint64_t i) const {
    const double u1 = uniform_at(2 * i);
    const double u2 = uniform_at(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Sequential bounded draw used by the Fisher-Yates subset sampler.
  std::uint64_t bounded_at(std::uint64_t i, std::uint64_t bound) const {
    return u64_at(i) % bound;
  }

 private:
  std::uint64_t key_;
};

}  // namespace randlr::rng
