#pragma once

#include <cstdint>
#include <limits>

namespace slrlab {

/// SplitMix64 output function. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives the i-th child seed of `master`. Distinct i give distinct seeds
/// for a fixed master because both steps are bijections.
constexpr std::uint64_t split(std::uint64_t master, std::uint64_t i) noexcept {
  return master ^ mix64(i + 0x9e3779b97f4a7c15ull);
}

/// Sub-stream identifiers. Gradient noise and the stochasticity factor draw
/// from separate children of the run seed, so changing the SF leaves the
/// gradient noise sequence untouched.
enum class Stream : std::uint64_t { GradientNoise = 1, StochasticFactor = 2, Data = 3 };

constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream s) noexcept {
  return mix64(split(seed, static_cast<std::uint64_t>(s)));
}

/// xoshiro256** seeded through SplitMix64. Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* algorithm = "xoshiro256** (SplitMix64 seeding, split(m,i)=m^mix64(i+golden))";

  explicit constexpr Rng(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ull;
      w = mix64(z);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) from the top 53 bits of one draw.
  constexpr double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  friend constexpr bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
};

}  // namespace slrlab
