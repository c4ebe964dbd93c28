// Copyright (c) 2026 the quadblow developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace quadblow {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-sample seed derivation. Injective in the index for a fixed master
/// seed (the pre-mix increment is an odd constant, the mix is a bijection),
/// so parallel workers get pairwise distinct, scheduling-independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::uint64_t sample_index) noexcept {
  return mix64(master_seed + (sample_index + 1) * kGoldenGamma);
}

// Purpose tags keep independent uses of the same base seed on
// non-overlapping derivation paths.
inline constexpr std::uint64_t kSeedTagStart = 0x5354415254534545ULL;
inline constexpr std::uint64_t kSeedTagVerify = 0x5645524946594545ULL;
inline constexpr std::uint64_t kSeedTagMinNorm = 0x4D494E4E4F524D45ULL;

/// Counter-based splitmix64 stream. The whole state is one 64-bit counter;
/// output i of seed s is mix64(s + (i+1)*gamma), so the stream is a pure
/// function of (seed, counter) and identical on every platform.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next_u64() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in (0,1), 53 usable bits, never exactly 0 or 1.
  double next_double() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Standard normal deviates via Box-Muller over SplitMix64 uniforms.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) noexcept : rng_(seed) {}

  double next() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = rng_.next_double();
    const double u2 = rng_.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = kTwoPi * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace quadblow
