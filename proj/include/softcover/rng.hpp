#pragma once

// Counter-based randomness. Every draw is a pure function of its coordinates,
// so any codebook word (or any trial of an ensemble) can be regenerated alone.

#include <cstdint>

namespace softcover::rng {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `index` in an ensemble rooted at `base`. Part of the output contract:
/// mix(base, i) = splitmix64(base ^ splitmix64(i)).
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64(base ^ splitmix64(index));
}

/// 64 random bits for letter `position` of word `word` in a codebook drawn with `seed`.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t word,
                                     std::uint64_t position) noexcept {
  return splitmix64(splitmix64(seed ^ splitmix64(word)) + position);
}

/// Uniform on [0, 1) with 53 bits of resolution.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t word,
                                 std::uint64_t position) noexcept {
  return static_cast<double>(counter_bits(seed, word, position) >> 11) * 0x1.0p-53;
}

}  // namespace softcover::rng
