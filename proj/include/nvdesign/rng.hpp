#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace nvdesign {

/// Master or derived seed. Derived seeds come from hashing a parent seed with
/// a list of counters, so any record can be regenerated from its indices alone
/// without replaying a sequential stream.
struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(parent.value ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x2545f4914f6cdd1dULL));
  return Seed{h};
}

/// SplitMix64 as a UniformRandomBitGenerator, usable with <random>
/// distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(Seed seed) noexcept : state_(seed.value) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// The helpers below are spelled out instead of using std::uniform_*_distribution
// because the standard leaves those algorithms to the implementation, and the
// dataset bytes must not depend on which standard library built them.

/// Uniform double in [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform double on [lo, hi]; returns lo exactly for a zero-width interval.
template <class Engine>
double uniform_real(Engine& eng, double lo, double hi) {
  const double u = uniform01(eng);
  return lo == hi ? lo : lo + (hi - lo) * u;
}

/// Unbiased uniform integer on [lo, hi] (Lemire's multiply-and-reject).
template <class Engine>
std::int64_t uniform_int(Engine& eng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(eng());
  unsigned __int128 m = static_cast<unsigned __int128>(eng()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(eng()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return lo + static_cast<std::int64_t>(m >> 64);
}

}  // namespace nvdesign
