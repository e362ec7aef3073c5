#pragma once

#include <cstdint>

namespace hhsketch {

// Deterministic 64-bit mixer. All randomness in the library is derived from
// explicit seeds through this function, never from std:: distributions, so
// results are identical across platforms and standard library versions.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix2(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(splitmix64(seed) ^ a);
}

inline constexpr std::uint64_t mix3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(mix2(seed, a) ^ (b * 0x9e3779b97f4a7c15ull));
}

// Maps a 64-bit hash onto [0, bound) without modulo bias (multiply-shift).
inline std::uint64_t reduce_to(std::uint64_t h, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * bound) >> 64);
}

// Sequential seed stream for sampling structures (tables, matchings, ...).
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5bf03635u)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return splitmix64(state_);
  }

  std::uint64_t next_below(std::uint64_t bound) { return reduce_to(next(), bound); }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace hhsketch
