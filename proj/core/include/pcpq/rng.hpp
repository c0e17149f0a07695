#pragma once

#include <array>
#include <cstdint>

namespace pcpq {

// Deterministic RNG: xoshiro256++ seeded through splitmix64.
//
// Every randomized routine takes a single 64-bit seed and derives
// independent child streams with split(tag); nothing reads global state,
// so builds are bit-reproducible for a fixed seed regardless of call
// interleaving.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53 random bits.
  double next_double();
  // Uniform in [0, bound). bound must be > 0.
  std::size_t next_index(std::size_t bound);
  // Standard normal via Box-Muller (pair cached).
  double next_gaussian();

  // Independent stream for (seed, tag); used as the counter-based splitter.
  Rng split(std::uint64_t tag) const;

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag);

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_ = 0.0;
  bool has_cached_ = false;
  std::uint64_t seed_ = 0;
};

}  // namespace pcpq
