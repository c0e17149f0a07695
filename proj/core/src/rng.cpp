#include "pcpq/rng.hpp"

#include <cmath>
#include <numbers>

#include "pcpq/types.hpp"

namespace pcpq {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::next_index(std::size_t bound) {
  if (bound == 0) fail(errc::data, "Rng::next_index: zero bound");
  // Multiply-shift; bias is negligible for the bounds used here.
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
}

double Rng::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller with u clamped away from 0.
  double u = next_double();
  if (u < 0x1.0p-53) u = 0x1.0p-53;
  const double v = next_double();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double a = 2.0 * std::numbers::pi * v;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ull + (tag << 1));
  std::uint64_t a = splitmix64(state);
  state ^= tag;
  return a ^ splitmix64(state);
}

Rng Rng::split(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

}  // namespace pcpq
