#include "pcpq/datagen.hpp"

#include <cmath>

#include "pcpq/rng.hpp"

namespace pcpq {

namespace {

// Clustered-fixture shape parameters. The radial spread is the point:
// a single direction code plus a scale reconstructs these points well,
// while mean-style codebooks must spend centers along each ray.
constexpr std::size_t kLatentDirections = 32;
constexpr double kRadialLo = 0.5;
constexpr double kRadialHi = 2.0;
constexpr double kNoiseSigma = 0.05;

void fill_gaussian(MatrixF& x, Rng& rng) {
  for (auto& v : x.data) v = static_cast<float>(rng.next_gaussian());
}

void normalize_rows(MatrixF& x) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = x.row(i);
    double n2 = 0.0;
    for (float v : row) n2 += static_cast<double>(v) * v;
    if (n2 == 0.0) {
      row[0] = 1.0f;  // vanishing draw; any fixed direction serves
      continue;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : row) v = static_cast<float>(v * inv);
  }
}

}  // namespace

Dist dist_from_name(const std::string& name) {
  if (name == "gaussian") return Dist::gaussian;
  if (name == "unit-sphere") return Dist::unit_sphere;
  if (name == "clustered") return Dist::clustered;
  fail(errc::usage, "unknown distribution: " + name);
}

const char* dist_name(Dist dist) {
  switch (dist) {
    case Dist::gaussian: return "gaussian";
    case Dist::unit_sphere: return "unit-sphere";
    case Dist::clustered: return "clustered";
  }
  return "?";
}

MatrixF generate_dataset(Dist dist, std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) fail(errc::data, "generate_dataset: need n >= 1 and d >= 1");
  MatrixF x(n, d);
  Rng rng(seed);
  switch (dist) {
    case Dist::gaussian:
      fill_gaussian(x, rng);
      break;
    case Dist::unit_sphere:
      fill_gaussian(x, rng);
      normalize_rows(x);
      break;
    case Dist::clustered: {
      const std::size_t groups = std::min(kLatentDirections, n);
      MatrixF directions(groups, d);
      Rng dir_rng = rng.split(1);
      fill_gaussian(directions, dir_rng);
      normalize_rows(directions);
      Rng pick_rng = rng.split(2);
      Rng radial_rng = rng.split(3);
      Rng noise_rng = rng.split(4);
      for (std::size_t i = 0; i < n; ++i) {
        const auto dir = directions.row(pick_rng.next_index(groups));
        const double r = kRadialLo + (kRadialHi - kRadialLo) * radial_rng.next_double();
        auto row = x.row(i);
        for (std::size_t a = 0; a < d; ++a) {
          const double noise = kNoiseSigma * noise_rng.next_gaussian();
          row[a] = static_cast<float>(r * (static_cast<double>(dir[a]) + noise));
        }
      }
      break;
    }
  }
  return x;
}

}  // namespace pcpq
