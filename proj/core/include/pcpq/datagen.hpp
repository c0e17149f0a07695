#pragma once

#include <cstdint>
#include <string>

#include "pcpq/types.hpp"

namespace pcpq {

enum class Dist { gaussian, unit_sphere, clustered };

Dist dist_from_name(const std::string& name);  // throws errc::usage
const char* dist_name(Dist dist);

// Synthetic datasets.
//   gaussian:    i.i.d. standard normal coordinates.
//   unit_sphere: gaussian rows normalized to unit length.
//   clustered:   points scattered around a few dozen latent directions
//                with a wide radial spread — data where direction-based
//                codes pay off, used as the self-contained retrieval
//                fixture.
MatrixF generate_dataset(Dist dist, std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace pcpq
