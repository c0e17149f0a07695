#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcpq/clustering.hpp"
#include "pcpq/types.hpp"

namespace pcpq {

// Codebook over per-point scale factors for one section, plus each point's
// assigned code. `values` is sorted ascending and contains exactly `s`
// entries (short codebooks are padded by repeating the last value so the
// serialized layout is fixed-size).
struct ScalarQuant {
  std::vector<float> values;
  std::vector<std::uint8_t> codes;
  // Projective route: sum of (alpha - snapped)^2 — exactly the growth of
  // the reconstruction loss when centers are unit directions. Score-aware
  // route: the full quadratic objective evaluated at the snapped scales.
  double quant_loss = 0.0;
};

// Scale quantization for the plain projective objective: 1-D k-means over
// the fitted scales. With unit-norm centers the clustering loss splits
// exactly into (projection loss) + (scale quantization loss), so the
// squared-error objective on scales is the right one.
ScalarQuant quantize_projective(std::span<const double> alphas, std::uint32_t s,
                                std::uint64_t seed);

// Scale quantization for the score-aware objective. Each point's loss is a
// quadratic in its scale, so the total objective for a candidate codebook
// is sum_i min_l (w_i l^2 + a_i l + b_i); minimized by alternating
// assignment with the weighted-mean update l = -sum(a)/(2 sum(w)).
// Zero-norm points carry no loss; they are excluded from the fit and coded
// afterwards to the value nearest zero. If no point carries loss the
// codebook is a single zero (padded), matching the degenerate solver path.
ScalarQuant quantize_anisotropic(const MatrixF& x, const MatrixF& centers,
                                 std::span<const std::uint32_t> assignment,
                                 std::span<const AnisoWeights> weights, std::uint32_t s,
                                 std::uint64_t seed);

}  // namespace pcpq
