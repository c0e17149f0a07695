#include "pcpq/scalar_quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcpq/numerics.hpp"

namespace pcpq {

namespace {

void check_s(std::uint32_t s) {
  // Codes are stored in one byte, so 256 entries is the ceiling.
  if (s < 1 || s > 256) fail(errc::data, "scalar quantization: need 1 <= s <= 256");
}

// Pads an ascending codebook to exactly s entries by repeating the last
// value, and converts to the storage type.
std::vector<float> pad_codebook(std::span<const double> values, std::uint32_t s) {
  std::vector<float> out;
  out.reserve(s);
  for (double v : values) out.push_back(static_cast<float>(v));
  while (out.size() < s) out.push_back(out.empty() ? 0.0f : out.back());
  return out;
}

std::uint8_t nearest_code(std::span<const float> values, double x) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < values.size(); ++l) {
    const double d = std::fabs(static_cast<double>(values[l]) - x);
    if (d < bd) {
      bd = d;
      best = l;
    }
  }
  return static_cast<std::uint8_t>(best);
}

double dotf(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

}  // namespace

ScalarQuant quantize_projective(std::span<const double> alphas, std::uint32_t s,
                                std::uint64_t seed) {
  check_s(s);
  if (alphas.empty()) fail(errc::data, "quantize_projective: empty input");
  const ScalarCodebook cb = kmeans_1d(alphas, s, seed);

  ScalarQuant out;
  out.values = pad_codebook(cb.values, s);
  out.codes.resize(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i)
    out.codes[i] = static_cast<std::uint8_t>(cb.assignment[i]);
  // Re-evaluate against the float-rounded codebook so the reported loss is
  // the one the stored index actually incurs.
  double loss = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double diff = alphas[i] - static_cast<double>(out.values[out.codes[i]]);
    loss += diff * diff;
  }
  out.quant_loss = loss;
  return out;
}

ScalarQuant quantize_anisotropic(const MatrixF& x, const MatrixF& centers,
                                 std::span<const std::uint32_t> assignment,
                                 std::span<const AnisoWeights> weights, std::uint32_t s,
                                 std::uint64_t seed) {
  check_s(s);
  const std::size_t n = x.rows;
  if (assignment.size() != n || weights.size() != n)
    fail(errc::data, "quantize_anisotropic: size mismatch");
  if (n == 0) fail(errc::data, "quantize_anisotropic: empty input");
  for (auto j : assignment)
    if (j >= centers.rows) fail(errc::code_out_of_range, "quantize_anisotropic: assignment");

  std::vector<double> c2(centers.rows);
  for (std::size_t j = 0; j < centers.rows; ++j) {
    const auto cj = centers.row(j);
    c2[j] = dotf(cj, cj);
  }

  // Per-point quadratic coefficients; points with zero weight curvature
  // (zero norm, or a zero-weight regime) cannot constrain the codebook.
  std::vector<QuadCoeff> quads;
  std::vector<std::size_t> quad_of;  // point id per entry of `quads`
  quads.reserve(n);
  quad_of.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const double nx2 = dotf(xi, xi);
    if (nx2 == 0.0) continue;
    const AnisoWeights& w = weights[i];
    const double ip = dotf(xi, centers.row(assignment[i]));
    const double wq = (w.h_par - w.h_bot) * ip * ip / nx2 + w.h_bot * c2[assignment[i]];
    if (!(wq > 0.0)) continue;
    quads.push_back({wq, -2.0 * w.h_par * ip, w.h_par * nx2});
    quad_of.push_back(i);
  }

  ScalarQuant out;
  out.codes.assign(n, 0);
  if (quads.empty()) {
    // Nothing carries loss (all-zero section or zero thresholds): a single
    // zero scale reproduces the optimum.
    out.values = pad_codebook(std::vector<double>{0.0}, s);
    out.quant_loss = 0.0;
    return out;
  }

  const ScalarCodebook cb = minimize_quadratic_scalars(quads, s, seed);
  out.values = pad_codebook(cb.values, s);

  double with_codes = 0.0;
  for (std::size_t q = 0; q < quads.size(); ++q) {
    // Assign against the float-rounded codebook (ties to the lower code).
    double best = std::numeric_limits<double>::infinity();
    std::uint8_t bl = 0;
    for (std::size_t l = 0; l < out.values.size(); ++l) {
      const double lam = out.values[l];
      const double v = (quads[q].w * lam + quads[q].a) * lam + quads[q].b;
      if (v < best) {
        best = v;
        bl = static_cast<std::uint8_t>(l);
      }
    }
    out.codes[quad_of[q]] = bl;
    with_codes += best;
  }
  // Reported loss is the full score-aware objective at the snapped scales
  // (each per-point quadratic is a nonnegative loss, so the sum is too).
  out.quant_loss = std::max(with_codes, 0.0);

  // Points excluded from the fit have zero loss everywhere; give them the
  // code whose value is nearest zero so reconstructions stay small.
  bool any_excluded = quads.size() != n;
  if (any_excluded) {
    const std::uint8_t zero_code = nearest_code(out.values, 0.0);
    std::vector<bool> fitted(n, false);
    for (auto i : quad_of) fitted[i] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!fitted[i]) out.codes[i] = zero_code;
  }
  return out;
}

}  // namespace pcpq
