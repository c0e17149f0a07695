#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "pcpq/clustering.hpp"
#include "pcpq/rng.hpp"
#include "pcpq/scalar_quant.hpp"
#include "pcpq/types.hpp"

using namespace pcpq;

namespace {

double snap_loss(std::span<const double> alphas, const ScalarQuant& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double d = alphas[i] - static_cast<double>(q.values[q.codes[i]]);
    total += d * d;
  }
  return total;
}

double quad_at(const std::array<double, 3>& cf, double l) {
  return cf[0] * l * l + cf[1] * l + cf[2];
}

}  // namespace

TEST_SUITE("scalar_quant") {

TEST_CASE("projective route: few distinct values are reproduced exactly") {
  {
    const std::vector<double> alphas{3.0, -1.0, 3.0, -1.0, 3.0};
    const auto q = quantize_projective(alphas, 2, 9);
    REQUIRE(q.values.size() == 2);
    CHECK(q.values[0] == doctest::Approx(-1.0));
    CHECK(q.values[1] == doctest::Approx(3.0));
    CHECK(q.quant_loss <= 1e-12);
    CHECK(snap_loss(alphas, q) <= 1e-12);
  }
  {
    // Fewer distinct values than s: codebook padded by repeating the last.
    const std::vector<double> alphas{2.0, 2.0, 5.0};
    const auto q = quantize_projective(alphas, 4, 9);
    REQUIRE(q.values.size() == 4);
    CHECK(q.values[0] == doctest::Approx(2.0));
    CHECK(q.values[1] == doctest::Approx(5.0));
    CHECK(q.values[2] == q.values[3]);
    CHECK(q.values[3] == doctest::Approx(5.0));
    CHECK(q.quant_loss <= 1e-12);
  }
}

TEST_CASE("projective route: s=1 gives the mean; codebook sorted") {
  const std::vector<double> alphas{1.0, 2.0, 6.0};
  const auto q = quantize_projective(alphas, 1, 3);
  REQUIRE(q.values.size() == 1);
  CHECK(q.values[0] == doctest::Approx(3.0));
  CHECK(q.quant_loss == doctest::Approx(14.0));  // 4 + 1 + 9

  Rng rng(5);
  std::vector<double> big(60);
  for (auto& v : big) v = rng.next_gaussian() * 4.0;
  const auto qb = quantize_projective(big, 7, 11);
  CHECK(std::is_sorted(qb.values.begin(), qb.values.end()));
  // Reported loss is the snapped squared error, codes point at the argmin.
  CHECK(qb.quant_loss == doctest::Approx(snap_loss(big, qb)).epsilon(1e-9));
  for (std::size_t i = 0; i < big.size(); ++i) {
    double best = 1e300;
    for (float v : qb.values) best = std::min(best, (big[i] - v) * (big[i] - v));
    const double got = (big[i] - qb.values[qb.codes[i]]) * (big[i] - qb.values[qb.codes[i]]);
    CHECK(got == doctest::Approx(best).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("projective route: near the exact dynamic-program optimum") {
  Rng rng(17);
  for (int inst = 0; inst < 30; ++inst) {
    std::vector<double> alphas(40);
    for (auto& v : alphas) v = rng.next_gaussian() * (1.0 + inst * 0.1);
    for (std::uint32_t s : {2u, 3u, 5u}) {
      const auto q = quantize_projective(alphas, s, 100 + inst);
      const double opt = oracle::dp_kmeans_1d_loss(alphas, s);
      CHECK(q.quant_loss >= opt - 1e-9);
      CHECK(q.quant_loss <= opt * 1.08 + 1e-12);
    }
  }
}

TEST_CASE("projective route: loss non-increasing in s") {
  Rng rng(23);
  std::vector<double> alphas(80);
  for (auto& v : alphas) v = rng.next_gaussian() * 3.0;
  double prev = 1e300;
  for (std::uint32_t s = 1; s <= 16; s *= 2) {
    const auto q = quantize_projective(alphas, s, 7);
    CHECK(q.quant_loss <= prev + 1e-9);
    prev = q.quant_loss;
  }
}

TEST_CASE("score-aware route: single point, closed-form vertex") {
  // One point with known quadratic: w=|c|^2 (isotropic h=1), a=-2<x,c>, b=|x|^2.
  MatrixF x(1, 2), centers(1, 2);
  x.at(0, 0) = 2.0f;
  centers.at(0, 0) = 1.0f;
  const std::vector<std::uint32_t> assign{0};
  const std::vector<AnisoWeights> ws{{1.0, 1.0}};
  const auto q = quantize_anisotropic(x, centers, assign, ws, 1, 3);
  REQUIRE(q.values.size() == 1);
  CHECK(q.values[0] == doctest::Approx(2.0).epsilon(1e-7));  // vertex -a/2w
  CHECK(q.quant_loss <= 1e-10);                              // exact fit: b - a^2/4w = 0
}

TEST_CASE("score-aware route: separated vertex groups recover both values") {
  // Four collinear points: two at 1*c, two at 9*c. s=2 must pick {1, 9}.
  MatrixF x(4, 2), centers(1, 2);
  centers.at(0, 0) = 1.0f;
  x.at(0, 0) = 1.0f;
  x.at(1, 0) = 1.0f;
  x.at(2, 0) = 9.0f;
  x.at(3, 0) = 9.0f;
  const std::vector<std::uint32_t> assign{0, 0, 0, 0};
  std::vector<AnisoWeights> ws;
  for (std::size_t i = 0; i < 4; ++i)
    ws.push_back(aniso_weights(std::fabs(x.at(i, 0)), 0.2, 2));
  const auto q = quantize_anisotropic(x, centers, assign, ws, 2, 3);
  REQUIRE(q.values.size() == 2);
  CHECK(q.values[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(q.values[1] == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(q.codes[0] == 0);
  CHECK(q.codes[3] == 1);
  CHECK(q.quant_loss <= 1e-9);
}

TEST_CASE("score-aware route: near the quadratic dynamic-program optimum") {
  Rng rng(31);
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = 20;
    MatrixF x(n, 3), centers(2, 3);
    for (auto& v : x.data) v = static_cast<float>(rng.next_gaussian());
    for (auto& v : centers.data) v = static_cast<float>(rng.next_gaussian());
    std::vector<std::uint32_t> assign(n);
    std::vector<AnisoWeights> ws(n);
    std::vector<std::array<double, 3>> coeffs(n);
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = static_cast<std::uint32_t>(rng.next_index(2));
      double nx2 = 0.0, ip = 0.0, c2 = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        nx2 += static_cast<double>(x.at(i, a)) * x.at(i, a);
        ip += static_cast<double>(x.at(i, a)) * centers.at(assign[i], a);
        c2 += static_cast<double>(centers.at(assign[i], a)) * centers.at(assign[i], a);
      }
      ws[i] = aniso_weights(std::sqrt(nx2), 0.3, 3);
      const double w = (ws[i].h_par - ws[i].h_bot) * ip * ip / nx2 + ws[i].h_bot * c2;
      coeffs[i] = {w, -2.0 * ws[i].h_par * ip, ws[i].h_par * nx2};
    }
    const auto q = quantize_anisotropic(x, centers, assign, ws, 3, 200 + inst);
    const double opt = oracle::dp_quadratic_loss(coeffs, 3);
    double got = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      got += quad_at(coeffs[i], static_cast<double>(q.values[q.codes[i]]));
    CHECK(q.quant_loss == doctest::Approx(got).epsilon(1e-7));
    CHECK(got >= opt - 1e-9);
    CHECK(got <= opt + 0.05 * std::fabs(opt) + 1e-9);
  }
}

TEST_CASE("score-aware route: loss non-increasing in s") {
  Rng rng(37);
  const std::size_t n = 50;
  MatrixF x(n, 4), centers(3, 4);
  for (auto& v : x.data) v = static_cast<float>(rng.next_gaussian());
  for (auto& v : centers.data) v = static_cast<float>(rng.next_gaussian());
  std::vector<std::uint32_t> assign(n);
  std::vector<AnisoWeights> ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    assign[i] = static_cast<std::uint32_t>(rng.next_index(3));
    double nx2 = 0.0;
    for (std::size_t a = 0; a < 4; ++a)
      nx2 += static_cast<double>(x.at(i, a)) * x.at(i, a);
    ws[i] = aniso_weights(std::sqrt(nx2), 0.25, 4);
  }
  double prev = 1e300;
  for (std::uint32_t s = 1; s <= 16; s *= 2) {
    const auto q = quantize_anisotropic(x, centers, assign, ws, s, 7);
    CHECK(q.quant_loss <= prev + 1e-9 * std::max(1.0, std::fabs(prev)));
    prev = q.quant_loss;
  }
}

TEST_CASE("score-aware route: zero-norm points are coded, not fitted") {
  MatrixF x(3, 2), centers(1, 2);
  centers.at(0, 0) = 1.0f;
  x.at(0, 0) = 4.0f;  // vertex at 4
  x.at(1, 0) = 4.0f;
  // row 2 is the zero vector
  const std::vector<std::uint32_t> assign{0, 0, 0};
  const std::vector<AnisoWeights> ws{aniso_weights(4.0, 0.2, 2), aniso_weights(4.0, 0.2, 2),
                                     AnisoWeights{}};
  const auto q = quantize_anisotropic(x, centers, assign, ws, 2, 1);
  REQUIRE(q.values.size() == 2);
  // The fit sees only the two vertex-4 quadratics; the zero point picks
  // whichever codebook value is nearest zero.
  std::size_t near_zero = 0;
  for (std::size_t l = 1; l < q.values.size(); ++l)
    if (std::fabs(q.values[l]) < std::fabs(q.values[near_zero])) near_zero = l;
  CHECK(q.codes[2] == near_zero);
  CHECK(q.values[q.codes[0]] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("both routes: invalid s rejected") {
  const std::vector<double> alphas{1.0, 2.0};
  CHECK_THROWS_AS(quantize_projective(alphas, 0, 1), const error&);
  CHECK_THROWS_AS(quantize_projective(alphas, 257, 1), const error&);
}

}  // TEST_SUITE
