#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "pcpq/clustering.hpp"
#include "pcpq/numerics.hpp"
#include "pcpq/rng.hpp"
#include "pcpq/types.hpp"

using namespace pcpq;

namespace {

MatrixF random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  MatrixF m(r, c);
  for (auto& v : m.data) v = static_cast<float>(rng.next_gaussian() * scale);
  return m;
}

double dot64(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double mean_norm(const MatrixF& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) acc += std::sqrt(dot64(x.row(i), x.row(i)));
  return acc / static_cast<double>(x.rows);
}

// The score-aware per-point loss evaluated from the residual definitions —
// no shared algebra with the library's quadratic expansion.
double loss_from_residuals(std::span<const float> x, std::span<const float> c,
                           double alpha, const AnisoWeights& w) {
  std::vector<double> xd(x.begin(), x.end()), cd(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) cd[i] = alpha * c[i];
  const auto r = residual_components(xd, cd);
  double lp = 0.0, lb = 0.0;
  for (double v : r.r_par) lp += v * v;
  for (double v : r.r_bot) lb += v * v;
  return w.h_par * lp + w.h_bot * lb;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("aniso weights: zero threshold, ordering, frozen values") {
  const auto z = aniso_weights(1.0, 0.0, 4);
  CHECK(z.h_par == 0.0);
  CHECK(z.h_bot == 0.0);

  // Frozen independent-quadrature values for t=0.2, |x|=1, dbar=4.
  const auto w = aniso_weights(1.0, 0.2, 4);
  CHECK(w.h_par == doctest::Approx(0.00774786647816975).epsilon(1e-9));
  CHECK(w.h_bot == doctest::Approx(6.279226344747205e-05).epsilon(1e-9));

  for (int dbar : {2, 3, 4, 8, 16}) {
    for (double y : {0.21, 0.5, 1.0, 2.0, 10.0}) {
      const auto ww = aniso_weights(y, 0.2, dbar);
      CHECK(ww.h_par >= ww.h_bot);
      CHECK(ww.h_bot >= 0.0);
    }
  }
}

TEST_CASE("aniso weights: ratio is monotone in the point norm") {
  for (int dbar : {2, 4, 8}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double y = 0.2; y <= 2.0; y += 0.05) {
      const auto w = aniso_weights(y, 0.2, dbar);
      REQUIRE(w.h_par > 0.0);
      const double ratio = w.h_bot / w.h_par;
      CHECK(ratio <= prev + 1e-12);
      prev = ratio;
    }
  }
}

TEST_CASE("aniso weights: input validation") {
  CHECK_THROWS_AS(aniso_weights(0.0, 0.2, 4), const error&);
  CHECK_THROWS_AS(aniso_weights(1.0, -0.1, 4), const error&);
  CHECK_THROWS_AS(aniso_weights(1.0, 0.2, 1), const error&);
}

TEST_CASE("residual components: identities") {
  {
    const std::vector<double> x{1, 0}, c{1, 0};
    const auto r = residual_components(x, c);
    CHECK(r.r_par[0] == doctest::Approx(0.0));
    CHECK(r.r_par[1] == doctest::Approx(0.0));
    CHECK(r.r_bot[0] == doctest::Approx(0.0));
    CHECK(r.r_bot[1] == doctest::Approx(0.0));
  }
  {
    const std::vector<double> x{1, 0}, c{0, 1};
    const auto r = residual_components(x, c);
    CHECK(r.r_par[0] == doctest::Approx(1.0));
    CHECK(r.r_par[1] == doctest::Approx(0.0));
    CHECK(r.r_bot[0] == doctest::Approx(0.0));
    CHECK(r.r_bot[1] == doctest::Approx(-1.0));
  }
  Rng rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<double> x(4), c(4);
    for (auto& v : x) v = rng.next_gaussian();
    for (auto& v : c) v = rng.next_gaussian();
    const auto r = residual_components(x, c);
    double ip = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.r_par[i] + r.r_bot[i] == doctest::Approx(x[i] - c[i]).epsilon(1e-12));
      ip += r.r_par[i] * r.r_bot[i];
    }
    CHECK(std::fabs(ip) <= 1e-10);  // components are orthogonal by construction
  }
  CHECK_THROWS_AS(residual_components(std::vector<double>{0, 0}, std::vector<double>{1, 0}),
                  const error&);
}

TEST_CASE("optimal scale: isotropic case reduces to the plain projection") {
  Rng rng(17);
  for (int inst = 0; inst < 10; ++inst) {
    MatrixF m = random_matrix(2, 4, 100 + inst);
    const auto x = m.row(0), c = m.row(1);
    const AnisoWeights iso{1.0, 1.0};
    const double got = opt_alpha_aniso(x, c, iso);
    CHECK(got == doctest::Approx(dot64(x, c) / dot64(c, c)).epsilon(1e-9));
  }
}

TEST_CASE("optimal scale: alpha=1 when the center equals the point") {
  MatrixF m = random_matrix(1, 4, 55);
  const auto w = aniso_weights(std::sqrt(dot64(m.row(0), m.row(0))), 0.3, 4);
  CHECK(opt_alpha_aniso(m.row(0), m.row(0), w) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("optimal scale: matches golden-section search on the residual loss") {
  Rng rng(29);
  for (int inst = 0; inst < 50; ++inst) {
    MatrixF m = random_matrix(2, 4, 2000 + inst);
    const auto x = m.row(0), c = m.row(1);
    const double nx = std::sqrt(dot64(x, x));
    const auto w = aniso_weights(nx, 0.1 + 0.3 * rng.next_double(), 4);
    const double got = opt_alpha_aniso(x, c, w);
    const double want = oracle::golden_min(
        [&](double a) { return loss_from_residuals(x, c, a, w); }, -100.0, 100.0);
    CHECK(std::fabs(got - want) <= 1e-6);
  }
}

TEST_CASE("projective assignment: collinear point, sign invariance, ties") {
  MatrixF centers(2, 2);
  centers.at(0, 0) = 1.0f;
  centers.at(1, 0) = 1.0f;
  centers.at(1, 1) = 1.0f;
  MatrixF x(2, 2);
  x.at(0, 0) = 2.0f;
  x.at(0, 1) = 2.0f;
  x.at(1, 0) = -1.0f;
  const auto r = assign_projective(x, centers);
  CHECK(r.assignment[0] == 1);
  CHECK(r.alphas[0] == doctest::Approx(2.0));
  CHECK(r.point_loss[0] == doctest::Approx(0.0));
  CHECK(r.assignment[1] == 0);  // the aligned direction, despite the sign
  CHECK(r.alphas[1] == doctest::Approx(-1.0));
  CHECK(r.point_loss[1] == doctest::Approx(0.0));

  // A zero point contributes nothing and lands on center 0.
  MatrixF z(1, 2);
  const auto rz = assign_projective(z, centers);
  CHECK(rz.assignment[0] == 0);
  CHECK(rz.alphas[0] == 0.0);
  CHECK(rz.loss == 0.0);
}

TEST_CASE("projective center: collinear and antipodal clusters") {
  {
    MatrixF m(2, 2);
    m.at(0, 0) = 2.0f;
    m.at(1, 0) = 3.0f;
    std::vector<const float*> p{m.row(0).data(), m.row(1).data()};
    const auto v = center_projective(p, 2);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-8));
  }
  {
    MatrixF m(2, 2);
    m.at(0, 0) = 1.0f;
    m.at(0, 1) = 1.0f;
    m.at(1, 0) = -1.0f;
    m.at(1, 1) = -1.0f;
    std::vector<const float*> p{m.row(0).data(), m.row(1).data()};
    const auto v = center_projective(p, 2);
    const double inv = 1.0 / std::sqrt(2.0);
    CHECK(v[0] == doctest::Approx(inv).epsilon(1e-8));
    CHECK(v[1] == doctest::Approx(inv).epsilon(1e-8));
  }
}

TEST_CASE("projective center: beats the normalized-mean direction") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MatrixF m = random_matrix(20, 4, seed);
    std::vector<const float*> p;
    for (std::size_t i = 0; i < m.rows; ++i) p.push_back(m.row(i).data());
    const auto v = center_projective(p, 4);

    std::vector<double> mean(4, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < 4; ++j) mean[j] += m.at(i, j);
    double mn = 0.0;
    for (double g : mean) mn += g * g;
    if (mn == 0.0) continue;

    const auto line_loss = [&](const std::vector<double>& dir) {
      double d2 = 0.0;
      for (double g : dir) d2 += g * g;
      double total = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) {
        double nx2 = 0.0, ip = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
          nx2 += static_cast<double>(m.at(i, j)) * m.at(i, j);
          ip += static_cast<double>(m.at(i, j)) * dir[j];
        }
        total += nx2 - ip * ip / d2;
      }
      return total;
    };
    CHECK(line_loss(v) <= line_loss(mean) + 1e-9);
  }
}

TEST_CASE("anisotropic center: single-point closed forms") {
  MatrixF m = random_matrix(1, 3, 77);
  std::vector<const float*> p{m.row(0).data()};
  const AnisoWeights w{0.7, 0.7};
  {
    const std::vector<double> alphas{1.0};
    const std::vector<AnisoWeights> ws{w};
    const auto c = center_anisotropic(p, 3, alphas, ws);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(c[j] == doctest::Approx(static_cast<double>(m.at(0, j))).epsilon(1e-7));
  }
  {
    const std::vector<double> alphas{2.0};
    const std::vector<AnisoWeights> ws{w};
    const auto c = center_anisotropic(p, 3, alphas, ws);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(c[j] == doctest::Approx(0.5 * m.at(0, j)).epsilon(1e-7));
  }
}

TEST_CASE("anisotropic center: matches the finite-difference minimizer") {
  Rng rng(41);
  for (int inst = 0; inst < 15; ++inst) {
    const MatrixF m = random_matrix(15, 3, 3000 + inst);
    std::vector<const float*> p;
    std::vector<double> alphas;
    std::vector<AnisoWeights> ws;
    for (std::size_t i = 0; i < m.rows; ++i) {
      p.push_back(m.row(i).data());
      alphas.push_back(0.2 + rng.next_double() * 1.8);
      const double nx = std::sqrt(dot64(m.row(i), m.row(i)));
      ws.push_back(aniso_weights(nx, 0.1 + 0.4 * rng.next_double(), 3));
    }
    const auto c = center_anisotropic(p, 3, alphas, ws);

    const auto objective = [&](std::span<const double> cand) {
      std::vector<float> cf(cand.size());
      for (std::size_t j = 0; j < cand.size(); ++j) cf[j] = static_cast<float>(cand[j]);
      double total = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i)
        total += loss_from_residuals(m.row(i), cf, alphas[i], ws[i]);
      return total;
    };
    const auto want = oracle::fd_quadratic_minimizer(objective, 3, 1e-3);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(c[j] == doctest::Approx(want[j]).epsilon(1e-5).scale(1.0));

    const auto grad = oracle::fd_gradient(objective, c, 1e-5);
    double gn = 0.0;
    for (double g : grad) gn += g * g;
    CHECK(std::sqrt(gn) <= 1e-4);
  }
}

TEST_CASE("anisotropic assignment: exact point, isotropic reduction, grid oracle") {
  const MatrixF x = random_matrix(10, 4, 4001);
  MatrixF centers = random_matrix(3, 4, 4002);
  std::vector<AnisoWeights> ws;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double nx = std::sqrt(dot64(x.row(i), x.row(i)));
    ws.push_back(aniso_weights(nx, 0.2, 4));
  }

  // A point equal to a center lands there with alpha 1 and zero loss.
  {
    MatrixF x1(1, 4);
    for (std::size_t j = 0; j < 4; ++j) x1.at(0, j) = centers.at(1, j);
    const std::vector<AnisoWeights> w1{
        aniso_weights(std::sqrt(dot64(x1.row(0), x1.row(0))), 0.2, 4)};
    const auto r = assign_anisotropic(x1, centers, w1, true);
    CHECK(r.assignment[0] == 1);
    CHECK(r.alphas[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.point_loss[0] <= 1e-12);
  }

  // Isotropic weights give the projective assignment.
  {
    std::vector<AnisoWeights> iso(x.rows, AnisoWeights{1.0, 1.0});
    const auto ra = assign_anisotropic(x, centers, iso, true);
    const auto rp = assign_projective(x, centers);
    for (std::size_t i = 0; i < x.rows; ++i) {
      CHECK(ra.assignment[i] == rp.assignment[i]);
      CHECK(ra.alphas[i] == doctest::Approx(rp.alphas[i]).epsilon(1e-9));
    }
  }

  // Within the chosen cluster the reported scale beats a dense grid, so the
  // closed-form alpha really is the per-center minimizer.
  {
    const auto r = assign_anisotropic(x, centers, ws, true);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto c = centers.row(r.assignment[i]);
      const double mine = loss_from_residuals(x.row(i), c, r.alphas[i], ws[i]);
      CHECK(mine == doctest::Approx(r.point_loss[i]).epsilon(1e-9).scale(1.0));
      for (int g = 0; g <= 10000; ++g) {
        const double a = -5.0 + g * 0.001;
        const double other = loss_from_residuals(x.row(i), c, a, ws[i]);
        CHECK_MESSAGE(mine <= other + 1e-9, "point ", i, " grid alpha ", a);
        if (mine > other + 1e-9) return;  // stop flooding on first failure
      }
    }
  }
}

TEST_CASE("anisotropic assignment: scaling never hurts against fixed centers") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MatrixF x = random_matrix(30, 4, 5000 + seed);
    const MatrixF centers = random_matrix(4, 4, 6000 + seed);
    std::vector<AnisoWeights> ws;
    for (std::size_t i = 0; i < x.rows; ++i)
      ws.push_back(aniso_weights(std::sqrt(dot64(x.row(i), x.row(i))), 0.25, 4));
    const auto on = assign_anisotropic(x, centers, ws, true);
    const auto off = assign_anisotropic(x, centers, ws, false);
    CHECK(on.loss <= off.loss + 1e-9 * std::fabs(off.loss));
  }
}

TEST_CASE("kmeans++: blobs, zero data, loss trace") {
  {
    MatrixF x(10, 2);
    for (std::size_t i = 0; i < 5; ++i) {
      x.at(i, 0) = 10.0f + static_cast<float>(i) * 0.01f;
      x.at(i + 5, 1) = -7.0f - static_cast<float>(i) * 0.01f;
    }
    const auto model = kmeans_pp(x, 2, 20, 1e-6, 3);
    CHECK(oracle::kmeans_model_loss(x, model.centers) <= 0.01);
    for (std::size_t i = 1; i < model.loss_trace.size(); ++i)
      CHECK(model.loss_trace[i] <=
            model.loss_trace[i - 1] + 1e-9 * std::fabs(model.loss_trace[i - 1]));
    for (double a : model.alphas) CHECK(a == 1.0);
  }
  {
    MatrixF z(4, 3);
    const auto model = kmeans_pp(z, 2, 20, 1e-6, 3);
    CHECK(model.loss_trace.back() == 0.0);
  }
}

TEST_CASE("kmeans++: near the exhaustive optimum on small instances") {
  int wins = 0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const MatrixF x = random_matrix(12, 2, 7000 + inst);
    const double opt = oracle::exhaustive_kmeans_optimum(x);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto model = kmeans_pp(x, 2, 30, 1e-9, seed);
      best = std::min(best, oracle::kmeans_model_loss(x, model.centers));
    }
    if (best <= 1.05 * opt + 1e-12) ++wins;
  }
  CHECK(wins == 10);
}

TEST_CASE("projective solver: exact fits and the k=n edge") {
  {
    // Two groups on two lines: an exact two-direction model.
    MatrixF x(8, 3);
    for (std::size_t i = 0; i < 4; ++i) {
      const float s = static_cast<float>(i + 1);
      x.at(i, 0) = s;
      x.at(i + 4, 1) = -s;
      x.at(i + 4, 2) = 2.0f * s;
    }
    const auto model = projective_k_clustering(x, 2, InitMode::kmeanspp, 30, 1e-9, 5);
    CHECK(oracle::projective_model_loss(x, model.centers) <= 1e-8);
  }
  {
    const MatrixF x = random_matrix(6, 3, 808);
    const auto model = projective_k_clustering(x, 6, InitMode::kmeanspp, 30, 1e-9, 5);
    CHECK(oracle::projective_model_loss(x, model.centers) <= 1e-7);
  }
}

TEST_CASE("projective solver: trace monotone; near exhaustive optimum") {
  int wins = 0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const MatrixF x = random_matrix(8, 2, 9000 + inst);
    const double opt = oracle::exhaustive_projective_optimum(x);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto model = projective_k_clustering(x, 2, InitMode::kmeanspp, 30, 1e-9, seed);
      for (std::size_t i = 1; i < model.loss_trace.size(); ++i)
        CHECK(model.loss_trace[i] <=
              model.loss_trace[i - 1] + 1e-9 * std::fabs(model.loss_trace[i - 1]));
      best = std::min(best, oracle::projective_model_loss(x, model.centers));
    }
    if (best <= 1.05 * opt + 1e-12) ++wins;
  }
  CHECK(wins == 10);
}

TEST_CASE("projective solver: invariant to sign flips of the input") {
  const MatrixF x = random_matrix(24, 3, 1234);
  MatrixF flipped = x;
  Rng rng(4321);
  for (std::size_t i = 0; i < flipped.rows; ++i)
    if (rng.next_double() < 0.5)
      for (auto& v : flipped.row(i)) v = -v;
  const auto a = projective_k_clustering(x, 3, InitMode::kmeanspp, 30, 1e-9, 11);
  const auto b = projective_k_clustering(flipped, 3, InitMode::kmeanspp, 30, 1e-9, 11);
  const double la = oracle::projective_model_loss(x, a.centers);
  const double lb = oracle::projective_model_loss(flipped, b.centers);
  CHECK(la == doctest::Approx(lb).epsilon(1e-6));
}

TEST_CASE("projective loss never exceeds the k-means loss under the same centers") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MatrixF x = random_matrix(40, 4, 777 + seed);
    const auto km = kmeans_pp(x, 4, 20, 1e-6, seed);
    const double pl = oracle::projective_model_loss(x, km.centers);
    const double kl = oracle::kmeans_model_loss(x, km.centers);
    CHECK(pl <= kl + 1e-9 * kl);
  }
}

TEST_CASE("score-aware solvers: degenerate zero threshold") {
  const MatrixF x = random_matrix(20, 4, 31);
  const auto model = aniso_projective_k_clustering(x, 3, 0.0, 20, 1e-6, 9);
  CHECK(model.degenerate);
  REQUIRE(model.loss_trace.size() == 1);
  CHECK(model.loss_trace[0] == 0.0);
  CHECK(model.centers.rows == 3);
}

TEST_CASE("score-aware solvers: k = n reaches zero loss") {
  const MatrixF x = random_matrix(8, 3, 47);
  const double t = 0.2 * mean_norm(x);
  const auto model = aniso_projective_k_clustering(x, 8, t, 30, 1e-9, 2);
  CHECK(model.loss_trace.back() <= 1e-8);
  double model_loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto w = aniso_weights(std::sqrt(dot64(x.row(i), x.row(i))), t, 3);
    model_loss += loss_from_residuals(x.row(i), model.centers.row(model.assignment[i]),
                                      model.alphas[i], w);
  }
  CHECK(model_loss <= 1e-8);
}

TEST_CASE("score-aware solvers: traces monotone on random instances") {
  for (std::uint64_t inst = 0; inst < 15; ++inst) {
    const MatrixF x = random_matrix(30, 4, 88000 + inst);
    const double t = 0.2 * mean_norm(x);
    const auto a = anisotropic_k_clustering(x, 3, t, 25, 1e-9, inst);
    for (std::size_t i = 1; i < a.loss_trace.size(); ++i)
      CHECK(a.loss_trace[i] <= a.loss_trace[i - 1] + 1e-9 * std::fabs(a.loss_trace[i - 1]));
    for (double al : a.alphas) CHECK(al == 1.0);

    const auto b = aniso_projective_k_clustering(x, 3, t, 25, 1e-9, inst);
    for (std::size_t i = 1; i < b.loss_trace.size(); ++i)
      CHECK(b.loss_trace[i] <= b.loss_trace[i - 1] + 1e-9 * std::fabs(b.loss_trace[i - 1]));
  }
}

TEST_CASE("score-aware solvers: scaling beats the fixed-scale baseline head to head") {
  const MatrixF x = random_matrix(50, 4, 616);
  const double t = 0.2 * mean_norm(x);
  const auto scaled = aniso_projective_k_clustering(x, 4, t, 25, 1e-9, 13);
  const auto fixed = anisotropic_k_clustering(x, 4, t, 25, 1e-9, 13);
  CHECK(scaled.loss_trace.back() <=
        fixed.loss_trace.back() + 1e-9 * std::fabs(fixed.loss_trace.back()));
}

TEST_CASE("normalized sampling init: line data, error cases, antipodal exclusion") {
  {
    MatrixF x(6, 2);
    for (std::size_t i = 0; i < 6; ++i) x.at(i, 0) = static_cast<float>(i + 1);
    const auto init = init_normalized_sampling(x, 2, 5);
    const auto model = projective_k_clustering(x, 2, InitMode::normalized, 20, 1e-9, 5);
    CHECK(oracle::projective_model_loss(x, model.centers) <= 1e-9);
    CHECK(init.rows == 2);
  }
  {
    MatrixF x(3, 2);
    x.at(0, 0) = 1.0f;  // only one nonzero point
    CHECK_THROWS_AS(init_normalized_sampling(x, 2, 1), const error&);
  }
  {
    // {v, -v, w}: once +-v is taken the second seed must be w.
    MatrixF x(3, 2);
    x.at(0, 0) = 1.0f;
    x.at(1, 0) = -1.0f;
    x.at(2, 1) = 2.0f;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto init = init_normalized_sampling(x, 2, seed);
      int on_y = 0;
      for (std::size_t r = 0; r < 2; ++r)
        if (std::fabs(init.at(r, 1)) > 0.5f) ++on_y;
      CHECK(on_y == 1);
    }
  }
}

}  // TEST_SUITE
