#include "pcpq/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcpq/numerics.hpp"
#include "pcpq/rng.hpp"

namespace pcpq {

namespace {

double dotf(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double norm2f(std::span<const float> a) { return dotf(a, a); }

// Quadratic expansion of the per-point score-aware loss in the scale:
//   loss(l) = w l^2 + a l + b  for reconstruction l * c.
struct PointQuad {
  double w, a, b;
};

PointQuad point_quad(double ip, double nx2, double c2, const AnisoWeights& w) {
  return {(w.h_par - w.h_bot) * ip * ip / nx2 + w.h_bot * c2, -2.0 * w.h_par * ip,
          w.h_par * nx2};
}

double quad_at(const PointQuad& q, double l) { return (q.w * l + q.a) * l + q.b; }

double opt_alpha_from(double ip, double nx2, double c2, const AnisoWeights& w) {
  const double denom = (w.h_par - w.h_bot) * ip * ip / nx2 + w.h_bot * c2;
  if (std::fabs(denom) <= 1e-30) return 0.0;
  return w.h_par * ip / denom;
}

void check_centers_nonzero(const MatrixF& centers) {
  for (std::size_t j = 0; j < centers.rows; ++j)
    if (norm2f(centers.row(j)) == 0.0) fail(errc::data, "zero center row");
}

// Sign-canonical copy: each row flipped so its largest-|entry| coordinate
// (first on ties) is non-negative. Used only to make projective seeding
// insensitive to per-point sign flips.
MatrixF canonical_rows(const MatrixF& x) {
  MatrixF out = x;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto row = out.row(i);
    std::size_t piv = 0;
    float best = -1.0f;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const float a = std::fabs(row[j]);
      if (a > best) {
        best = a;
        piv = j;
      }
    }
    if (row[piv] < 0.0f)
      for (auto& v : row) v = -v;
  }
  return out;
}

// k-means++ seeding over the rows listed in `candidates`; returns row ids.
std::vector<std::uint32_t> kmeanspp_ids(const MatrixF& x,
                                        std::span<const std::uint32_t> candidates,
                                        std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> seeds;
  seeds.reserve(k);
  if (candidates.empty()) return seeds;
  seeds.push_back(candidates[rng.next_index(candidates.size())]);
  std::vector<double> d2(candidates.size(), std::numeric_limits<double>::infinity());
  while (seeds.size() < k) {
    const auto last = x.row(seeds.back());
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double dd = 0.0;
      const auto xi = x.row(candidates[i]);
      for (std::size_t j = 0; j < xi.size(); ++j) {
        const double diff = static_cast<double>(xi[j]) - static_cast<double>(last[j]);
        dd += diff * diff;
      }
      d2[i] = std::min(d2[i], dd);
      total += d2[i];
    }
    if (total <= 0.0) {
      seeds.push_back(candidates[rng.next_index(candidates.size())]);
      continue;
    }
    double target = rng.next_double() * total;
    std::size_t pick = candidates.size() - 1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    seeds.push_back(candidates[pick]);
  }
  return seeds;
}

std::vector<std::uint32_t> nonzero_rows(const MatrixF& x) {
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < x.rows; ++i)
    if (norm2f(x.row(i)) > 0.0) ids.push_back(static_cast<std::uint32_t>(i));
  return ids;
}

// Initial centers for the direction-based solvers: k-means++ seeds drawn
// from the nonzero points (canonicalized for the projective objective),
// topped up with basis vectors if the data cannot supply k of them.
MatrixF seed_centers(const MatrixF& x, std::size_t k, Rng& rng, bool canonical,
                     bool require_nonzero) {
  const MatrixF* source = &x;
  MatrixF canon;
  if (canonical) {
    canon = canonical_rows(x);
    source = &canon;
  }
  std::vector<std::uint32_t> candidates;
  if (require_nonzero) {
    candidates = nonzero_rows(*source);
  } else {
    candidates.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) candidates[i] = static_cast<std::uint32_t>(i);
  }
  const auto ids = kmeanspp_ids(*source, candidates, k, rng);
  MatrixF centers(k, x.cols);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto src = source->row(ids[j]);
    auto dst = centers.row(j);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  for (std::size_t j = ids.size(); j < k; ++j)
    centers.at(j, j % x.cols) = 1.0f;  // deterministic nonzero fill
  return centers;
}

bool converged(const std::vector<double>& trace, double tol) {
  if (trace.size() < 2) return false;
  const double prev = trace[trace.size() - 2];
  const double cur = trace.back();
  return std::fabs(prev - cur) <= tol * std::max(std::fabs(prev), 1e-300);
}

// Moves the highest-loss point into each empty cluster (its loss becomes
// zero and the cluster's center becomes the point). Clusters that stay
// empty because every loss is zero keep their previous center.
void reseed_empty_clusters(const MatrixF& x, MatrixF& centers, AssignResult& ar) {
  const std::size_t k = centers.rows;
  std::vector<std::size_t> counts(k, 0);
  for (auto a : ar.assignment) ++counts[a];
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      std::size_t far = 0;
      double fl = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        if (ar.point_loss[i] > fl) {
          fl = ar.point_loss[i];
          far = i;
        }
      }
      if (!(fl > 0.0)) continue;  // nothing can improve this cluster
      const auto src = x.row(far);
      auto dst = centers.row(j);
      std::copy(src.begin(), src.end(), dst.begin());
      --counts[ar.assignment[far]];
      ++counts[j];
      ar.assignment[far] = static_cast<std::uint32_t>(j);
      ar.alphas[far] = 1.0;
      ar.loss -= ar.point_loss[far];
      ar.point_loss[far] = 0.0;
      changed = true;
    }
  }
}

std::vector<std::vector<std::uint32_t>> members_of(std::span<const std::uint32_t> assignment,
                                                   std::size_t k) {
  std::vector<std::vector<std::uint32_t>> m(k);
  for (std::size_t i = 0; i < assignment.size(); ++i)
    m[assignment[i]].push_back(static_cast<std::uint32_t>(i));
  return m;
}

std::vector<const float*> row_ptrs(const MatrixF& x, std::span<const std::uint32_t> ids) {
  std::vector<const float*> p;
  p.reserve(ids.size());
  for (auto i : ids) p.push_back(x.row(i).data());
  return p;
}

}  // namespace

AnisoWeights aniso_weights(double norm_x, double t, int dbar) {
  if (!(norm_x > 0.0)) fail(errc::data, "aniso_weights: norm must be positive");
  if (t < 0.0 || !std::isfinite(t)) fail(errc::data, "aniso_weights: bad threshold");
  if (dbar < 2) fail(errc::data, "aniso_weights: dbar must be >= 2");
  const double theta = t / norm_x;  // clamped inside sin_power_integral
  const double i_lo = sin_power_integral(dbar - 2, theta);
  const double i_hi = sin_power_integral(dbar, theta);
  AnisoWeights w;
  w.h_bot = std::max(i_hi, 0.0);
  // Analytically (dbar-1)*(I_lo - I_hi) >= I_hi with equality only at the
  // clamp boundary; keep the ordering under quadrature round-off.
  w.h_par = std::max((dbar - 1) * (i_lo - i_hi), w.h_bot);
  return w;
}

ResidualPair residual_components(std::span<const double> x, std::span<const double> c) {
  double nx2 = 0.0;
  for (double v : x) nx2 += v * v;
  if (!(nx2 > 0.0)) fail(errc::data, "residual_components: zero-norm point");
  double ip = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ip += x[i] * c[i];
  const double scale = ip / nx2;
  ResidualPair out;
  out.r_par.resize(x.size());
  out.r_bot.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.r_par[i] = x[i] - scale * x[i];
    out.r_bot[i] = scale * x[i] - c[i];
  }
  return out;
}

double opt_alpha_aniso(std::span<const float> x, std::span<const float> c,
                       const AnisoWeights& w) {
  const double nx2 = norm2f(x);
  if (!(nx2 > 0.0)) fail(errc::data, "opt_alpha_aniso: zero-norm point");
  return opt_alpha_from(dotf(x, c), nx2, norm2f(c), w);
}

double aniso_point_loss(std::span<const float> x, std::span<const float> c,
                        double alpha, const AnisoWeights& w) {
  const double nx2 = norm2f(x);
  if (!(nx2 > 0.0)) return 0.0;
  return quad_at(point_quad(dotf(x, c), nx2, norm2f(c), w), alpha);
}

AssignResult assign_projective(const MatrixF& x, const MatrixF& centers) {
  if (centers.rows == 0 || centers.cols != x.cols)
    fail(errc::data, "assign_projective: bad centers");
  check_centers_nonzero(centers);
  const std::size_t n = x.rows, k = centers.rows;
  std::vector<double> c2(k);
  for (std::size_t j = 0; j < k; ++j) c2[j] = norm2f(centers.row(j));

  AssignResult out;
  out.assignment.resize(n);
  out.alphas.resize(n);
  out.point_loss.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const double nx2 = norm2f(xi);
    if (nx2 == 0.0) {
      out.assignment[i] = 0;
      out.alphas[i] = 0.0;
      out.point_loss[i] = 0.0;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t bj = 0;
    double bip = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double ip = dotf(xi, centers.row(j));
      const double l = nx2 - ip * ip / c2[j];
      if (l < best) {
        best = l;
        bj = static_cast<std::uint32_t>(j);
        bip = ip;
      }
    }
    out.assignment[i] = bj;
    out.alphas[i] = bip / c2[bj];
    out.point_loss[i] = std::max(best, 0.0);
    out.loss += out.point_loss[i];
  }
  return out;
}

namespace {

// Scaled score-aware assignment with an optional per-point fallback: a
// point only switches clusters if doing so does not increase its own
// score-aware loss relative to keeping its previous cluster (evaluated
// against the same centers with the optimal scale). The public op passes
// no previous assignment and matches the written procedure exactly.
AssignResult assign_aniso_impl(const MatrixF& x, const MatrixF& centers,
                               std::span<const AnisoWeights> weights, bool allow_scaling,
                               std::span<const std::uint32_t> prev) {
  if (centers.rows == 0 || centers.cols != x.cols)
    fail(errc::data, "assign_anisotropic: bad centers");
  if (weights.size() != x.rows) fail(errc::data, "assign_anisotropic: weights size");
  check_centers_nonzero(centers);
  const std::size_t n = x.rows, k = centers.rows;
  std::vector<double> c2(k);
  for (std::size_t j = 0; j < k; ++j) c2[j] = norm2f(centers.row(j));

  AssignResult out;
  out.assignment.resize(n);
  out.alphas.resize(n);
  out.point_loss.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const double nx2 = norm2f(xi);
    if (nx2 == 0.0) {
      out.assignment[i] = 0;
      out.alphas[i] = 0.0;
      out.point_loss[i] = 0.0;
      continue;
    }
    const AnisoWeights& w = weights[i];
    std::uint32_t bj = 0;
    double balpha = 1.0, bloss = 0.0;
    if (allow_scaling) {
      double bdist = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double ip = dotf(xi, centers.row(j));
        const double beta = opt_alpha_from(ip, nx2, c2[j], w);
        const double dist = nx2 - 2.0 * beta * ip + beta * beta * c2[j];
        if (dist < bdist) {
          bdist = dist;
          bj = static_cast<std::uint32_t>(j);
          balpha = beta;
        }
      }
      const double bip = dotf(xi, centers.row(bj));
      bloss = quad_at(point_quad(bip, nx2, c2[bj], w), balpha);
      if (!prev.empty() && prev[i] != bj) {
        const std::uint32_t pj = prev[i];
        const double pip = dotf(xi, centers.row(pj));
        const double pbeta = opt_alpha_from(pip, nx2, c2[pj], w);
        const double ploss = quad_at(point_quad(pip, nx2, c2[pj], w), pbeta);
        if (ploss < bloss) {
          bj = pj;
          balpha = pbeta;
          bloss = ploss;
        }
      }
    } else {
      bloss = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double ip = dotf(xi, centers.row(j));
        const double l = quad_at(point_quad(ip, nx2, c2[j], w), 1.0);
        if (l < bloss) {
          bloss = l;
          bj = static_cast<std::uint32_t>(j);
        }
      }
      balpha = 1.0;
    }
    out.assignment[i] = bj;
    out.alphas[i] = balpha;
    out.point_loss[i] = std::max(bloss, 0.0);
    out.loss += out.point_loss[i];
  }
  return out;
}

}  // namespace

AssignResult assign_anisotropic(const MatrixF& x, const MatrixF& centers,
                                std::span<const AnisoWeights> weights,
                                bool allow_scaling) {
  return assign_aniso_impl(x, centers, weights, allow_scaling, {});
}

std::vector<double> center_projective(std::span<const float* const> rows, std::size_t d) {
  return top_singular_pair(rows, d).v;
}

std::vector<double> center_anisotropic(std::span<const float* const> rows, std::size_t d,
                                       std::span<const double> alphas,
                                       std::span<const AnisoWeights> weights) {
  if (rows.size() != alphas.size() || rows.size() != weights.size())
    fail(errc::data, "center_anisotropic: size mismatch");
  std::vector<double> m(d * d, 0.0), rhs(d, 0.0);
  double diag = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const float* xi = rows[i];
    double nx2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) nx2 += static_cast<double>(xi[a]) * xi[a];
    if (nx2 == 0.0) continue;
    const double a2 = alphas[i] * alphas[i];
    const double coef = a2 * (weights[i].h_par - weights[i].h_bot) / nx2;
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = xi[a];
      for (std::size_t b = a; b < d; ++b) m[a * d + b] += coef * xa * xi[b];
      rhs[a] += alphas[i] * weights[i].h_par * xa;
    }
    diag += a2 * weights[i].h_bot;
  }
  for (std::size_t a = 0; a < d; ++a) {
    m[a * d + a] += diag;
    for (std::size_t b = 0; b < a; ++b) m[a * d + b] = m[b * d + a];
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) trace += m[a * d + a];
  return solve_spd(m, rhs, 1e-9 * trace / static_cast<double>(d));
}

MatrixF init_normalized_sampling(const MatrixF& x, std::size_t k, std::uint64_t seed) {
  const auto ids = nonzero_rows(x);
  if (ids.size() < k) fail(errc::data, "init_normalized_sampling: fewer than k nonzero points");
  MatrixF unit(ids.size(), x.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = x.row(ids[i]);
    auto dst = unit.row(i);
    const double inv = 1.0 / std::sqrt(norm2f(src));
    for (std::size_t j = 0; j < x.cols; ++j)
      dst[j] = static_cast<float>(src[j] * inv);
  }
  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.push_back(rng.next_index(unit.rows));
  std::vector<double> d2(unit.rows, std::numeric_limits<double>::infinity());
  while (picked.size() < k) {
    const auto last = unit.row(picked.back());
    double total = 0.0;
    for (std::size_t i = 0; i < unit.rows; ++i) {
      const auto xi = unit.row(i);
      double dminus = 0.0, dplus = 0.0;
      for (std::size_t j = 0; j < xi.size(); ++j) {
        const double a = static_cast<double>(xi[j]) - last[j];
        const double b = static_cast<double>(xi[j]) + last[j];
        dminus += a * a;
        dplus += b * b;
      }
      d2[i] = std::min(d2[i], std::min(dminus, dplus));
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.next_index(unit.rows);
    } else {
      double target = rng.next_double() * total;
      pick = unit.rows - 1;
      for (std::size_t i = 0; i < unit.rows; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    picked.push_back(pick);
  }
  MatrixF centers(k, x.cols);
  for (std::size_t j = 0; j < k; ++j) {
    const auto src = unit.row(picked[j]);
    std::copy(src.begin(), src.end(), centers.row(j).begin());
  }
  return centers;
}

namespace {

void check_solver_args(const MatrixF& x, std::size_t k, std::uint32_t max_iters) {
  if (x.rows == 0) fail(errc::data, "clustering: empty input");
  if (k == 0 || k > x.rows) fail(errc::data, "clustering: need 1 <= k <= n");
  if (max_iters < 1) fail(errc::data, "clustering: max_iters must be >= 1");
  for (float v : x.data)
    if (!std::isfinite(v)) fail(errc::data, "clustering: non-finite input");
}

}  // namespace

ClusterModel kmeans_pp(const MatrixF& x, std::size_t k, std::uint32_t max_iters,
                       double tol, std::uint64_t seed) {
  check_solver_args(x, k, max_iters);
  Rng rng(seed);
  MatrixF centers = seed_centers(x, k, rng, /*canonical=*/false, /*require_nonzero=*/false);

  ClusterModel model;
  AssignResult ar;
  const auto assign = [&]() {
    ar.assignment.assign(x.rows, 0);
    ar.alphas.assign(x.rows, 1.0);
    ar.point_loss.assign(x.rows, 0.0);
    ar.loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto xi = x.row(i);
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t bj = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const auto cj = centers.row(j);
        double dd = 0.0;
        for (std::size_t a = 0; a < xi.size(); ++a) {
          const double diff = static_cast<double>(xi[a]) - static_cast<double>(cj[a]);
          dd += diff * diff;
        }
        if (dd < best) {
          best = dd;
          bj = static_cast<std::uint32_t>(j);
        }
      }
      ar.assignment[i] = bj;
      ar.point_loss[i] = best;
      ar.loss += best;
    }
  };

  for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
    assign();
    reseed_empty_clusters(x, centers, ar);
    // Center update: per-cluster mean.
    const auto mem = members_of(ar.assignment, k);
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!mem[j].empty()) {
        std::vector<double> mean(x.cols, 0.0);
        for (auto i : mem[j]) {
          const auto xi = x.row(i);
          for (std::size_t a = 0; a < x.cols; ++a) mean[a] += xi[a];
        }
        auto cj = centers.row(j);
        for (std::size_t a = 0; a < x.cols; ++a)
          cj[a] = static_cast<float>(mean[a] / static_cast<double>(mem[j].size()));
      }
      for (auto i : mem[j]) {
        const auto xi = x.row(i);
        const auto cj = centers.row(j);
        double dd = 0.0;
        for (std::size_t a = 0; a < x.cols; ++a) {
          const double diff = static_cast<double>(xi[a]) - static_cast<double>(cj[a]);
          dd += diff * diff;
        }
        loss += dd;
      }
    }
    model.loss_trace.push_back(loss);
    if (converged(model.loss_trace, tol)) break;
  }
  assign();  // final memberships against the final centers
  reseed_empty_clusters(x, centers, ar);
  model.centers = std::move(centers);
  model.assignment = std::move(ar.assignment);
  model.alphas = std::move(ar.alphas);
  return model;
}

ClusterModel projective_k_clustering_warm(const MatrixF& x, const MatrixF& init_centers,
                                          std::uint32_t max_iters, double tol) {
  check_solver_args(x, init_centers.rows, max_iters);
  MatrixF centers = init_centers;
  check_centers_nonzero(centers);
  const std::size_t k = centers.rows;

  ClusterModel model;
  AssignResult ar;
  // Projective loss of one cluster under a candidate center.
  const auto cluster_loss = [&](std::span<const std::uint32_t> mem,
                                std::span<const float> c) {
    const double c2 = norm2f(c);
    double loss = 0.0;
    for (auto i : mem) {
      const auto xi = x.row(i);
      const double ip = dotf(xi, c);
      loss += std::max(norm2f(xi) - ip * ip / c2, 0.0);
    }
    return loss;
  };

  for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
    ar = assign_projective(x, centers);
    reseed_empty_clusters(x, centers, ar);
    const auto mem = members_of(ar.assignment, k);
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!mem[j].empty()) {
        const auto ptrs = row_ptrs(x, mem[j]);
        const auto dir = center_projective(ptrs, x.cols);
        std::vector<float> cand(x.cols);
        for (std::size_t a = 0; a < x.cols; ++a) cand[a] = static_cast<float>(dir[a]);
        // Keep the old center if the (float-rounded) update does not help.
        const double old_l = cluster_loss(mem[j], centers.row(j));
        const double new_l = cluster_loss(mem[j], cand);
        if (new_l < old_l) {
          std::copy(cand.begin(), cand.end(), centers.row(j).begin());
          loss += new_l;
        } else {
          loss += old_l;
        }
      }
    }
    model.loss_trace.push_back(loss);
    if (converged(model.loss_trace, tol)) break;
  }
  ar = assign_projective(x, centers);
  reseed_empty_clusters(x, centers, ar);
  model.centers = std::move(centers);
  model.assignment = std::move(ar.assignment);
  model.alphas = std::move(ar.alphas);
  return model;
}

ClusterModel projective_k_clustering(const MatrixF& x, std::size_t k, InitMode init,
                                     std::uint32_t max_iters, double tol,
                                     std::uint64_t seed) {
  check_solver_args(x, k, max_iters);
  MatrixF centers;
  if (init == InitMode::normalized) {
    centers = init_normalized_sampling(x, k, Rng::mix(seed, 1));
  } else {
    Rng rng(seed);
    centers = seed_centers(x, k, rng, /*canonical=*/true, /*require_nonzero=*/true);
  }
  return projective_k_clustering_warm(x, centers, max_iters, tol);
}

namespace {

// Shared loop for the two score-aware solvers.
ClusterModel aniso_solver(const MatrixF& x, std::size_t k, double t,
                          std::uint32_t max_iters, double tol, std::uint64_t seed,
                          bool allow_scaling) {
  check_solver_args(x, k, max_iters);
  if (t < 0.0 || !std::isfinite(t)) fail(errc::data, "clustering: bad threshold");
  const int dbar = static_cast<int>(x.cols);
  if (dbar < 2) fail(errc::data, "clustering: score-aware solvers need width >= 2");

  Rng rng(seed);
  MatrixF centers = seed_centers(x, k, rng, /*canonical=*/false, /*require_nonzero=*/true);

  // Weights depend only on the point norms; compute them once.
  std::vector<AnisoWeights> weights(x.rows);
  bool any_weight = false;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double nx2 = norm2f(x.row(i));
    if (nx2 > 0.0) {
      weights[i] = aniso_weights(std::sqrt(nx2), t, dbar);
      if (weights[i].h_par > 0.0 || weights[i].h_bot > 0.0) any_weight = true;
    }
  }

  ClusterModel model;
  if (!any_weight) {
    // t == 0 (or no nonzero points): the loss is identically zero.
    model.centers = std::move(centers);
    model.assignment.assign(x.rows, 0);
    model.alphas.assign(x.rows, 1.0);
    model.loss_trace.push_back(0.0);
    model.degenerate = true;
    return model;
  }

  const auto cluster_loss = [&](std::span<const std::uint32_t> mem,
                                std::span<const float> c,
                                std::span<const double> alphas) {
    const double c2 = norm2f(c);
    double loss = 0.0;
    for (auto i : mem) {
      const auto xi = x.row(i);
      const double nx2 = norm2f(xi);
      if (nx2 == 0.0) continue;
      loss += quad_at(point_quad(dotf(xi, c), nx2, c2, weights[i]), alphas[i]);
    }
    return loss;
  };

  AssignResult ar;
  for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
    ar = assign_aniso_impl(x, centers, weights, allow_scaling,
                           iter == 0 ? std::span<const std::uint32_t>{}
                                     : std::span<const std::uint32_t>(model.assignment));
    reseed_empty_clusters(x, centers, ar);
    model.assignment = ar.assignment;

    const auto mem = members_of(ar.assignment, k);
    for (std::size_t j = 0; j < k; ++j) {
      if (mem[j].empty()) continue;
      const auto ptrs = row_ptrs(x, mem[j]);
      std::vector<double> al(mem[j].size());
      std::vector<AnisoWeights> wl(mem[j].size());
      for (std::size_t i = 0; i < mem[j].size(); ++i) {
        al[i] = ar.alphas[mem[j][i]];
        wl[i] = weights[mem[j][i]];
      }
      std::vector<float> cand(x.cols);
      bool solved = true;
      try {
        const auto c = center_anisotropic(ptrs, x.cols, al, wl);
        for (std::size_t a = 0; a < x.cols; ++a) cand[a] = static_cast<float>(c[a]);
        if (norm2f(cand) == 0.0) solved = false;
      } catch (const error&) {
        solved = false;  // singular system: keep the previous center
      }
      if (!solved) continue;
      // ar.alphas is indexed by global point id, matching the lambda.
      const double old_l = cluster_loss(mem[j], centers.row(j), ar.alphas);
      const double new_l = cluster_loss(mem[j], cand, ar.alphas);
      if (new_l < old_l) std::copy(cand.begin(), cand.end(), centers.row(j).begin());
    }

    // Refresh the scales against the updated centers, then log the loss.
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto xi = x.row(i);
      const double nx2 = norm2f(xi);
      if (nx2 == 0.0) {
        ar.alphas[i] = allow_scaling ? 0.0 : 1.0;
        continue;
      }
      const auto cj = centers.row(ar.assignment[i]);
      const double ip = dotf(xi, cj);
      const double c2 = norm2f(cj);
      if (allow_scaling) ar.alphas[i] = opt_alpha_from(ip, nx2, c2, weights[i]);
      loss += quad_at(point_quad(ip, nx2, c2, weights[i]), ar.alphas[i]);
    }
    model.loss_trace.push_back(loss);
    if (converged(model.loss_trace, tol)) break;
  }

  ar = assign_aniso_impl(x, centers, weights, allow_scaling, model.assignment);
  reseed_empty_clusters(x, centers, ar);
  model.centers = std::move(centers);
  model.assignment = std::move(ar.assignment);
  if (allow_scaling)
    model.alphas = std::move(ar.alphas);
  else
    model.alphas.assign(x.rows, 1.0);  // the fixed-scale baseline always uses 1
  return model;
}

}  // namespace

ClusterModel anisotropic_k_clustering(const MatrixF& x, std::size_t k, double t,
                                      std::uint32_t max_iters, double tol,
                                      std::uint64_t seed) {
  return aniso_solver(x, k, t, max_iters, tol, seed, /*allow_scaling=*/false);
}

ClusterModel aniso_projective_k_clustering(const MatrixF& x, std::size_t k, double t,
                                           std::uint32_t max_iters, double tol,
                                           std::uint64_t seed) {
  return aniso_solver(x, k, t, max_iters, tol, seed, /*allow_scaling=*/true);
}

}  // namespace pcpq
