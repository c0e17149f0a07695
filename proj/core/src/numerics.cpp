#include "pcpq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "pcpq/rng.hpp"
#include "pcpq/types.hpp"

namespace pcpq {

namespace {

constexpr std::uint64_t kPowerIterSeed = 0x5157A1B2C3D4E5F6ull;
constexpr int kSimpsonPanels = 1024;
constexpr int kRestarts1D = 10;
constexpr int kMaxRounds1D = 100;

double ipow(double base, int p) {
  double r = 1.0, b = base;
  for (int e = p; e > 0; e >>= 1) {
    if (e & 1) r *= b;
    b *= b;
  }
  return r;
}

// Index of the largest-magnitude entry (first on ties).
std::size_t argmax_abs(std::span<const double> v) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::fabs(v[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

SingularTriple top_singular_pair(std::span<const float* const> rows, std::size_t cols,
                                 int max_iters, double tol) {
  const std::size_t r = rows.size();
  SingularTriple out;
  out.u.assign(r, 0.0);
  out.v.assign(cols, 0.0);
  if (cols == 0) fail(errc::data, "top_singular_pair: zero columns");

  // Gram matrix G = A^T A in double.
  std::vector<double> g(cols * cols, 0.0);
  bool all_zero = true;
  for (std::size_t i = 0; i < r; ++i) {
    const float* x = rows[i];
    for (std::size_t a = 0; a < cols; ++a) {
      if (x[a] != 0.0f) all_zero = false;
      const double xa = x[a];
      for (std::size_t b = a; b < cols; ++b) g[a * cols + b] += xa * x[b];
    }
  }
  for (std::size_t a = 0; a < cols; ++a)
    for (std::size_t b = 0; b < a; ++b) g[a * cols + b] = g[b * cols + a];

  if (all_zero || r == 0) {
    out.v[0] = 1.0;  // sigma = 0, direction fixed to e_1
    return out;
  }

  Rng rng(kPowerIterSeed);
  std::vector<double> v(cols), w(cols);
  double rho = 0.0;
  for (int attempt = 0;; ++attempt) {
    double nv = 0.0;
    for (std::size_t a = 0; a < cols; ++a) {
      v[a] = 2.0 * rng.next_double() - 1.0;
      nv += v[a] * v[a];
    }
    nv = std::sqrt(nv);
    for (auto& x : v) x /= nv;

    bool live = false;
    rho = 0.0;
    for (int it = 0; it < max_iters; ++it) {
      double nw = 0.0, rayleigh = 0.0;
      for (std::size_t a = 0; a < cols; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < cols; ++b) acc += g[a * cols + b] * v[b];
        w[a] = acc;
        nw += acc * acc;
        rayleigh += v[a] * acc;  // v^T G v for the current unit v
      }
      nw = std::sqrt(nw);
      if (nw == 0.0) break;  // started in the null space; retry
      for (std::size_t a = 0; a < cols; ++a) v[a] = w[a] / nw;
      if (live && std::fabs(rayleigh - rho) <= tol * std::max(rayleigh, 1e-300)) {
        rho = rayleigh;
        break;
      }
      rho = rayleigh;
      live = true;
    }
    if (live) break;
    if (attempt >= 4) {  // pathological start; fall back to basis vectors
      std::fill(v.begin(), v.end(), 0.0);
      v[attempt % cols] = 1.0;
      break;
    }
  }

  double sigma2 = 0.0;  // final Rayleigh quotient v^T G v
  for (std::size_t a = 0; a < cols; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < cols; ++b) acc += g[a * cols + b] * v[b];
    sigma2 += v[a] * acc;
  }
  out.sigma = std::sqrt(std::max(sigma2, 0.0));
  out.v = v;

  const std::size_t pivot = argmax_abs(out.v);
  const bool flip = out.v[pivot] < 0.0;
  if (flip)
    for (auto& x : out.v) x = -x;

  if (out.sigma > 0.0) {
    for (std::size_t i = 0; i < r; ++i) {
      double acc = 0.0;
      for (std::size_t a = 0; a < cols; ++a) acc += static_cast<double>(rows[i][a]) * out.v[a];
      out.u[i] = acc / out.sigma;
    }
  }
  return out;
}

std::vector<double> solve_spd(std::span<const double> a, std::span<const double> b,
                              double ridge) {
  const std::size_t d = b.size();
  if (a.size() != d * d) fail(errc::data, "solve_spd: shape mismatch");
  std::vector<double> l(a.begin(), a.end());
  for (std::size_t i = 0; i < d; ++i) l[i * d + i] += ridge;

  // In-place lower Cholesky.
  for (std::size_t j = 0; j < d; ++j) {
    double diag = l[j * d + j];
    for (std::size_t c = 0; c < j; ++c) diag -= l[j * d + c] * l[j * d + c];
    if (!(diag > 0.0)) fail(errc::numeric, "solve_spd: matrix not positive definite");
    diag = std::sqrt(diag);
    l[j * d + j] = diag;
    for (std::size_t i = j + 1; i < d; ++i) {
      double acc = l[i * d + j];
      for (std::size_t c = 0; c < j; ++c) acc -= l[i * d + c] * l[j * d + c];
      l[i * d + j] = acc / diag;
    }
  }

  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = b[i];
    for (std::size_t c = 0; c < i; ++c) acc -= l[i * d + c] * y[c];
    y[i] = acc / l[i * d + i];
  }
  std::vector<double> x(d);
  for (std::size_t ii = d; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t c = ii + 1; c < d; ++c) acc -= l[c * d + ii] * x[c];
    x[ii] = acc / l[ii * d + ii];
  }
  return x;
}

double sin_power_integral(int p, double theta_max) {
  if (p < 0) fail(errc::data, "sin_power_integral: negative exponent");
  const double hi = std::numbers::pi / 2.0;
  const double t = std::clamp(theta_max, 0.0, hi);
  if (t == 0.0) return 0.0;
  const double h = t / kSimpsonPanels;
  double sum = ipow(std::sin(0.0), p) + ipow(std::sin(t), p);
  for (int i = 1; i < kSimpsonPanels; ++i) {
    const double f = ipow(std::sin(i * h), p);
    sum += (i & 1) ? 4.0 * f : 2.0 * f;
  }
  return sum * h / 3.0;
}

namespace {

// Canonical form: values strictly increasing, exact duplicates merged,
// assignments remapped.
void canonicalize_codebook(ScalarCodebook& cb) {
  const std::size_t s = cb.values.size();
  std::vector<std::size_t> order(s);
  for (std::size_t i = 0; i < s; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cb.values[a] < cb.values[b]; });
  std::vector<double> sorted;
  std::vector<std::uint32_t> remap(s, 0);
  for (std::size_t pos = 0; pos < s; ++pos) {
    const double val = cb.values[order[pos]];
    if (sorted.empty() || val != sorted.back()) sorted.push_back(val);
    remap[order[pos]] = static_cast<std::uint32_t>(sorted.size() - 1);
  }
  cb.values = std::move(sorted);
  for (auto& a : cb.assignment) a = remap[a];
}

}  // namespace

ScalarCodebook kmeans_1d(std::span<const double> values, std::size_t s,
                         std::uint64_t seed) {
  const std::size_t n = values.size();
  if (n == 0) fail(errc::data, "kmeans_1d: empty input");
  if (s == 0) fail(errc::data, "kmeans_1d: s must be >= 1");
  for (double v : values)
    if (!std::isfinite(v)) fail(errc::data, "kmeans_1d: non-finite value");

  // Few distinct values: the exact zero-loss codebook.
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= s) {
    ScalarCodebook cb;
    cb.values = distinct;
    cb.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(cb.values.begin(), cb.values.end(), values[i]);
      cb.assignment[i] = static_cast<std::uint32_t>(it - cb.values.begin());
    }
    cb.loss = 0.0;
    return cb;
  }

  Rng root(seed);
  ScalarCodebook best;
  best.loss = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < kRestarts1D; ++restart) {
    Rng rng = root.split(static_cast<std::uint64_t>(restart));

    // k-means++ seeding on the raw scalars.
    std::vector<double> centers;
    centers.reserve(s);
    centers.push_back(values[rng.next_index(n)]);
    std::vector<double> d2(n);
    while (centers.size() < s) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double dm = std::numeric_limits<double>::infinity();
        for (double c : centers) dm = std::min(dm, (values[i] - c) * (values[i] - c));
        d2[i] = dm;
        total += dm;
      }
      if (total <= 0.0) {
        centers.push_back(values[rng.next_index(n)]);
        continue;
      }
      double target = rng.next_double() * total;
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
      centers.push_back(values[pick]);
    }

    std::vector<std::uint32_t> assign(n, 0);
    std::vector<std::uint32_t> prev;
    double loss = 0.0;
    for (int round = 0; round < kMaxRounds1D; ++round) {
      loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double bd = std::numeric_limits<double>::infinity();
        std::uint32_t bj = 0;
        for (std::size_t j = 0; j < centers.size(); ++j) {
          const double dd = (values[i] - centers[j]) * (values[i] - centers[j]);
          if (dd < bd) {
            bd = dd;
            bj = static_cast<std::uint32_t>(j);
          }
        }
        assign[i] = bj;
        loss += bd;
      }
      if (!prev.empty() && prev == assign) break;
      prev = assign;

      std::vector<double> sum(centers.size(), 0.0);
      std::vector<std::size_t> cnt(centers.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        sum[assign[i]] += values[i];
        ++cnt[assign[i]];
      }
      for (std::size_t j = 0; j < centers.size(); ++j) {
        if (cnt[j] > 0) {
          centers[j] = sum[j] / static_cast<double>(cnt[j]);
        } else {
          // Reseed an empty slot with the farthest value.
          std::size_t far = 0;
          double fd = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double dd = (values[i] - centers[assign[i]]) * (values[i] - centers[assign[i]]);
            if (dd > fd) {
              fd = dd;
              far = i;
            }
          }
          centers[j] = values[far];
        }
      }
    }

    if (loss < best.loss) {
      best.values = centers;
      best.assignment = assign;
      best.loss = loss;
    }
  }

  canonicalize_codebook(best);
  return best;
}

ScalarCodebook minimize_quadratic_scalars(std::span<const QuadCoeff> coeffs,
                                          std::size_t s, std::uint64_t seed) {
  const std::size_t n = coeffs.size();
  if (n == 0) fail(errc::data, "minimize_quadratic_scalars: empty input");
  if (s == 0) fail(errc::data, "minimize_quadratic_scalars: s must be >= 1");
  std::vector<double> minima(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(coeffs[i].w > 0.0))
      fail(errc::numeric, "minimize_quadratic_scalars: non-positive curvature");
    minima[i] = -coeffs[i].a / (2.0 * coeffs[i].w);
  }

  const auto eval = [&](std::size_t i, double l) {
    return coeffs[i].w * l * l + coeffs[i].a * l + coeffs[i].b;
  };

  Rng root(seed);
  ScalarCodebook best;
  best.loss = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < kRestarts1D; ++restart) {
    Rng rng = root.split(static_cast<std::uint64_t>(restart));

    std::vector<double> lambda(s);
    if (n >= s) {
      // s distinct indices, found by rejection (s is small).
      std::vector<std::size_t> picked;
      while (picked.size() < s) {
        const std::size_t c = rng.next_index(n);
        if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
      }
      for (std::size_t j = 0; j < s; ++j) lambda[j] = minima[picked[j]];
    } else {
      for (std::size_t j = 0; j < s; ++j)
        lambda[j] = minima[j < n ? j : rng.next_index(n)];
    }

    std::vector<std::uint32_t> assign(n, 0);
    std::vector<std::uint32_t> prev;
    double obj = 0.0;
    for (int round = 0; round < kMaxRounds1D; ++round) {
      obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double bv = std::numeric_limits<double>::infinity();
        std::uint32_t bj = 0;
        for (std::size_t j = 0; j < s; ++j) {
          const double v = eval(i, lambda[j]);
          if (v < bv) {
            bv = v;
            bj = static_cast<std::uint32_t>(j);
          }
        }
        assign[i] = bj;
        obj += bv;
      }
      if (!prev.empty() && prev == assign) break;
      prev = assign;

      std::vector<double> sw(s, 0.0), sa(s, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        sw[assign[i]] += coeffs[i].w;
        sa[assign[i]] += coeffs[i].a;
      }
      for (std::size_t j = 0; j < s; ++j) {
        if (sw[j] > 0.0)
          lambda[j] = -sa[j] / (2.0 * sw[j]);
        else
          lambda[j] = minima[rng.next_index(n)];  // empty group: reseed
      }
    }

    if (obj < best.loss) {
      best.values = lambda;
      best.assignment = assign;
      best.loss = obj;
    }
  }

  canonicalize_codebook(best);
  return best;
}

}  // namespace pcpq
