#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pcpq {

struct SingularTriple {
  double sigma = 0.0;
  std::vector<double> u;  // length rows
  std::vector<double> v;  // length cols, unit, sign-canonicalized
};

// Leading singular triple of the matrix whose rows are `rows` (each of
// length `cols`), via power iteration on A^T A. Deterministic start,
// convergence on the Rayleigh-quotient change. Sign convention: the
// entry of v with the largest magnitude (first on ties) is non-negative.
// An all-zero matrix yields sigma = 0, v = e_1, u = 0.
SingularTriple top_singular_pair(std::span<const float* const> rows, std::size_t cols,
                                 int max_iters = 500, double tol = 1e-10);

// Solves (A + ridge*I) x = b for symmetric positive definite A (row-major
// d x d) by Cholesky. Throws errc::numeric if a pivot is not positive.
std::vector<double> solve_spd(std::span<const double> a, std::span<const double> b,
                              double ridge);

// Integral of sin(theta)^p over [0, theta_max] with theta_max clamped to
// [0, pi/2]. Composite Simpson on 1024 uniform panels; absolute error
// stays under 1e-10 for p <= 64.
double sin_power_integral(int p, double theta_max);

// 1-D codebook with assignments. Values are strictly increasing
// (exact ties collapsed); `assignment[i]` indexes `values`.
struct ScalarCodebook {
  std::vector<double> values;
  std::vector<std::uint32_t> assignment;
  double loss = 0.0;
};

// Lloyd's algorithm in one dimension with k-means++ seeding, 10 restarts,
// best loss kept. Fewer than s distinct inputs produce an exact zero-loss
// codebook of the distinct values. Empty input is an error.
ScalarCodebook kmeans_1d(std::span<const double> values, std::size_t s,
                         std::uint64_t seed);

// One per-point quadratic w*x^2 + a*x + b with w > 0.
struct QuadCoeff {
  double w = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Picks s shared scalars minimizing sum_i min_l (w_i l^2 + a_i l + b_i)
// by alternating assignment and the closed-form group update
// lambda = -sum(a)/(2 sum(w)). 10 restarts seeded from per-point minima,
// at most 100 rounds each; empty groups are reseeded from a random
// per-point minimum. Non-positive w_i is an error (upstream bug).
ScalarCodebook minimize_quadratic_scalars(std::span<const QuadCoeff> coeffs,
                                          std::size_t s, std::uint64_t seed);

}  // namespace pcpq
