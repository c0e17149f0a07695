#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcpq/types.hpp"

namespace pcpq {

// Score-aware loss weights for one point. h_par weighs the residual
// component parallel to the point, h_bot the orthogonal one;
// h_par >= h_bot >= 0 always holds.
struct AnisoWeights {
  double h_par = 0.0;
  double h_bot = 0.0;
};

// Weights for a point of norm `norm_x` under score threshold t, in a
// section of width dbar (>= 2). The integration limit is
// clamp(t / norm_x, 0, pi/2):
//   h_bot = I(dbar),  h_par = (dbar - 1) * (I(dbar - 2) - I(dbar))
// with I(p) the sin^p integral over [0, theta_max].
AnisoWeights aniso_weights(double norm_x, double t, int dbar);

// Residual split of x relative to the direction of x itself, against a
// (possibly scaled) center c:
//   r_par = x - (<x,c>/|x|^2) x,   r_bot = (<x,c>/|x|^2) x - c.
// r_par + r_bot = x - c and the two pieces are orthogonal.
struct ResidualPair {
  std::vector<double> r_par;
  std::vector<double> r_bot;
};
ResidualPair residual_components(std::span<const double> x, std::span<const double> c);

// Loss-minimizing scaling of center c for point x:
//   alpha = h_par <x,c> / ((h_par - h_bot) <x,c>^2 / |x|^2 + h_bot |c|^2).
// Returns 0 when the denominator vanishes (<= 1e-30).
double opt_alpha_aniso(std::span<const float> x, std::span<const float> c,
                       const AnisoWeights& w);

struct AssignResult {
  std::vector<std::uint32_t> assignment;
  std::vector<double> alphas;
  std::vector<double> point_loss;
  double loss = 0.0;
};

// Nearest line through the origin: j* minimizes |x - proj_cj(x)|, alpha is
// the projection coefficient <x,c>/|c|^2. Ties go to the lowest index;
// zero-norm points take center 0 with alpha 0 and zero loss.
AssignResult assign_projective(const MatrixF& x, const MatrixF& centers);

// Score-aware assignment. With allow_scaling, each candidate center is
// first optimally scaled (opt_alpha_aniso) and j* minimizes the Euclidean
// distance |x - beta_j c_j|; without, alpha stays 1 and j* minimizes the
// per-point score-aware loss directly. weights[i] must be valid for every
// nonzero-norm point.
AssignResult assign_anisotropic(const MatrixF& x, const MatrixF& centers,
                                std::span<const AnisoWeights> weights,
                                bool allow_scaling);

// Best direction for a cluster: leading right singular vector of the rows
// (unit length, sign-canonicalized). An all-zero cluster yields e_1.
std::vector<double> center_projective(std::span<const float* const> rows,
                                      std::size_t d);

// Score-aware center for fixed alphas: solves
//   [sum_i a_i^2 ((h_par_i - h_bot_i)/|x_i|^2) x_i x_i^T + (sum_i a_i^2 h_bot_i) I] c
//     = sum_i a_i h_par_i x_i
// via solve_spd with ridge 1e-9 * trace / d. Zero-norm rows are skipped.
std::vector<double> center_anisotropic(std::span<const float* const> rows,
                                       std::size_t d, std::span<const double> alphas,
                                       std::span<const AnisoWeights> weights);

struct ClusterModel {
  MatrixF centers;                       // k x d
  std::vector<std::uint32_t> assignment; // n
  std::vector<double> alphas;            // n (identically 1 for k-means/plain score-aware)
  std::vector<double> loss_trace;        // one entry per iteration, non-increasing
  bool degenerate = false;               // all score weights vanished (t == 0)
};

enum class InitMode { kmeanspp, normalized };

// Direction-aware seeding: k distinct unit directions sampled with
// probability proportional to min(|x_hat - s|^2, |x_hat + s|^2) over the
// already chosen seeds. Errors if fewer than k nonzero points exist.
MatrixF init_normalized_sampling(const MatrixF& x, std::size_t k, std::uint64_t seed);

// Lloyd's algorithm with k-means++ seeding. alphas are identically 1.
ClusterModel kmeans_pp(const MatrixF& x, std::size_t k, std::uint32_t max_iters,
                       double tol, std::uint64_t seed);

// Alternates assign_projective with per-cluster leading-direction updates.
ClusterModel projective_k_clustering(const MatrixF& x, std::size_t k, InitMode init,
                                     std::uint32_t max_iters, double tol,
                                     std::uint64_t seed);
// Same solver from explicit initial centers (rows must be nonzero).
ClusterModel projective_k_clustering_warm(const MatrixF& x, const MatrixF& init_centers,
                                          std::uint32_t max_iters, double tol);

// Score-aware clustering with alpha fixed at 1 (baseline).
ClusterModel anisotropic_k_clustering(const MatrixF& x, std::size_t k, double t,
                                      std::uint32_t max_iters, double tol,
                                      std::uint64_t seed);

// Score-aware projective clustering: scaled assignment, fixed-alpha center
// solve, then an alpha refresh before each iteration's loss is logged.
ClusterModel aniso_projective_k_clustering(const MatrixF& x, std::size_t k, double t,
                                           std::uint32_t max_iters, double tol,
                                           std::uint64_t seed);

// Per-point score-aware loss of x against center c at scale alpha
// (the quadratic expansion of h_par |r_par|^2 + h_bot |r_bot|^2).
double aniso_point_loss(std::span<const float> x, std::span<const float> c,
                        double alpha, const AnisoWeights& w);

}  // namespace pcpq
