#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcpq/pq_index.hpp"
#include "pcpq/types.hpp"

namespace pcpq {

struct ScoredId {
  std::uint32_t id = 0;
  double score = 0.0;
};

// Exact inner products of q against every row, descending, ties toward
// the lower id. The ground-truth oracle for both metrics.
std::vector<ScoredId> brute_force_topn(const MatrixF& data, std::span<const float> q,
                                       std::size_t topn);

// |exact - approx| / |exact| at the exact top-1 point. Queries whose top
// score is within 1e-12 of zero are degenerate; they raise errc::data and
// the harness counts them instead of averaging them.
double relative_error_top1(double approx_at_top1, double exact_top1_score);

// 1 when the best exact score among the retrieved ids reaches the global
// exact maximum, else 0 — evaluated with the same double-precision dot
// products on both sides.
int recall1_single(const MatrixF& data, std::span<const float> q,
                   std::span<const std::uint32_t> retrieved_ids,
                   double exact_top1_score);

// Draws `samples` standard Gaussian vectors q and averages <q, x-alpha*c>^2;
// returns (empirical mean, |x-alpha*c|^2). The two agree as the sample
// count grows because the Gaussian is isotropic.
std::pair<double, double> isotropy_check(std::span<const float> x, double alpha,
                                         std::span<const float> c, std::size_t samples,
                                         std::uint64_t seed);

// One evaluated query; the report writers serialize these.
struct QueryEval {
  std::uint32_t query_id = 0;
  std::int64_t exact_top1_id = -1;
  double exact_top1_score = 0.0;
  double approx_at_top1 = 0.0;  // NaN when unavailable (not probed / not recorded)
  double rel_error = 0.0;       // NaN when excluded
  std::vector<int> hit_at;      // one 0/1 per requested recall depth
};

struct EvalReport {
  std::string label;  // e.g. "4-bit" (k=16) or "8-bit" (k=256)
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::uint32_t> recall_depths;
  std::vector<double> recall_values;       // aligned with recall_depths
  double mean_rel_error = 0.0;             // over included queries
  std::size_t included_queries = 0;        // queries with a usable rel error
  std::size_t excluded_zero_exact = 0;     // |exact top-1| <= 1e-12
  std::size_t excluded_no_approx = 0;      // approx score unavailable
  bool have_rel_error = false;
  ScoreCounters counters;
  bool have_counters = false;
  std::vector<QueryEval> per_query;
};

// Deterministic serialization: identical reports produce identical bytes.
// The JSON carries the metrics, echo, and counters; the CSV carries one
// row per query. Wall-clock timings are deliberately never written.
void write_report_json(const EvalReport& report, const std::filesystem::path& path);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace pcpq
