#include "pcpq/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "pcpq/rng.hpp"

namespace pcpq {

namespace {

double dot_qx(std::span<const float> q, std::span<const float> x) {
  double acc = 0.0;
  const std::size_t len = std::min(q.size(), x.size());
  for (std::size_t i = 0; i < len; ++i)
    acc += static_cast<double>(q[i]) * static_cast<double>(x[i]);
  return acc;
}

// Shortest round-trip decimal form; locale-independent and stable, so
// emitted reports are bytewise reproducible.
std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<ScoredId> brute_force_topn(const MatrixF& data, std::span<const float> q,
                                       std::size_t topn) {
  if (topn < 1 || topn > data.rows) fail(errc::data, "brute_force_topn: need 1 <= N <= n");
  std::vector<ScoredId> all(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i)
    all[i] = {static_cast<std::uint32_t>(i), dot_qx(q, data.row(i))};
  const auto better = [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + topn, all.end(), better);
  all.resize(topn);
  return all;
}

double relative_error_top1(double approx_at_top1, double exact_top1_score) {
  if (std::fabs(exact_top1_score) <= 1e-12)
    fail(errc::data, "relative_error_top1: degenerate query (exact top-1 score ~ 0)");
  return std::fabs(exact_top1_score - approx_at_top1) / std::fabs(exact_top1_score);
}

int recall1_single(const MatrixF& data, std::span<const float> q,
                   std::span<const std::uint32_t> retrieved_ids,
                   double exact_top1_score) {
  double best = -std::numeric_limits<double>::infinity();
  for (auto id : retrieved_ids) {
    if (id >= data.rows) fail(errc::data, "recall1_single: id out of range");
    best = std::max(best, dot_qx(q, data.row(id)));
  }
  return best >= exact_top1_score ? 1 : 0;
}

std::pair<double, double> isotropy_check(std::span<const float> x, double alpha,
                                         std::span<const float> c, std::size_t samples,
                                         std::uint64_t seed) {
  if (x.size() != c.size()) fail(errc::data, "isotropy_check: dimension mismatch");
  if (samples < 1) fail(errc::data, "isotropy_check: need at least one sample");
  std::vector<double> r(x.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r[i] = static_cast<double>(x[i]) - alpha * static_cast<double>(c[i]);
    norm2 += r[i] * r[i];
  }
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double ip = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) ip += rng.next_gaussian() * r[i];
    acc += ip * ip;
  }
  return {acc / static_cast<double>(samples), norm2};
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["label"] = report.label;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.config_echo) echo[key] = value;
  j["config"] = echo;

  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < report.recall_depths.size(); ++i)
    recall[std::to_string(report.recall_depths[i])] = report.recall_values[i];
  j["recall1_at"] = recall;

  if (report.have_rel_error) {
    j["relative_error"] = {
        {"mean", report.mean_rel_error},
        {"included_queries", report.included_queries},
        {"excluded_zero_exact", report.excluded_zero_exact},
        {"excluded_no_approx", report.excluded_no_approx},
    };
  }
  if (report.have_counters) {
    j["op_counters"] = {
        {"table_madds", report.counters.table_madds},
        {"scalar_mults", report.counters.scalar_mults},
        {"point_mults", report.counters.point_mults},
        {"lookups", report.counters.lookups},
        {"adds", report.counters.adds},
    };
  }
  j["queries"] = report.per_query.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(errc::data, "write failed: " + path.string());
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  out << "query_id,exact_top1_id,exact_top1_score,approx_at_top1,rel_error";
  for (auto n : report.recall_depths) out << ",hit_at_" << n;
  out << '\n';
  for (const auto& row : report.per_query) {
    out << row.query_id << ',' << row.exact_top1_id << ','
        << fmt_double(row.exact_top1_score) << ',' << fmt_double(row.approx_at_top1)
        << ',' << fmt_double(row.rel_error);
    for (std::size_t i = 0; i < report.recall_depths.size(); ++i)
      out << ',' << (i < row.hit_at.size() ? row.hit_at[i] : 0);
    out << '\n';
  }
  if (!out) fail(errc::data, "write failed: " + path.string());
}

}  // namespace pcpq
