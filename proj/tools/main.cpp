// pcpq — product-quantization MIPS toolkit.
//
// Subcommands: gen, build, ground-truth, query, eval. Every run is fully
// determined by its arguments: a fixed seed yields bytewise-identical
// index files and reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcpq/datagen.hpp"
#include "pcpq/eval.hpp"
#include "pcpq/io.hpp"
#include "pcpq/ivf.hpp"
#include "pcpq/pq_index.hpp"
#include "pcpq/types.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(pcpq::errc code) {
  switch (code) {
    case pcpq::errc::usage: return 2;
    case pcpq::errc::numeric: return 4;
    default: return 3;  // data/format problems
  }
}

std::string bit_label(std::uint32_t k) {
  std::uint32_t bits = 0;
  while ((1ull << bits) < k) ++bits;
  return std::to_string(bits) + "-bit";
}

struct GenArgs {
  std::size_t n = 1000;
  std::size_t d = 16;
  std::string dist = "gaussian";
  std::uint64_t seed = 1;
  std::size_t holdout = 0;
  std::string out;
  std::string queries_out;
};

void run_gen(const GenArgs& a) {
  if (a.holdout >= a.n)
    pcpq::fail(pcpq::errc::usage, "--holdout must be smaller than --n");
  if ((a.holdout > 0) != !a.queries_out.empty())
    pcpq::fail(pcpq::errc::usage, "--holdout and --queries-out go together");
  const pcpq::MatrixF all =
      pcpq::generate_dataset(pcpq::dist_from_name(a.dist), a.n, a.d, a.seed);
  const std::size_t keep = a.n - a.holdout;
  pcpq::MatrixF head(keep, a.d);
  std::copy(all.data.begin(), all.data.begin() + keep * a.d, head.data.begin());
  pcpq::write_fvecs(head, a.out);
  if (a.holdout > 0) {
    pcpq::MatrixF tail(a.holdout, a.d);
    std::copy(all.data.begin() + keep * a.d, all.data.end(), tail.data.begin());
    pcpq::write_fvecs(tail, a.queries_out);
  }
  std::cerr << "wrote " << keep << " points";
  if (a.holdout > 0) std::cerr << " + " << a.holdout << " held-out queries";
  std::cerr << " (d=" << a.d << ", " << a.dist << ")\n";
}

struct BuildArgs {
  std::string data;
  std::string method = "pcpq";
  bool quantize_scalars = false;
  std::uint32_t m = 8;
  std::uint32_t k = 16;
  std::uint32_t s = 8;
  double t_frac = 0.2;
  std::uint32_t iters = 20;
  double tol = 1e-6;
  std::uint32_t ivf_kbar = 0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_build(const BuildArgs& a) {
  // Argument-derived failures come before any file touches.
  const pcpq::Method method = pcpq::method_from_name(a.method);
  const pcpq::MatrixF data = pcpq::read_fvecs(a.data);
  pcpq::PQConfig cfg;
  cfg.method = method;
  cfg.quantize_scalars = a.quantize_scalars;
  cfg.m = a.m;
  cfg.k = a.k;
  cfg.s = a.s;
  cfg.t_frac = a.t_frac;
  cfg.max_iters = a.iters;
  cfg.tol = a.tol;
  cfg.seed = a.seed;
  if (a.ivf_kbar == 0) {
    const pcpq::PQIndex index = pcpq::build_pq_index(data, cfg);
    pcpq::write_pq_index(index, a.out);
    const double loss =
        std::accumulate(index.train_loss.begin(), index.train_loss.end(), 0.0);
    std::cerr << "flat index: n=" << index.n() << " reconstruction loss " << loss << "\n";
  } else {
    const pcpq::IVFIndex index = pcpq::build_ivf(data, a.ivf_kbar, cfg, a.seed);
    pcpq::write_ivf_index(index, a.out);
    std::size_t raw = 0;
    for (auto f : index.is_raw) raw += f;
    std::cerr << "container index: n=" << index.n << " kbar=" << index.kbar
              << " raw-fallback clusters=" << raw << "\n";
  }
}

struct GtArgs {
  std::string data;
  std::string queries;
  std::uint32_t topn = 100;
  std::string out;
};

void run_ground_truth(const GtArgs& a) {
  const pcpq::MatrixF data = pcpq::read_fvecs(a.data);
  const pcpq::MatrixF queries = pcpq::read_fvecs(a.queries);
  if (queries.rows == 0) pcpq::fail(pcpq::errc::data, "no queries in " + a.queries);
  if (queries.cols != data.cols)
    pcpq::fail(pcpq::errc::data, "query dimension does not match dataset");
  const std::uint32_t topn = std::min<std::uint32_t>(a.topn, data.rows);
  std::vector<std::vector<std::int32_t>> rows;
  rows.reserve(queries.rows);
  for (std::size_t qi = 0; qi < queries.rows; ++qi) {
    const auto top = pcpq::brute_force_topn(data, queries.row(qi), topn);
    std::vector<std::int32_t> ids(top.size());
    for (std::size_t i = 0; i < top.size(); ++i)
      ids[i] = static_cast<std::int32_t>(top[i].id);
    rows.push_back(std::move(ids));
  }
  pcpq::write_ivecs(rows, a.out);
  std::cerr << "wrote exact top-" << topn << " ids for " << queries.rows << " queries\n";
}

struct QueryArgs {
  std::string index;
  std::string queries;
  std::uint32_t kprobe = 0;  // 0 = probe everything
  std::uint32_t topn = 10;
  std::string out;
  std::string ground_truth;
};

bool sniff_magic(const std::string& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  char head[8] = {};
  in.read(head, 8);
  return in && std::memcmp(head, magic, 8) == 0;
}

std::vector<std::uint32_t> load_gt_top1(const std::string& path, std::size_t expect_rows,
                                        std::size_t n) {
  const auto rows = pcpq::read_ivecs(path);
  if (rows.size() != expect_rows)
    pcpq::fail(pcpq::errc::data, "ground-truth rows do not match query count");
  std::vector<std::uint32_t> top1(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty() || rows[i][0] < 0 ||
        static_cast<std::size_t>(rows[i][0]) >= n)
      pcpq::fail(pcpq::errc::data, "ground-truth id out of range in row " +
                                       std::to_string(i));
    top1[i] = static_cast<std::uint32_t>(rows[i][0]);
  }
  return top1;
}

void write_query_meta(const QueryArgs& a, const ordered_json& index_info,
                      const pcpq::ScoreCounters& counters, std::uint32_t effective_probe,
                      bool any_short) {
  ordered_json j;
  j["index"] = index_info;
  j["kprobe"] = effective_probe;
  j["topn"] = a.topn;
  j["short_results"] = any_short;
  j["op_counters"] = {
      {"table_madds", counters.table_madds}, {"scalar_mults", counters.scalar_mults},
      {"point_mults", counters.point_mults}, {"lookups", counters.lookups},
      {"adds", counters.adds},
  };
  std::ofstream out(a.out + ".meta.json", std::ios::binary | std::ios::trunc);
  if (!out) pcpq::fail(pcpq::errc::data, "cannot write " + a.out + ".meta.json");
  out << j.dump(2) << '\n';
}

void write_gt_scores(const std::string& base, const std::vector<float>& scores) {
  pcpq::MatrixF m(scores.size(), 1);
  std::copy(scores.begin(), scores.end(), m.data.begin());
  pcpq::write_fvecs(m, base + ".gtscore.fvecs");
}

void run_query(const QueryArgs& a) {
  const pcpq::MatrixF queries = pcpq::read_fvecs(a.queries);
  if (queries.rows == 0) pcpq::fail(pcpq::errc::data, "no queries in " + a.queries);

  std::vector<std::vector<std::int32_t>> out_rows;
  out_rows.reserve(queries.rows);
  pcpq::ScoreCounters counters;
  bool any_short = false;

  if (sniff_magic(a.index, "PCPQIDX1")) {
    const pcpq::PQIndex index = pcpq::read_pq_index(a.index);
    if (queries.cols != index.config.d)
      pcpq::fail(pcpq::errc::data, "query dimension does not match index");
    const std::uint32_t topn = std::min<std::uint32_t>(a.topn, index.n());
    any_short = topn < a.topn;

    std::vector<std::uint32_t> gt_top1;
    std::vector<float> gt_scores;
    if (!a.ground_truth.empty())
      gt_top1 = load_gt_top1(a.ground_truth, queries.rows, index.n());

    std::vector<std::uint32_t> order(index.n());
    for (std::size_t qi = 0; qi < queries.rows; ++qi) {
      const std::vector<float> scores = pcpq::score_query(index, queries.row(qi), &counters);
      std::iota(order.begin(), order.end(), 0u);
      std::partial_sort(order.begin(), order.begin() + topn, order.end(),
                        [&](std::uint32_t x, std::uint32_t y) {
                          if (scores[x] != scores[y]) return scores[x] > scores[y];
                          return x < y;
                        });
      std::vector<std::int32_t> ids(topn);
      for (std::uint32_t i = 0; i < topn; ++i)
        ids[i] = static_cast<std::int32_t>(order[i]);
      out_rows.push_back(std::move(ids));
      if (!gt_top1.empty()) gt_scores.push_back(scores[gt_top1[qi]]);
    }
    pcpq::write_ivecs(out_rows, a.out);
    if (!gt_scores.empty()) write_gt_scores(a.out, gt_scores);

    ordered_json info;
    info["type"] = "flat";
    info["method"] = pcpq::method_name(index.config.base.method);
    info["label"] = bit_label(index.k());
    info["n"] = index.n();
    info["d"] = index.config.d;
    info["m"] = index.m();
    info["k"] = index.k();
    info["scales"] = index.scales;
    write_query_meta(a, info, counters, 0, any_short);
  } else if (sniff_magic(a.index, "PCPQIVF1")) {
    const pcpq::IVFIndex index = pcpq::read_ivf_index(a.index);
    if (queries.cols != index.d)
      pcpq::fail(pcpq::errc::data, "query dimension does not match index");
    const std::uint32_t kprobe =
        a.kprobe == 0 ? index.kbar : std::min(a.kprobe, index.kbar);

    std::vector<std::uint32_t> gt_top1;
    std::vector<float> gt_scores;
    if (!a.ground_truth.empty())
      gt_top1 = load_gt_top1(a.ground_truth, queries.rows, index.n);

    std::string sub_method = "mixed";
    std::uint32_t sub_k = 0, sub_m = 0, sub_scales = 0;
    for (std::uint32_t r = 0; r < index.kbar; ++r) {
      if (index.is_raw[r]) continue;
      sub_method = pcpq::method_name(index.sub_indexes[r].config.base.method);
      sub_k = std::max(sub_k, index.sub_indexes[r].k());
      sub_m = index.sub_indexes[r].m();
      sub_scales = index.sub_indexes[r].scales;
      break;
    }

    for (std::size_t qi = 0; qi < queries.rows; ++qi) {
      std::uint32_t requested[1];
      std::span<const std::uint32_t> req;
      if (!gt_top1.empty()) {
        requested[0] = gt_top1[qi];
        req = {requested, 1};
      }
      const pcpq::IVFQueryOutput res =
          pcpq::query_ivf(index, queries.row(qi), kprobe, a.topn, req, &counters);
      any_short = any_short || res.short_result;
      std::vector<std::int32_t> ids(res.top.size());
      for (std::size_t i = 0; i < res.top.size(); ++i)
        ids[i] = static_cast<std::int32_t>(res.top[i].id);
      out_rows.push_back(std::move(ids));
      if (!gt_top1.empty())
        gt_scores.push_back(static_cast<float>(res.requested[0]));
    }
    pcpq::write_ivecs(out_rows, a.out);
    if (!gt_scores.empty()) write_gt_scores(a.out, gt_scores);

    ordered_json info;
    info["type"] = "ivf";
    info["method"] = sub_method;
    info["label"] = bit_label(sub_k == 0 ? 2 : sub_k);
    info["n"] = index.n;
    info["d"] = index.d;
    info["kbar"] = index.kbar;
    info["m"] = sub_m;
    info["k"] = sub_k;
    info["scales"] = sub_scales;
    write_query_meta(a, info, counters, kprobe, any_short);
  } else {
    pcpq::fail(pcpq::errc::bad_magic, "unrecognized index file: " + a.index);
  }
  std::cerr << "queried " << queries.rows << " vectors\n";
}

struct EvalArgs {
  std::string results;
  std::string ground_truth;
  std::string data;
  std::string queries;
  std::string recall_at = "1,10";
  std::string report;
  std::string label;
};

std::vector<std::uint32_t> parse_depths(const std::string& csv) {
  std::vector<std::uint32_t> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    const std::string tok = csv.substr(pos, comma - pos);
    if (tok.empty()) pcpq::fail(pcpq::errc::usage, "bad --recall-at list");
    long v = 0;
    try {
      std::size_t used = 0;
      v = std::stol(tok, &used);
      if (used != tok.size()) pcpq::fail(pcpq::errc::usage, "bad --recall-at list");
    } catch (const std::logic_error&) {
      pcpq::fail(pcpq::errc::usage, "bad --recall-at list");
    }
    if (v < 1) pcpq::fail(pcpq::errc::usage, "recall depths must be >= 1");
    out.push_back(static_cast<std::uint32_t>(v));
    pos = comma + 1;
  }
  if (out.empty()) pcpq::fail(pcpq::errc::usage, "bad --recall-at list");
  return out;
}

void run_eval(const EvalArgs& a) {
  // Argument-derived failures come before any file touches.
  const auto depths = parse_depths(a.recall_at);
  const pcpq::MatrixF data = pcpq::read_fvecs(a.data);
  const pcpq::MatrixF queries = pcpq::read_fvecs(a.queries);
  const auto results = pcpq::read_ivecs(a.results);
  if (results.size() != queries.rows)
    pcpq::fail(pcpq::errc::data, "result rows do not match query count");
  const auto gt_top1 = load_gt_top1(a.ground_truth, queries.rows, data.rows);

  // Optional sidecars written by `query`.
  std::vector<float> gt_scores;
  const std::string gtscore_path = a.results + ".gtscore.fvecs";
  if (fs::exists(gtscore_path)) {
    const pcpq::MatrixF m = pcpq::read_fvecs(gtscore_path);
    if (m.rows != queries.rows || m.cols != 1)
      pcpq::fail(pcpq::errc::data, "gtscore sidecar shape mismatch");
    gt_scores.assign(m.data.begin(), m.data.end());
  }

  pcpq::EvalReport report;
  report.label = a.label;
  report.recall_depths = depths;
  report.have_rel_error = !gt_scores.empty();

  const std::string meta_path = a.results + ".meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    nlohmann::json meta = nlohmann::json::parse(in);
    if (meta.contains("index")) {
      for (auto& [key, value] : meta["index"].items())
        report.config_echo.emplace_back(
            key, value.is_string() ? value.get<std::string>() : value.dump());
      if (report.label.empty() && meta["index"].contains("label"))
        report.label = meta["index"]["label"].get<std::string>();
    }
    if (meta.contains("kprobe"))
      report.config_echo.emplace_back("kprobe", meta["kprobe"].dump());
    if (meta.contains("op_counters")) {
      const auto& oc = meta["op_counters"];
      report.counters.table_madds = oc.value("table_madds", 0ull);
      report.counters.scalar_mults = oc.value("scalar_mults", 0ull);
      report.counters.point_mults = oc.value("point_mults", 0ull);
      report.counters.lookups = oc.value("lookups", 0ull);
      report.counters.adds = oc.value("adds", 0ull);
      report.have_counters = true;
    }
  }

  std::vector<std::size_t> hits(depths.size(), 0);
  double rel_sum = 0.0;
  for (std::size_t qi = 0; qi < queries.rows; ++qi) {
    pcpq::QueryEval row;
    row.query_id = static_cast<std::uint32_t>(qi);
    row.exact_top1_id = gt_top1[qi];
    const auto q = queries.row(qi);
    {
      double acc = 0.0;
      const auto x = data.row(gt_top1[qi]);
      for (std::size_t i = 0; i < q.size(); ++i)
        acc += static_cast<double>(q[i]) * static_cast<double>(x[i]);
      row.exact_top1_score = acc;
    }

    std::vector<std::uint32_t> ids;
    ids.reserve(results[qi].size());
    for (auto v : results[qi]) {
      if (v < 0 || static_cast<std::size_t>(v) >= data.rows)
        pcpq::fail(pcpq::errc::data, "result id out of range in row " + std::to_string(qi));
      ids.push_back(static_cast<std::uint32_t>(v));
    }

    row.hit_at.resize(depths.size(), 0);
    for (std::size_t di = 0; di < depths.size(); ++di) {
      const std::size_t take = std::min<std::size_t>(depths[di], ids.size());
      if (take == 0) continue;
      row.hit_at[di] = pcpq::recall1_single(
          data, q, std::span<const std::uint32_t>(ids.data(), take), row.exact_top1_score);
      hits[di] += row.hit_at[di];
    }

    row.approx_at_top1 = std::numeric_limits<double>::quiet_NaN();
    row.rel_error = std::numeric_limits<double>::quiet_NaN();
    if (!gt_scores.empty()) {
      row.approx_at_top1 = gt_scores[qi];
      if (std::fabs(row.exact_top1_score) <= 1e-12) {
        ++report.excluded_zero_exact;
      } else if (std::isnan(row.approx_at_top1)) {
        ++report.excluded_no_approx;
      } else {
        row.rel_error = pcpq::relative_error_top1(row.approx_at_top1, row.exact_top1_score);
        rel_sum += row.rel_error;
        ++report.included_queries;
      }
    }
    report.per_query.push_back(std::move(row));
  }
  for (std::size_t di = 0; di < depths.size(); ++di)
    report.recall_values.push_back(static_cast<double>(hits[di]) /
                                   static_cast<double>(queries.rows));
  if (report.included_queries > 0)
    report.mean_rel_error = rel_sum / static_cast<double>(report.included_queries);

  pcpq::write_report_json(report, a.report);
  fs::path csv = a.report;
  csv.replace_extension(".csv");
  pcpq::write_report_csv(report, csv);
  std::cerr << "report: " << a.report << " and " << csv.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"product-quantization MIPS toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen", "generate a synthetic dataset");
  cgen->add_option("--n", gen.n, "number of vectors")->required();
  cgen->add_option("--d", gen.d, "dimension")->required();
  cgen->add_option("--dist", gen.dist, "gaussian | unit-sphere | clustered");
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--holdout", gen.holdout, "split this many vectors into a query file");
  cgen->add_option("--out", gen.out, "output fvecs path")->required();
  cgen->add_option("--queries-out", gen.queries_out, "held-out query fvecs path");
  cgen->callback([&] { run_gen(gen); });

  BuildArgs build;
  auto* cbuild = app.add_subcommand("build", "build an index from fvecs data");
  cbuild->add_option("--data", build.data, "input fvecs")->required();
  cbuild->add_option("--method", build.method, "kmeans | scann | pcpq | apcpq");
  cbuild->add_flag("--quantize-scalars", build.quantize_scalars,
                   "snap per-point scales to s codebook values");
  cbuild->add_option("--m", build.m, "sections");
  cbuild->add_option("--k", build.k, "centers per section (16 = 4-bit, 256 = 8-bit)");
  cbuild->add_option("--s", build.s, "scale codebook size");
  cbuild->add_option("--t-frac", build.t_frac, "score threshold / mean norm");
  cbuild->add_option("--iters", build.iters, "solver iteration cap");
  cbuild->add_option("--tol", build.tol, "relative loss-change tolerance");
  cbuild->add_option("--ivf-kbar", build.ivf_kbar, "coarse clusters (0 = flat index)");
  cbuild->add_option("--seed", build.seed, "RNG seed");
  cbuild->add_option("--out", build.out, "output index path")->required();
  cbuild->callback([&] { run_build(build); });

  GtArgs gt;
  auto* cgt = app.add_subcommand("ground-truth", "exact top-N ids per query");
  cgt->add_option("--data", gt.data, "dataset fvecs")->required();
  cgt->add_option("--queries", gt.queries, "query fvecs")->required();
  cgt->add_option("--topN", gt.topn, "list length");
  cgt->add_option("--out", gt.out, "output ivecs path")->required();
  cgt->callback([&] { run_ground_truth(gt); });

  QueryArgs query;
  auto* cquery = app.add_subcommand("query", "retrieve top-N by approximate score");
  cquery->add_option("--index", query.index, "index file")->required();
  cquery->add_option("--queries", query.queries, "query fvecs")->required();
  cquery->add_option("--kprobe", query.kprobe, "clusters to probe (0 = all)");
  cquery->add_option("--topN", query.topn, "results per query");
  cquery->add_option("--out", query.out, "output ivecs path")->required();
  cquery->add_option("--ground-truth", query.ground_truth,
                     "exact ids; records the approximate score at each true top-1");
  cquery->callback([&] { run_query(query); });

  EvalArgs ev;
  auto* ceval = app.add_subcommand("eval", "score retrieval results");
  ceval->add_option("--results", ev.results, "ids from `query`")->required();
  ceval->add_option("--ground-truth", ev.ground_truth, "ids from `ground-truth`")->required();
  ceval->add_option("--data", ev.data, "dataset fvecs")->required();
  ceval->add_option("--queries", ev.queries, "query fvecs")->required();
  ceval->add_option("--recall-at", ev.recall_at, "comma-separated depths");
  ceval->add_option("--report", ev.report, "output JSON path (CSV lands beside it)")
      ->required();
  ceval->add_option("--label", ev.label, "report label override");
  ceval->callback([&] { run_eval(ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const pcpq::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
