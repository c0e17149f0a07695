// Microbenchmarks for the hot paths: query-side table construction, the
// table-scan scoring loop, solver iterations at section width, and a full
// coarse-partitioned query. Sizes mirror the 4-bit configuration used in
// the evaluation pipeline (k=16, s=8, four-wide sections) so the numbers
// line up with what `pcpq eval` exercises.
//
// Fixtures are built once per process and shared; builds are excluded from
// the timed region.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pcpq/clustering.hpp"
#include "pcpq/datagen.hpp"
#include "pcpq/ivf.hpp"
#include "pcpq/pq_index.hpp"
#include "pcpq/rng.hpp"
#include "pcpq/types.hpp"

namespace {

pcpq::PQConfig four_bit(pcpq::Method method, bool quantize) {
  pcpq::PQConfig cfg;
  cfg.method = method;
  cfg.quantize_scalars = quantize;
  cfg.m = 25;
  cfg.k = 16;
  cfg.s = 8;
  cfg.max_iters = 10;
  cfg.seed = 7;
  return cfg;
}

const pcpq::MatrixF& bench_data() {
  static const pcpq::MatrixF data =
      pcpq::generate_dataset(pcpq::Dist::clustered, 20000, 100, 42);
  return data;
}

const std::vector<float>& bench_query() {
  static const std::vector<float> q = [] {
    pcpq::Rng rng(1234);
    std::vector<float> v(100);
    for (auto& x : v) x = float(rng.next_gaussian());
    return v;
  }();
  return q;
}

const pcpq::PQIndex& flat_index(pcpq::Method method, bool quantize) {
  static const pcpq::PQIndex kmeans =
      pcpq::build_pq_index(bench_data(), four_bit(pcpq::Method::kmeans, false));
  static const pcpq::PQIndex qpcpq =
      pcpq::build_pq_index(bench_data(), four_bit(pcpq::Method::pcpq, true));
  static const pcpq::PQIndex rpcpq =
      pcpq::build_pq_index(bench_data(), four_bit(pcpq::Method::pcpq, false));
  if (method == pcpq::Method::kmeans) return kmeans;
  return quantize ? qpcpq : rpcpq;
}

void BM_BuildLookupTable(benchmark::State& state) {
  const auto& index = flat_index(state.range(0) ? pcpq::Method::pcpq : pcpq::Method::kmeans,
                                 state.range(0) != 0);
  const auto& q = bench_query();
  for (auto _ : state) {
    auto lut = pcpq::build_lookup_table(index, q);
    benchmark::DoNotOptimize(lut.eta.data());
    benchmark::DoNotOptimize(lut.eta_lambda.data());
  }
}
BENCHMARK(BM_BuildLookupTable)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ScoreAll(benchmark::State& state) {
  const auto& index = flat_index(state.range(0) ? pcpq::Method::pcpq : pcpq::Method::kmeans,
                                 state.range(0) != 0);
  const auto lut = pcpq::build_lookup_table(index, bench_query());
  for (auto _ : state) {
    auto scores = pcpq::score_all(index, lut);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(index.n()));
}
BENCHMARK(BM_ScoreAll)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ScoreAllRawScales(benchmark::State& state) {
  const auto& index = flat_index(pcpq::Method::pcpq, false);
  const auto lut = pcpq::build_lookup_table(index, bench_query());
  for (auto _ : state) {
    auto scores = pcpq::score_all(index, lut);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(index.n()));
}
BENCHMARK(BM_ScoreAllRawScales)->Unit(benchmark::kMicrosecond);

// One section's worth of clustering at the widths the index builder uses.
const pcpq::MatrixF& section_data() {
  static const pcpq::MatrixF data =
      pcpq::generate_dataset(pcpq::Dist::clustered, 5000, 4, 99);
  return data;
}

void BM_KMeansSection(benchmark::State& state) {
  const auto& x = section_data();
  for (auto _ : state) {
    auto model = pcpq::kmeans_pp(x, 16, uint32_t(state.range(0)), 0.0, 3);
    benchmark::DoNotOptimize(model.loss_trace.data());
  }
}
BENCHMARK(BM_KMeansSection)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ProjectiveSection(benchmark::State& state) {
  const auto& x = section_data();
  for (auto _ : state) {
    auto model = pcpq::projective_k_clustering(x, 16, pcpq::InitMode::kmeanspp,
                                               uint32_t(state.range(0)), 0.0, 3);
    benchmark::DoNotOptimize(model.loss_trace.data());
  }
}
BENCHMARK(BM_ProjectiveSection)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_AnisoProjectiveSection(benchmark::State& state) {
  const auto& x = section_data();
  const double t = 0.2 * pcpq::mean_l2_norm(x);
  for (auto _ : state) {
    auto model =
        pcpq::aniso_projective_k_clustering(x, 16, t, uint32_t(state.range(0)), 0.0, 3);
    benchmark::DoNotOptimize(model.loss_trace.data());
  }
}
BENCHMARK(BM_AnisoProjectiveSection)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_QueryIVF(benchmark::State& state) {
  static const pcpq::IVFIndex index =
      pcpq::build_ivf(bench_data(), 20, four_bit(pcpq::Method::pcpq, true), 7);
  const auto& q = bench_query();
  const auto kprobe = uint32_t(state.range(0));
  for (auto _ : state) {
    auto out = pcpq::query_ivf(index, q, kprobe, 10);
    benchmark::DoNotOptimize(out.top.data());
  }
}
BENCHMARK(BM_QueryIVF)->Arg(1)->Arg(5)->Arg(20)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
