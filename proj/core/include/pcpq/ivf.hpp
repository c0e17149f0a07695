#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcpq/pq_index.hpp"
#include "pcpq/types.hpp"

namespace pcpq {

// Two-level index: a coarse k-means partition of the raw vectors, and per
// cluster a PQ index over the residuals x - c_coarse. Clusters too small
// to train on (fewer than 2 members) store their residuals verbatim and
// are scored exactly.
struct IVFIndex {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::uint32_t kbar = 0;
  MatrixF coarse_centers;                          // kbar x d
  std::vector<std::vector<std::uint32_t>> members; // kbar id lists (a partition of [n])
  std::vector<PQIndex> sub_indexes;                // kbar (unused entry when raw)
  std::vector<std::uint8_t> is_raw;                // kbar flags
  std::vector<MatrixF> raw_residuals;              // kbar (rows only when raw)

  // Derived at build/load time: inverse of `members`.
  std::vector<std::uint32_t> point_cluster;  // n
  std::vector<std::uint32_t> point_slot;     // n, position inside its member list
};

// Coarse k-means++ on the raw vectors (Euclidean assignment), then one PQ
// build per cluster on the residuals, with k lowered to the cluster size
// when needed. Each sub-build resolves its own t from the residual norms.
IVFIndex build_ivf(const MatrixF& data, std::uint32_t kbar, const PQConfig& pq_cfg,
                   std::uint64_t seed);

struct QueryHit {
  std::uint32_t id = 0;
  double score = 0.0;
};

struct IVFQueryOutput {
  std::vector<QueryHit> top;   // best first; ties broken toward lower id
  bool short_result = false;   // probed population smaller than topN
  // Scores of `requested_ids`, aligned by position; NaN when the id's
  // cluster was not among the probed ones.
  std::vector<double> requested;
};

// Probes the k_probe clusters whose centers have the largest <q, c>, then
// scores every member as <q, c_coarse> + (residual score from the
// sub-index) and returns the global topN.
IVFQueryOutput query_ivf(const IVFIndex& index, std::span<const float> q,
                         std::uint32_t k_probe, std::uint32_t topn,
                         std::span<const std::uint32_t> requested_ids = {},
                         ScoreCounters* counters = nullptr);

// Container format: magic "PCPQIVF1"; little-endian u32 fields version=1,
// n, d, kbar; coarse centers (kbar x d floats); kbar member lists (u32
// count, then that many u32 ids); kbar length-prefixed (u64) blobs, each
// either a serialized PQ index or a raw-residual block (magic "PCPQRAW1",
// u32 count, u32 d, then count x d floats).
std::vector<std::uint8_t> serialize(const IVFIndex& index);
IVFIndex deserialize_ivf(std::span<const std::uint8_t> bytes);

void write_ivf_index(const IVFIndex& index, const std::filesystem::path& path);
IVFIndex read_ivf_index(const std::filesystem::path& path);

}  // namespace pcpq
