#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcpq/types.hpp"

namespace pcpq {

// Product-quantization index: one codebook per contiguous coordinate
// section, one code per (point, section), and — for the projection-based
// methods — a per-point scale, stored either quantized against a small
// per-section scale codebook or as a raw float.
//
// `scales` tells the two apart: 0 means raw per-point floats (the
// unquantized projection methods), >= 1 means `scales` codebook entries
// per section (the mean-style baselines always use 1, a lone 1.0).
struct PQIndex {
  ResolvedConfig config;
  std::uint32_t scales = 1;                          // effective scalar-codebook size
  std::vector<MatrixF> codebooks;                    // m matrices, k x dbar
  std::vector<std::vector<float>> scalar_codebooks;  // m arrays of `scales` values
  std::vector<std::uint32_t> center_codes;           // n*m, point-major
  std::vector<std::uint8_t> scalar_codes;            // n*m when scales >= 1
  MatrixF raw_alphas;                                // n x m when scales == 0
  std::vector<double> train_loss;                    // per-section reconstruction loss

  std::size_t n() const { return config.n; }
  std::uint32_t m() const { return config.base.m; }
  std::uint32_t k() const { return config.base.k; }
};

// Query-side tables: eta[j*k + c] = <section j of q, codebook row c>, and
// (when scales >= 1) eta_lambda[(j*k + c)*scales + l] = eta * lambda_l,
// computed with a fixed accumulation order so scores are reproducible.
struct LookupTable {
  std::uint32_t m = 0, k = 0, scales = 0;
  std::vector<float> eta;
  std::vector<float> eta_lambda;
};

// Exact operation counts observed by the scoring path; used to pin the
// advertised cost model (k*d table stage, scales*k*m scalar stage, m
// lookups and m-1 adds per point, plus one multiply per (point, section)
// on the raw-scale route).
struct ScoreCounters {
  std::uint64_t table_madds = 0;
  std::uint64_t scalar_mults = 0;
  std::uint64_t point_mults = 0;
  std::uint64_t lookups = 0;
  std::uint64_t adds = 0;
};

// Effective scalar-codebook size for a configuration: the mean-style
// baselines carry a single implicit 1.0; the projection methods carry s
// when quantizing and 0 (raw floats) when not.
std::uint32_t effective_scales(const PQConfig& cfg);

// Logical size of the per-point payload in bits: ceil(log2 k) per center
// code plus ceil(log2 scales) per scale code (32 on the raw-float route),
// times n*m. The file stores these byte-aligned; this is the information
// content.
std::uint64_t logical_payload_bits(std::uint64_t n, std::uint32_t m, std::uint32_t k,
                                   std::uint32_t scales);

// Splits a padded matrix into m contiguous column blocks of equal width.
std::vector<MatrixF> split_sections(const MatrixF& padded, std::uint32_t m);

// Trains the index: pads, splits, runs the configured solver per section,
// then fits the scale representation. Requires k <= n.
PQIndex build_pq_index(const MatrixF& data, const PQConfig& cfg);

// Builds the query tables. q must have the index's original dimension d;
// zero-padding to padded_d happens internally and cannot change scores.
LookupTable build_lookup_table(const PQIndex& index, std::span<const float> q,
                               ScoreCounters* counters = nullptr);

// Scores every indexed point against the tables: per point, one table
// read per section accumulated in 32-bit float, section 0 upward.
std::vector<float> score_all(const PQIndex& index, const LookupTable& lut,
                             ScoreCounters* counters = nullptr);

// Convenience wrapper: build_lookup_table + score_all.
std::vector<float> score_query(const PQIndex& index, std::span<const float> q,
                               ScoreCounters* counters = nullptr);

// Reconstruction of point i as stored (padded_d coordinates): its scale
// times its codebook row, section by section. The scoring oracle.
std::vector<float> reconstruct_point(const PQIndex& index, std::size_t i);

// Euclidean reconstruction loss of the stored codes against the original
// (unpadded) data, summed over all points and sections.
double total_reconstruction_loss(const PQIndex& index, const MatrixF& data);

// Bit-exact serialization. Layout: magic "PCPQIDX1"; little-endian u32
// fields version=1, method, n, d, padded_d, m, k, scales; t as a
// little-endian 64-bit float; m codebooks (k x dbar floats, row-major);
// m scale codebooks (`scales` floats each); then n rows of m center codes
// (one byte when k <= 256, two when k <= 65536) followed by the row's
// scale payload (m single-byte codes, or m raw floats when scales == 0).
std::vector<std::uint8_t> serialize(const PQIndex& index);
PQIndex deserialize(std::span<const std::uint8_t> bytes);

void write_pq_index(const PQIndex& index, const std::filesystem::path& path);
PQIndex read_pq_index(const std::filesystem::path& path);

}  // namespace pcpq
