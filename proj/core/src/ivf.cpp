#include "pcpq/ivf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pcpq/clustering.hpp"
#include "pcpq/rng.hpp"

namespace pcpq {

namespace {

constexpr char kIvfMagic[8] = {'P', 'C', 'P', 'Q', 'I', 'V', 'F', '1'};
constexpr char kRawMagic[8] = {'P', 'C', 'P', 'Q', 'R', 'A', 'W', '1'};
constexpr std::uint32_t kIvfVersion = 1;

double dotf(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void rebuild_point_maps(IVFIndex& index) {
  index.point_cluster.assign(index.n, 0);
  index.point_slot.assign(index.n, 0);
  std::vector<bool> seen(index.n, false);
  for (std::uint32_t r = 0; r < index.kbar; ++r) {
    for (std::size_t pos = 0; pos < index.members[r].size(); ++pos) {
      const std::uint32_t id = index.members[r][pos];
      if (id >= index.n || seen[id]) fail(errc::data, "member lists do not partition the ids");
      seen[id] = true;
      index.point_cluster[id] = r;
      index.point_slot[id] = static_cast<std::uint32_t>(pos);
    }
  }
  for (bool s : seen)
    if (!s) fail(errc::data, "member lists do not partition the ids");
}

}  // namespace

IVFIndex build_ivf(const MatrixF& data, std::uint32_t kbar, const PQConfig& pq_cfg,
                   std::uint64_t seed) {
  if (data.rows == 0 || data.cols == 0) fail(errc::data, "build_ivf: empty dataset");
  if (kbar < 1 || kbar > data.rows) fail(errc::data, "build_ivf: need 1 <= kbar <= n");

  IVFIndex index;
  index.n = static_cast<std::uint32_t>(data.rows);
  index.d = static_cast<std::uint32_t>(data.cols);
  index.kbar = kbar;

  const ClusterModel coarse =
      kmeans_pp(data, kbar, pq_cfg.max_iters, pq_cfg.tol, Rng::mix(seed, 0xC0A25Eull));
  index.coarse_centers = coarse.centers;
  index.members.resize(kbar);
  for (std::size_t i = 0; i < data.rows; ++i)
    index.members[coarse.assignment[i]].push_back(static_cast<std::uint32_t>(i));

  index.sub_indexes.resize(kbar);
  index.is_raw.assign(kbar, 0);
  index.raw_residuals.resize(kbar);
  for (std::uint32_t r = 0; r < kbar; ++r) {
    const auto& ids = index.members[r];
    MatrixF residuals(ids.size(), data.cols);
    const auto center = index.coarse_centers.row(r);
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      const auto xi = data.row(ids[pos]);
      auto out = residuals.row(pos);
      for (std::size_t a = 0; a < data.cols; ++a) out[a] = xi[a] - center[a];
    }
    if (ids.size() < 2) {
      index.is_raw[r] = 1;
      index.raw_residuals[r] = std::move(residuals);
      continue;
    }
    PQConfig sub_cfg = pq_cfg;
    sub_cfg.k = std::min<std::uint32_t>(pq_cfg.k, static_cast<std::uint32_t>(ids.size()));
    sub_cfg.seed = Rng::mix(seed, 0x5B1000ull + r);
    index.sub_indexes[r] = build_pq_index(residuals, sub_cfg);
  }
  rebuild_point_maps(index);
  return index;
}

IVFQueryOutput query_ivf(const IVFIndex& index, std::span<const float> q,
                         std::uint32_t k_probe, std::uint32_t topn,
                         std::span<const std::uint32_t> requested_ids,
                         ScoreCounters* counters) {
  if (q.size() != index.d) fail(errc::size_mismatch, "query_ivf: dimension mismatch");
  if (k_probe < 1 || k_probe > index.kbar)
    fail(errc::data, "query_ivf: need 1 <= k_probe <= kbar");
  if (topn < 1) fail(errc::data, "query_ivf: topN must be >= 1");
  for (auto id : requested_ids)
    if (id >= index.n) fail(errc::data, "query_ivf: requested id out of range");

  // Rank coarse centers by inner product, ties toward the lower id.
  std::vector<double> coarse_score(index.kbar);
  for (std::uint32_t r = 0; r < index.kbar; ++r)
    coarse_score[r] = dotf(q, index.coarse_centers.row(r));
  std::vector<std::uint32_t> order(index.kbar);
  for (std::uint32_t r = 0; r < index.kbar; ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return coarse_score[a] > coarse_score[b];
  });

  IVFQueryOutput out;
  out.requested.assign(requested_ids.size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<QueryHit> pool;
  constexpr std::size_t kUnprobed = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pool_offset(index.kbar, kUnprobed);
  for (std::uint32_t p = 0; p < k_probe; ++p) {
    const std::uint32_t r = order[p];
    pool_offset[r] = pool.size();
    const auto& ids = index.members[r];
    if (ids.empty()) continue;
    const double coarse = coarse_score[r];
    if (index.is_raw[r]) {
      const MatrixF& res = index.raw_residuals[r];
      for (std::size_t pos = 0; pos < ids.size(); ++pos)
        pool.push_back({ids[pos], coarse + dotf(q, res.row(pos))});
    } else {
      const std::vector<float> sub =
          score_query(index.sub_indexes[r], q, counters);
      for (std::size_t pos = 0; pos < ids.size(); ++pos)
        pool.push_back({ids[pos], coarse + static_cast<double>(sub[pos])});
    }
  }

  // Member lists land in the pool contiguously, so a requested id's score
  // sits at its cluster's offset plus its slot.
  for (std::size_t i = 0; i < requested_ids.size(); ++i) {
    const std::uint32_t id = requested_ids[i];
    const std::uint32_t r = index.point_cluster[id];
    if (pool_offset[r] == kUnprobed) continue;
    out.requested[i] = pool[pool_offset[r] + index.point_slot[id]].score;
  }

  const std::size_t keep = std::min<std::size_t>(topn, pool.size());
  out.short_result = pool.size() < topn;
  const auto better = [](const QueryHit& a, const QueryHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::partial_sort(pool.begin(), pool.begin() + keep, pool.end(), better);
  pool.resize(keep);
  out.top = std::move(pool);
  return out;
}

namespace {

class Writer {
 public:
  void raw(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + len);
  }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    raw(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    raw(b, 8);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  void raw(void* p, std::size_t len) {
    if (pos_ + len > bytes_.size())
      fail(errc::truncated, "container truncated at byte " + std::to_string(pos_));
    std::memcpy(p, bytes_.data() + pos_, len);
    pos_ += len;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    raw(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    std::uint8_t b[8];
    raw(b, 8);
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::span<const std::uint8_t> slice(std::size_t len) {
    if (pos_ + len > bytes_.size())
      fail(errc::truncated, "container truncated at byte " + std::to_string(pos_));
    const auto s = bytes_.subspan(pos_, len);
    pos_ += len;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const IVFIndex& index) {
  Writer w;
  w.raw(kIvfMagic, 8);
  w.u32(kIvfVersion);
  w.u32(index.n);
  w.u32(index.d);
  w.u32(index.kbar);
  for (float v : index.coarse_centers.data) w.f32(v);
  for (std::uint32_t r = 0; r < index.kbar; ++r) {
    w.u32(static_cast<std::uint32_t>(index.members[r].size()));
    for (auto id : index.members[r]) w.u32(id);
  }
  for (std::uint32_t r = 0; r < index.kbar; ++r) {
    std::vector<std::uint8_t> blob;
    if (index.is_raw[r]) {
      Writer rw;
      rw.raw(kRawMagic, 8);
      rw.u32(static_cast<std::uint32_t>(index.raw_residuals[r].rows));
      rw.u32(index.d);
      for (float v : index.raw_residuals[r].data) rw.f32(v);
      blob = rw.take();
    } else {
      blob = serialize(index.sub_indexes[r]);
    }
    w.u64(blob.size());
    w.raw(blob.data(), blob.size());
  }
  return w.take();
}

IVFIndex deserialize_ivf(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kIvfMagic, 8) != 0) fail(errc::bad_magic, "not a container file");
  const std::uint32_t version = r.u32();
  if (version != kIvfVersion)
    fail(errc::bad_version, "unsupported container version " + std::to_string(version));

  IVFIndex index;
  index.n = r.u32();
  index.d = r.u32();
  index.kbar = r.u32();
  if (index.n == 0 || index.d == 0 || index.kbar == 0 || index.kbar > index.n)
    fail(errc::data, "bad container header");

  index.coarse_centers = MatrixF(index.kbar, index.d);
  for (auto& v : index.coarse_centers.data) v = r.f32();
  index.members.resize(index.kbar);
  for (std::uint32_t c = 0; c < index.kbar; ++c) {
    const std::uint32_t count = r.u32();
    if (count > index.n) fail(errc::data, "member count exceeds n");
    index.members[c].resize(count);
    for (auto& id : index.members[c]) id = r.u32();
  }
  index.sub_indexes.resize(index.kbar);
  index.is_raw.assign(index.kbar, 0);
  index.raw_residuals.resize(index.kbar);
  for (std::uint32_t c = 0; c < index.kbar; ++c) {
    const std::uint64_t len = r.u64();
    const auto blob = r.slice(len);
    if (len >= 8 && std::memcmp(blob.data(), kRawMagic, 8) == 0) {
      Reader br(blob);
      char raw_magic[8];
      br.raw(raw_magic, 8);
      const std::uint32_t count = br.u32();
      const std::uint32_t dim = br.u32();
      if (dim != index.d) fail(errc::data, "raw block dimension mismatch");
      if (count != index.members[c].size())
        fail(errc::size_mismatch, "raw block count mismatch");
      index.is_raw[c] = 1;
      index.raw_residuals[c] = MatrixF(count, dim);
      for (auto& v : index.raw_residuals[c].data) v = br.f32();
      if (!br.exhausted()) fail(errc::size_mismatch, "trailing bytes in raw block");
    } else {
      index.sub_indexes[c] = deserialize(blob);
      if (index.sub_indexes[c].n() != index.members[c].size())
        fail(errc::size_mismatch, "sub-index size does not match member list");
      if (index.sub_indexes[c].config.d != index.d)
        fail(errc::data, "sub-index dimension mismatch");
    }
  }
  if (!r.exhausted())
    fail(errc::size_mismatch,
         "trailing bytes after container at byte " + std::to_string(r.pos()));
  rebuild_point_maps(index);
  return index;
}

void write_ivf_index(const IVFIndex& index, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(errc::data, "write failed: " + path.string());
}

IVFIndex read_ivf_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::data, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_ivf(bytes);
}

}  // namespace pcpq
