#include "pcpq/pq_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pcpq/clustering.hpp"
#include "pcpq/rng.hpp"
#include "pcpq/scalar_quant.hpp"

namespace pcpq {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'P', 'Q', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t ceil_log2(std::uint64_t v) {
  if (v <= 1) return 0;
  return static_cast<std::uint32_t>(std::bit_width(v - 1));
}

double dotf(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

}  // namespace

std::uint32_t effective_scales(const PQConfig& cfg) {
  if (cfg.method == Method::kmeans || cfg.method == Method::aniso) return 1;
  return cfg.quantize_scalars ? cfg.s : 0;
}

std::uint64_t logical_payload_bits(std::uint64_t n, std::uint32_t m, std::uint32_t k,
                                   std::uint32_t scales) {
  const std::uint64_t scale_bits = scales == 0 ? 32 : ceil_log2(scales);
  return n * m * (ceil_log2(k) + scale_bits);
}

std::vector<MatrixF> split_sections(const MatrixF& padded, std::uint32_t m) {
  if (m == 0 || padded.cols % m != 0) fail(errc::data, "split_sections: width not divisible");
  const std::size_t dbar = padded.cols / m;
  std::vector<MatrixF> out;
  out.reserve(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    MatrixF sec(padded.rows, dbar);
    for (std::size_t i = 0; i < padded.rows; ++i) {
      const auto src = padded.row(i).subspan(j * dbar, dbar);
      std::copy(src.begin(), src.end(), sec.row(i).begin());
    }
    out.push_back(std::move(sec));
  }
  return out;
}

PQIndex build_pq_index(const MatrixF& data, const PQConfig& cfg) {
  const ResolvedConfig rc = validate_config(cfg, data);
  if (cfg.k > rc.n) fail(errc::data, "build_pq_index: k exceeds point count");

  const MatrixF padded = pad_columns(data, rc.padded_d);
  const auto sections = split_sections(padded, cfg.m);

  PQIndex index;
  index.config = rc;
  index.scales = effective_scales(cfg);
  index.codebooks.reserve(cfg.m);
  index.scalar_codebooks.resize(cfg.m);
  index.center_codes.resize(rc.n * static_cast<std::size_t>(cfg.m));
  if (index.scales >= 1)
    index.scalar_codes.assign(rc.n * static_cast<std::size_t>(cfg.m), 0);
  else
    index.raw_alphas = MatrixF(rc.n, cfg.m);
  index.train_loss.assign(cfg.m, 0.0);

  for (std::uint32_t j = 0; j < cfg.m; ++j) {
    const MatrixF& sec = sections[j];
    const std::uint64_t solver_seed = Rng::mix(cfg.seed, 2ull * j + 1);
    const std::uint64_t scale_seed = Rng::mix(cfg.seed, 2ull * j + 2);

    ClusterModel model;
    switch (cfg.method) {
      case Method::kmeans:
        model = kmeans_pp(sec, cfg.k, cfg.max_iters, cfg.tol, solver_seed);
        break;
      case Method::aniso:
        model = anisotropic_k_clustering(sec, cfg.k, rc.t, cfg.max_iters, cfg.tol,
                                         solver_seed);
        break;
      case Method::pcpq:
        model = projective_k_clustering(sec, cfg.k, InitMode::kmeanspp, cfg.max_iters,
                                        cfg.tol, solver_seed);
        break;
      case Method::apcpq:
        model = aniso_projective_k_clustering(sec, cfg.k, rc.t, cfg.max_iters, cfg.tol,
                                              solver_seed);
        break;
    }

    if (cfg.method == Method::pcpq) {
      // Store directions at unit norm and fold the norm into the scales;
      // the reconstruction alpha*c is unchanged, and unit rows make the
      // scale-quantization objective the exact loss increase.
      std::vector<double> norms(cfg.k, 1.0);
      for (std::uint32_t c = 0; c < cfg.k; ++c) {
        auto row = model.centers.row(c);
        const double nrm = std::sqrt(dotf(row, row));
        if (nrm > 0.0) {
          norms[c] = nrm;
          for (auto& v : row) v = static_cast<float>(v / nrm);
        }
      }
      for (std::size_t i = 0; i < rc.n; ++i) model.alphas[i] *= norms[model.assignment[i]];
    }

    for (std::size_t i = 0; i < rc.n; ++i)
      index.center_codes[i * cfg.m + j] = model.assignment[i];

    if (cfg.method == Method::kmeans || cfg.method == Method::aniso) {
      index.scalar_codebooks[j] = {1.0f};
    } else if (index.scales == 0) {
      for (std::size_t i = 0; i < rc.n; ++i)
        index.raw_alphas.at(i, j) = static_cast<float>(model.alphas[i]);
    } else if (cfg.method == Method::pcpq) {
      const ScalarQuant sq = quantize_projective(model.alphas, cfg.s, scale_seed);
      index.scalar_codebooks[j] = sq.values;
      for (std::size_t i = 0; i < rc.n; ++i)
        index.scalar_codes[i * cfg.m + j] = sq.codes[i];
    } else {
      std::vector<AnisoWeights> weights(rc.n);
      for (std::size_t i = 0; i < rc.n; ++i) {
        const double nx2 = dotf(sec.row(i), sec.row(i));
        if (nx2 > 0.0) weights[i] = aniso_weights(std::sqrt(nx2), rc.t, rc.dbar);
      }
      const ScalarQuant sq = quantize_anisotropic(sec, model.centers, model.assignment,
                                                  weights, cfg.s, scale_seed);
      index.scalar_codebooks[j] = sq.values;
      for (std::size_t i = 0; i < rc.n; ++i)
        index.scalar_codes[i * cfg.m + j] = sq.codes[i];
    }

    index.codebooks.push_back(std::move(model.centers));

    // Reconstruction loss of what is actually stored, in double.
    double loss = 0.0;
    const MatrixF& cb = index.codebooks.back();
    for (std::size_t i = 0; i < rc.n; ++i) {
      const auto xi = sec.row(i);
      const auto cj = cb.row(index.center_codes[i * cfg.m + j]);
      double lambda = 1.0;
      if (index.scales == 0)
        lambda = index.raw_alphas.at(i, j);
      else
        lambda = index.scalar_codebooks[j][index.scalar_codes[i * cfg.m + j]];
      for (std::size_t a = 0; a < xi.size(); ++a) {
        const double diff = static_cast<double>(xi[a]) - lambda * static_cast<double>(cj[a]);
        loss += diff * diff;
      }
    }
    index.train_loss[j] = loss;
  }
  return index;
}

LookupTable build_lookup_table(const PQIndex& index, std::span<const float> q,
                               ScoreCounters* counters) {
  const std::uint32_t m = index.m(), k = index.k();
  const std::uint32_t dbar = index.config.dbar;
  if (q.size() != index.config.d)
    fail(errc::size_mismatch, "build_lookup_table: query dimension mismatch");
  const std::vector<float> qp = pad_vector(q, index.config.padded_d);

  LookupTable lut;
  lut.m = m;
  lut.k = k;
  lut.scales = index.scales;
  lut.eta.resize(static_cast<std::size_t>(m) * k);
  for (std::uint32_t j = 0; j < m; ++j) {
    const float* qj = qp.data() + static_cast<std::size_t>(j) * dbar;
    const MatrixF& cb = index.codebooks[j];
    for (std::uint32_t c = 0; c < k; ++c) {
      const auto row = cb.row(c);
      float acc = 0.0f;  // fixed-order float32 accumulation
      for (std::uint32_t a = 0; a < dbar; ++a) acc += row[a] * qj[a];
      lut.eta[static_cast<std::size_t>(j) * k + c] = acc;
    }
  }
  if (counters) counters->table_madds += static_cast<std::uint64_t>(k) * index.config.padded_d;

  if (index.scales >= 1) {
    const std::uint32_t s = index.scales;
    lut.eta_lambda.resize(static_cast<std::size_t>(m) * k * s);
    for (std::uint32_t j = 0; j < m; ++j) {
      const auto& values = index.scalar_codebooks[j];
      for (std::uint32_t c = 0; c < k; ++c) {
        const float e = lut.eta[static_cast<std::size_t>(j) * k + c];
        float* dst = lut.eta_lambda.data() + (static_cast<std::size_t>(j) * k + c) * s;
        for (std::uint32_t l = 0; l < s; ++l) dst[l] = e * values[l];
      }
    }
    if (counters)
      counters->scalar_mults += static_cast<std::uint64_t>(s) * k * m;
  }
  return lut;
}

std::vector<float> score_all(const PQIndex& index, const LookupTable& lut,
                             ScoreCounters* counters) {
  const std::size_t n = index.n();
  const std::uint32_t m = index.m(), k = lut.k, s = lut.scales;
  if (lut.m != m || lut.k != index.k() || lut.scales != index.scales)
    fail(errc::size_mismatch, "score_all: table does not match index");

  std::vector<float> scores(n);
  if (s >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t* codes = index.center_codes.data() + i * m;
      const std::uint8_t* scodes = index.scalar_codes.data() + i * m;
      float acc = lut.eta_lambda[(static_cast<std::size_t>(0) * k + codes[0]) * s + scodes[0]];
      for (std::uint32_t j = 1; j < m; ++j)
        acc += lut.eta_lambda[(static_cast<std::size_t>(j) * k + codes[j]) * s + scodes[j]];
      scores[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t* codes = index.center_codes.data() + i * m;
      float acc = index.raw_alphas.at(i, 0) * lut.eta[codes[0]];
      for (std::uint32_t j = 1; j < m; ++j)
        acc += index.raw_alphas.at(i, j) * lut.eta[static_cast<std::size_t>(j) * k + codes[j]];
      scores[i] = acc;
    }
    if (counters) counters->point_mults += static_cast<std::uint64_t>(n) * m;
  }
  if (counters) {
    counters->lookups += static_cast<std::uint64_t>(n) * m;
    counters->adds += static_cast<std::uint64_t>(n) * (m - 1);
  }
  return scores;
}

std::vector<float> score_query(const PQIndex& index, std::span<const float> q,
                               ScoreCounters* counters) {
  const LookupTable lut = build_lookup_table(index, q, counters);
  return score_all(index, lut, counters);
}

std::vector<float> reconstruct_point(const PQIndex& index, std::size_t i) {
  if (i >= index.n()) fail(errc::data, "reconstruct_point: index out of range");
  const std::uint32_t m = index.m();
  const std::uint32_t dbar = index.config.dbar;
  std::vector<float> out(index.config.padded_d);
  for (std::uint32_t j = 0; j < m; ++j) {
    const auto row = index.codebooks[j].row(index.center_codes[i * m + j]);
    float lambda = 1.0f;
    if (index.scales == 0)
      lambda = index.raw_alphas.at(i, j);
    else
      lambda = index.scalar_codebooks[j][index.scalar_codes[i * m + j]];
    for (std::uint32_t a = 0; a < dbar; ++a)
      out[static_cast<std::size_t>(j) * dbar + a] = lambda * row[a];
  }
  return out;
}

double total_reconstruction_loss(const PQIndex& index, const MatrixF& data) {
  if (data.rows != index.n() || data.cols != index.config.d)
    fail(errc::size_mismatch, "total_reconstruction_loss: data shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const std::vector<float> rec = reconstruct_point(index, i);
    const auto xi = data.row(i);
    for (std::size_t a = 0; a < rec.size(); ++a) {
      const double x = a < xi.size() ? static_cast<double>(xi[a]) : 0.0;
      const double diff = x - static_cast<double>(rec[a]);
      loss += diff * diff;
    }
  }
  return loss;
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
  void u16(std::uint16_t v) {
    std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
    raw(b, 2);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void f32(float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u32(static_cast<std::uint32_t>(bits));
    u32(static_cast<std::uint32_t>(bits >> 32));
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
      fail(errc::truncated, "index stream truncated at byte " + std::to_string(pos_));
    std::memcpy(p, bytes_.data() + pos_, len);
    pos_ += len;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    raw(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint16_t u16() {
    std::uint8_t b[2];
    raw(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint8_t u8() {
    std::uint8_t b;
    raw(&b, 1);
    return b;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    const std::uint64_t bits = lo | (hi << 32);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::size_t pos() const { return pos_; }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const PQIndex& index) {
  const std::uint32_t m = index.m(), k = index.k();
  if (k > 65536) fail(errc::data, "serialize: k too large for the code width");
  const bool wide = k > 256;

  Writer w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(index.config.base.method));
  w.u32(index.config.n);
  w.u32(index.config.d);
  w.u32(index.config.padded_d);
  w.u32(m);
  w.u32(k);
  w.u32(index.scales);
  w.f64(index.config.t);
  for (std::uint32_t j = 0; j < m; ++j)
    for (float v : index.codebooks[j].data) w.f32(v);
  for (std::uint32_t j = 0; j < m; ++j)
    for (float v : index.scalar_codebooks[j]) w.f32(v);
  for (std::size_t i = 0; i < index.n(); ++i) {
    for (std::uint32_t j = 0; j < m; ++j) {
      const std::uint32_t c = index.center_codes[i * m + j];
      if (wide)
        w.u16(static_cast<std::uint16_t>(c));
      else
        w.u8(static_cast<std::uint8_t>(c));
    }
    if (index.scales == 0) {
      for (std::uint32_t j = 0; j < m; ++j) w.f32(index.raw_alphas.at(i, j));
    } else {
      for (std::uint32_t j = 0; j < m; ++j) w.u8(index.scalar_codes[i * m + j]);
    }
  }
  return w.take();
}

PQIndex deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) fail(errc::bad_magic, "not an index file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    fail(errc::bad_version, "unsupported index version " + std::to_string(version));

  const std::uint32_t method_raw = r.u32();
  if (method_raw > 3) fail(errc::data, "unknown method tag");
  PQIndex index;
  PQConfig cfg;
  cfg.method = static_cast<Method>(method_raw);
  index.config.n = r.u32();
  index.config.d = r.u32();
  index.config.padded_d = r.u32();
  cfg.m = r.u32();
  cfg.k = r.u32();
  index.scales = r.u32();
  index.config.t = r.f64();

  if (index.config.n == 0 || index.config.d == 0 || cfg.m == 0 || cfg.k < 2)
    fail(errc::data, "bad header field");
  if (cfg.k > 65536) fail(errc::data, "bad header field: k");
  if (index.scales > 256) fail(errc::data, "bad header field: scale count");
  if (index.config.padded_d < index.config.d || index.config.padded_d % cfg.m != 0)
    fail(errc::data, "bad header field: padded dimension");
  cfg.s = index.scales == 0 ? 1 : index.scales;
  cfg.quantize_scalars =
      index.scales >= 1 && (cfg.method == Method::pcpq || cfg.method == Method::apcpq);
  index.config.base = cfg;
  index.config.dbar = index.config.padded_d / cfg.m;

  const std::uint32_t m = cfg.m, k = cfg.k, dbar = index.config.dbar;
  const std::size_t n = index.config.n;
  const bool wide = k > 256;

  index.codebooks.reserve(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    MatrixF cb(k, dbar);
    for (auto& v : cb.data) v = r.f32();
    index.codebooks.push_back(std::move(cb));
  }
  index.scalar_codebooks.resize(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    index.scalar_codebooks[j].resize(index.scales);
    for (auto& v : index.scalar_codebooks[j]) v = r.f32();
  }
  index.center_codes.resize(n * m);
  if (index.scales == 0)
    index.raw_alphas = MatrixF(n, m);
  else
    index.scalar_codes.resize(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < m; ++j) {
      const std::uint32_t c = wide ? r.u16() : r.u8();
      if (c >= k)
        fail(errc::code_out_of_range,
             "center code " + std::to_string(c) + " at point " + std::to_string(i));
      index.center_codes[i * m + j] = c;
    }
    if (index.scales == 0) {
      for (std::uint32_t j = 0; j < m; ++j) index.raw_alphas.at(i, j) = r.f32();
    } else {
      for (std::uint32_t j = 0; j < m; ++j) {
        const std::uint8_t sc = r.u8();
        if (sc >= index.scales)
          fail(errc::code_out_of_range,
               "scale code " + std::to_string(sc) + " at point " + std::to_string(i));
        index.scalar_codes[i * m + j] = sc;
      }
    }
  }
  if (!r.exhausted())
    fail(errc::size_mismatch, "trailing bytes after index payload at byte " +
                                  std::to_string(r.pos()));
  index.train_loss.assign(m, 0.0);  // not stored; recompute against data if needed
  return index;
}

void write_pq_index(const PQIndex& index, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(errc::data, "write failed: " + path.string());
}

PQIndex read_pq_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::data, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace pcpq
