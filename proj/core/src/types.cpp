#include "pcpq/types.hpp"

#include <cmath>

namespace pcpq {

const char* method_name(Method m) {
  switch (m) {
    case Method::kmeans: return "kmeans";
    case Method::aniso: return "scann";
    case Method::pcpq: return "pcpq";
    case Method::apcpq: return "apcpq";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "kmeans") return Method::kmeans;
  if (name == "scann") return Method::aniso;
  if (name == "pcpq") return Method::pcpq;
  if (name == "apcpq") return Method::apcpq;
  fail(errc::usage, "unknown method '" + name + "' (expected kmeans|scann|pcpq|apcpq)");
}

double mean_l2_norm(const MatrixF& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double sq = 0.0;
    for (float v : x.row(i)) sq += static_cast<double>(v) * v;
    total += std::sqrt(sq);
  }
  return x.rows ? total / static_cast<double>(x.rows) : 0.0;
}

ResolvedConfig validate_config(const PQConfig& cfg, std::size_t n, std::size_t d,
                               double mean_norm) {
  if (n == 0) fail(errc::data, "empty dataset");
  if (d == 0) fail(errc::data, "zero-dimensional dataset");
  if (cfg.m == 0) fail(errc::data, "m must be >= 1");
  if (cfg.m > d) fail(errc::data, "m exceeds dimensionality");
  if (cfg.k < 2) fail(errc::data, "k must be >= 2");
  if (static_cast<std::uint64_t>(cfg.k) >= (1ull << 32))
    fail(errc::data, "k out of range");
  if (cfg.s < 1) fail(errc::data, "s must be >= 1");
  if (cfg.s >= (1u << 16)) fail(errc::data, "s out of range");
  if (!std::isfinite(cfg.t_frac) || cfg.t_frac < 0.0)
    fail(errc::data, "t_frac must be finite and non-negative");
  if (cfg.max_iters < 1) fail(errc::data, "max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) fail(errc::data, "tol must be positive");

  ResolvedConfig out;
  out.base = cfg;
  out.n = static_cast<std::uint32_t>(n);
  out.d = static_cast<std::uint32_t>(d);
  out.padded_d = static_cast<std::uint32_t>(((d + cfg.m - 1) / cfg.m) * cfg.m);
  out.dbar = out.padded_d / cfg.m;
  if ((cfg.method == Method::aniso || cfg.method == Method::apcpq) && out.dbar < 2)
    fail(errc::data, "score-aware methods need section width >= 2");
  if (!std::isfinite(mean_norm) || mean_norm < 0.0)
    fail(errc::data, "non-finite data norms");
  out.t = cfg.t_frac * mean_norm;
  return out;
}

ResolvedConfig validate_config(const PQConfig& cfg, const MatrixF& data) {
  for (float v : data.data)
    if (!std::isfinite(v)) fail(errc::data, "dataset contains non-finite values");
  return validate_config(cfg, data.rows, data.cols, mean_l2_norm(data));
}

MatrixF pad_columns(const MatrixF& x, std::size_t padded_d) {
  if (padded_d == x.cols) return x;
  if (padded_d < x.cols) fail(errc::data, "pad_columns: target narrower than input");
  MatrixF out(x.rows, padded_d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) dst[j] = src[j];
  }
  return out;
}

std::vector<float> pad_vector(std::span<const float> x, std::size_t padded_d) {
  if (padded_d < x.size()) fail(errc::data, "pad_vector: target narrower than input");
  std::vector<float> out(padded_d, 0.0f);
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j];
  return out;
}

}  // namespace pcpq
