#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcpq {

// Error taxonomy. The CLI maps these onto process exit codes
// (usage -> 2, data/format -> 3, numeric -> 4).
enum class errc {
  usage,
  data,            // bad dataset, bad config, bad arguments to an op
  numeric,         // solver/linear-algebra failure
  bad_magic,       // serialization: wrong leading magic
  bad_version,     // serialization: unsupported version field
  truncated,       // serialization: ran out of bytes mid-structure
  code_out_of_range,  // serialization: stored code >= k or >= s
  size_mismatch,   // serialization: trailing bytes or inconsistent sizes
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

// Dense row-major float32 matrix. All bulk data (datasets, codebooks,
// centers) lives in this shape; math that needs more precision widens
// per-element on the fly.
struct MatrixF {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  MatrixF() = default;
  MatrixF(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool empty() const { return rows == 0 || cols == 0; }
};

// A dataset is a matrix plus where it came from (file path or generator tag).
struct Dataset {
  MatrixF points;
  std::string source;

  std::size_t n() const { return points.rows; }
  std::size_t d() const { return points.cols; }
};

enum class Method : std::uint32_t {
  kmeans = 0,
  aniso = 1,   // score-aware clustering baseline, alpha fixed at 1
  pcpq = 2,    // projective clustering, per-point scalar
  apcpq = 3,   // score-aware projective clustering, per-point scalar
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);  // throws errc::usage

// User-facing quantizer configuration; resolve() derives the rest.
struct PQConfig {
  Method method = Method::pcpq;
  bool quantize_scalars = false;
  std::uint32_t m = 8;    // number of contiguous sections
  std::uint32_t k = 16;   // centers per section
  std::uint32_t s = 8;    // scalar codebook size per section (1 = plain clustering)
  double t_frac = 0.2;    // score threshold as a fraction of the mean point norm
  std::uint32_t max_iters = 20;
  double tol = 1e-6;
  std::uint64_t seed = 1;
};

// PQConfig after validation against a concrete dataset shape.
struct ResolvedConfig {
  PQConfig base;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::uint32_t padded_d = 0;  // smallest multiple of m that is >= d
  std::uint32_t dbar = 0;      // padded_d / m
  double t = 0.0;              // t_frac * mean L2 norm, frozen at build time
};

// Validates shape/range rules and freezes t from the data's mean norm.
ResolvedConfig validate_config(const PQConfig& cfg, const MatrixF& data);
// Same checks with the mean norm supplied directly (used by tests/tools).
ResolvedConfig validate_config(const PQConfig& cfg, std::size_t n, std::size_t d,
                               double mean_norm);

// Zero-pad columns to padded_d. Inner products with padded queries are
// unchanged because the new coordinates are identically zero.
MatrixF pad_columns(const MatrixF& x, std::size_t padded_d);
std::vector<float> pad_vector(std::span<const float> x, std::size_t padded_d);

double mean_l2_norm(const MatrixF& x);

}  // namespace pcpq
