#include "pcpq/io.hpp"

#include <cstring>
#include <fstream>
#include <string>

namespace pcpq {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::data, "cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::int32_t le_i32(const std::uint8_t* p) {
  std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  std::int32_t out;
  std::memcpy(&out, &v, 4);
  return out;
}

void put_i32(std::ofstream& out, std::int32_t v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  const char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                     static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
  out.write(b, 4);
}

// Shared record walker: calls sink(offset, payload bytes) per record and
// enforces the uniform-dimension rule.
template <typename Sink>
void walk_records(const std::vector<std::uint8_t>& bytes, const std::string& what,
                  Sink&& sink) {
  std::size_t pos = 0;
  std::int64_t dim = -1;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4)
      fail(errc::truncated, what + ": truncated record header at byte " + std::to_string(pos));
    const std::int32_t rec_dim = le_i32(bytes.data() + pos);
    if (rec_dim <= 0)
      fail(errc::data, what + ": non-positive dimension " + std::to_string(rec_dim) +
                           " at byte " + std::to_string(pos));
    if (dim < 0) dim = rec_dim;
    if (rec_dim != dim)
      fail(errc::data, what + ": dimension changed from " + std::to_string(dim) + " to " +
                           std::to_string(rec_dim) + " at byte " + std::to_string(pos));
    const std::size_t payload = static_cast<std::size_t>(rec_dim) * 4;
    if (bytes.size() - pos - 4 < payload)
      fail(errc::truncated, what + ": truncated record payload at byte " + std::to_string(pos));
    sink(bytes.data() + pos + 4, static_cast<std::size_t>(rec_dim));
    pos += 4 + payload;
  }
}

}  // namespace

MatrixF read_fvecs(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  std::vector<float> values;
  std::size_t dim = 0, rows = 0;
  walk_records(bytes, path.string(), [&](const std::uint8_t* p, std::size_t d) {
    dim = d;
    ++rows;
    const std::size_t at = values.size();
    values.resize(at + d);
    std::memcpy(values.data() + at, p, d * 4);  // little-endian floats host-native here
  });
  MatrixF out(rows, dim);
  out.data = std::move(values);
  return out;
}

void write_fvecs(const MatrixF& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < data.rows; ++i) {
    put_i32(out, static_cast<std::int32_t>(data.cols));
    const auto row = data.row(i);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) fail(errc::data, "write failed: " + path.string());
}

std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  std::vector<std::vector<std::int32_t>> rows;
  walk_records(bytes, path.string(), [&](const std::uint8_t* p, std::size_t d) {
    std::vector<std::int32_t> row(d);
    for (std::size_t i = 0; i < d; ++i) row[i] = le_i32(p + i * 4);
    rows.push_back(std::move(row));
  });
  return rows;
}

void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path) {
  std::size_t dim = rows.empty() ? 0 : rows.front().size();
  for (const auto& row : rows)
    if (row.size() != dim || dim == 0)
      fail(errc::data, "write_ivecs: rows must share one positive dimension");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::data, "cannot open for writing: " + path.string());
  for (const auto& row : rows) {
    put_i32(out, static_cast<std::int32_t>(dim));
    for (auto v : row) put_i32(out, v);
  }
  if (!out) fail(errc::data, "write failed: " + path.string());
}

}  // namespace pcpq
