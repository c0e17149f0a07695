#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pcpq/datagen.hpp"
#include "pcpq/io.hpp"
#include "pcpq/types.hpp"

using namespace pcpq;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) { return fs::temp_directory_path() / name; }

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fvecs: the documented two-float example decodes") {
  const auto p = tmp_file("io_example.fvecs");
  write_bytes(p, {0x02, 0x00, 0x00, 0x00,          // dim = 2
                  0x00, 0x00, 0x80, 0x3F,          // 1.0f
                  0x00, 0x00, 0x00, 0x40});        // 2.0f
  const auto m = read_fvecs(p);
  REQUIRE(m.rows == 1);
  REQUIRE(m.cols == 2);
  CHECK(m.at(0, 0) == 1.0f);
  CHECK(m.at(0, 1) == 2.0f);
  fs::remove(p);
}

TEST_CASE("fvecs: write then read is the identity, bit for bit") {
  const MatrixF data = generate_dataset(Dist::gaussian, 33, 7, 11);
  const auto p = tmp_file("io_roundtrip.fvecs");
  write_fvecs(data, p);
  const auto back = read_fvecs(p);
  REQUIRE(back.rows == data.rows);
  REQUIRE(back.cols == data.cols);
  CHECK(back.data == data.data);

  // Writing the same matrix again produces the same bytes.
  const auto p2 = tmp_file("io_roundtrip2.fvecs");
  write_fvecs(back, p2);
  std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  fs::remove(p);
  fs::remove(p2);
}

TEST_CASE("fvecs: empty file reads as zero vectors") {
  const auto p = tmp_file("io_empty.fvecs");
  write_bytes(p, {});
  const auto m = read_fvecs(p);
  CHECK(m.rows == 0);
  fs::remove(p);
}

TEST_CASE("fvecs: malformed inputs carry the byte offset") {
  {
    // Second record disagrees on the dimension (offset 12).
    const auto p = tmp_file("io_baddim.fvecs");
    write_bytes(p, {0x02, 0x00, 0x00, 0x00, 0, 0, 0, 0, 0, 0, 0, 0,
                    0x03, 0x00, 0x00, 0x00, 0, 0, 0, 0});
    try {
      read_fvecs(p);
      FAIL("expected a dimension error");
    } catch (const error& e) {
      CHECK(e.code() == errc::data);
      CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
    fs::remove(p);
  }
  {
    // Truncated payload.
    const auto p = tmp_file("io_trunc.fvecs");
    write_bytes(p, {0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F});
    CHECK_THROWS_AS(read_fvecs(p), const error&);
    fs::remove(p);
  }
  {
    // Dimension <= 0.
    const auto p = tmp_file("io_zerodim.fvecs");
    write_bytes(p, {0x00, 0x00, 0x00, 0x00});
    CHECK_THROWS_AS(read_fvecs(p), const error&);
    fs::remove(p);
  }
  CHECK_THROWS_AS(read_fvecs(tmp_file("io_missing_file.fvecs")), const error&);
}

TEST_CASE("ivecs: round trip and layout compatibility") {
  const std::vector<std::vector<std::int32_t>> rows{{5, 3, 9}, {1, 2, 4}};
  const auto p = tmp_file("io_ids.ivecs");
  write_ivecs(rows, p);
  CHECK(read_ivecs(p) == rows);

  // The bytes are the fvecs layout with integer payloads.
  std::ifstream in(p, std::ios::binary);
  std::int32_t dim = 0;
  in.read(reinterpret_cast<char*>(&dim), 4);
  CHECK(dim == 3);
  std::int32_t first = 0;
  in.read(reinterpret_cast<char*>(&first), 4);
  CHECK(first == 5);
  fs::remove(p);
}

}  // TEST_SUITE
