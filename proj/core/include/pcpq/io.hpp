#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcpq/types.hpp"

namespace pcpq {

// fvecs: each record is a little-endian i32 dimension followed by that
// many little-endian f32 values; every record must agree on the
// dimension. ivecs is the same layout with i32 payloads (id lists).
// Parse errors carry the byte offset of the offending record.

MatrixF read_fvecs(const std::filesystem::path& path);
void write_fvecs(const MatrixF& data, const std::filesystem::path& path);

std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path);
void write_ivecs(const std::vector<std::vector<std::int32_t>>& rows,
                 const std::filesystem::path& path);

}  // namespace pcpq
