#pragma once

#include <filesystem>

#include "vlstm/graph.hpp"

namespace vlstm::archive {

// Flat named-tensor archive. Binary little-endian layout:
//
//   magic   "NTAR1\n"
//   u32     entry count
//   per entry, in ascending name order:
//     u16   name length, then name bytes (UTF-8, no NUL)
//     u32   rows, u32 cols
//     f64   rows*cols values, row-major, raw IEEE-754 bits
//
// Round-trips are bit-exact.
void save(const std::filesystem::path& path, const nd::NamedTensors& tensors);
nd::NamedTensors load(const std::filesystem::path& path);

}  // namespace vlstm::archive
