#pragma once

// Binary dense-matrix container:
//   bytes 0..3   magic "NRM1"
//   bytes 4..11  rows, little-endian u64
//   bytes 12..19 cols, little-endian u64
//   then rows*cols little-endian IEEE-754 float64 values in row-major order.

#include <filesystem>
#include <iosfwd>

#include "nestrec/core.hpp"

namespace nestrec {

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

} // namespace nestrec
