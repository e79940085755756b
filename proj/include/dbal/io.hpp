#pragma once

#include <string>
#include <vector>

#include "dbal/types.hpp"

namespace dbal {

enum class MatrixFormat { Csv, Dbin };

// ".dbin" extension selects the binary format, anything else is CSV.
MatrixFormat format_from_path(const std::string& path);

// CSV: comma-separated, '.' decimal point, LF or CRLF endings. A header row
// is skipped when any cell of row 1 fails numeric parse. NaN/Inf entries are
// rejected here, with their row/column location, so downstream code never
// sees them.
//
// dbin: magic "DBAL", u32 version 1, u64 rows, u64 cols (all little-endian),
// then rows*cols IEEE-754 binary64 LE values in row-major order. Round trips
// are bit-exact.
Matrix load_matrix(const std::string& path, MatrixFormat format);
void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format);

// Single-column matrix read as a vector (labels, weights, pseudo-labels).
std::vector<double> load_column(const std::string& path, MatrixFormat format);

}  // namespace dbal
