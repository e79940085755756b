#include "dbal/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dbal {
namespace {

constexpr char kMagic[4] = {'D', 'B', 'A', 'L'};
constexpr std::uint32_t kVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t row, std::size_t col,
                          const std::string& what) {
  std::ostringstream os;
  os << path << ":row " << row << ":col " << col << ": " << what;
  throw std::runtime_error(os.str());
}

bool parse_cell(std::string_view cell, double& out) {
  std::size_t b = 0, e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  if (b == e) return false;
  const auto res = std::from_chars(cell.data() + b, cell.data() + e, out);
  return res.ec == std::errc{} && res.ptr == cell.data() + e;
}

Matrix load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");

  Matrix m;
  std::string line;
  std::size_t file_row = 0;
  bool first_data_row = true;
  std::vector<double> parsed;

  while (std::getline(in, line)) {
    ++file_row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;  // trailing newline

    parsed.clear();
    std::size_t start = 0, col = 0;
    bool row_ok = true;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      ++col;
      double v;
      if (!parse_cell(cell, v)) {
        if (first_data_row) {
          row_ok = false;  // header row, skip it
          break;
        }
        fail_at(path, file_row, col, "non-numeric cell '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) fail_at(path, file_row, col, "non-finite value");
      parsed.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!row_ok) continue;  // skipped header

    if (first_data_row) {
      first_data_row = false;
    } else if (parsed.size() != m.cols()) {
      fail_at(path, file_row, parsed.size(), "ragged row: expected " + std::to_string(m.cols()) +
                                                 " cells, got " + std::to_string(parsed.size()));
    }
    m.append_row(parsed);
  }
  if (m.rows() == 0) fail(path, "no data rows");
  return m;
}

void save_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const int len = std::snprintf(buf, sizeof(buf), "%.17g", m.at(i, j));
      if (j) out.put(',');
      out.write(buf, len);
    }
    out.put('\n');
  }
  if (!out) fail(path, "write failed");
}

std::uint64_t read_u64le(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void write_u64le(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

Matrix load_dbin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");

  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != sizeof(header)) fail(path, "truncated header");
  if (std::memcmp(header, kMagic, 4) != 0) fail(path, "bad magic (expected DBAL)");
  std::uint32_t version = 0;
  for (int i = 3; i >= 0; --i) version = (version << 8) | header[4 + i];
  if (version != kVersion) fail(path, "unsupported version " + std::to_string(version));

  const std::uint64_t rows = read_u64le(header + 8);
  const std::uint64_t cols = read_u64le(header + 16);
  if (cols == 0) fail(path, "cols must be >= 1");
  if (rows != 0 && cols > (std::uint64_t{1} << 40) / rows) fail(path, "matrix too large");

  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const std::size_t payload = static_cast<std::size_t>(rows * cols);
  if (payload > 0) {
    in.read(reinterpret_cast<char*>(m.data().data()),
            static_cast<std::streamsize>(payload * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(payload * sizeof(double)))
      fail(path, "truncated payload");
  }
  for (std::size_t i = 0; i < payload; ++i) {
    if (!std::isfinite(m.data()[i]))
      fail_at(path, i / m.cols() + 1, i % m.cols() + 1, "non-finite value");
  }
  return m;
}

void save_dbin(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out.write(kMagic, 4);
  unsigned char ver[4] = {kVersion & 0xff, 0, 0, 0};
  out.write(reinterpret_cast<const char*>(ver), 4);
  write_u64le(out, m.rows());
  write_u64le(out, m.cols());
  static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  if (!out) fail(path, "write failed");
}

}  // namespace

MatrixFormat format_from_path(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".dbin") == 0)
    return MatrixFormat::Dbin;
  return MatrixFormat::Csv;
}

Matrix load_matrix(const std::string& path, MatrixFormat format) {
  return format == MatrixFormat::Csv ? load_csv(path) : load_dbin(path);
}

void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format) {
  if (format == MatrixFormat::Csv)
    save_csv(m, path);
  else
    save_dbin(m, path);
}

std::vector<double> load_column(const std::string& path, MatrixFormat format) {
  const Matrix m = load_matrix(path, format);
  if (m.cols() != 1)
    throw std::runtime_error(path + ": expected a single column, got " + std::to_string(m.cols()));
  return m.data();
}

}  // namespace dbal
