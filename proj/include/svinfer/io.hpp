#ifndef SVINFER_IO_HPP
#define SVINFER_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svinfer/model.hpp"

namespace svinfer {

/// Malformed file contents; carries the byte offset of the defect.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) +
                           ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is, std::uint64_t& offset,
                             const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("truncated ") + what, offset);
  offset += 4;
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

// Little-endian f64 payloads; byte-swap only on big-endian hosts.
inline void put_f64s(std::ostream& os, const double* p, std::size_t count) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(p), 8 * count);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t u;
      std::memcpy(&u, &p[i], 8);
      unsigned char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
      os.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

inline void get_f64s(std::istream& is, double* p, std::size_t count,
                     std::uint64_t& offset, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(p), 8 * count))
      throw FormatError(std::string("truncated ") + what,
                        offset + static_cast<std::uint64_t>(is.gcount()));
    offset += 8 * count;
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      unsigned char b[8];
      if (!is.read(reinterpret_cast<char*>(b), 8))
        throw FormatError(std::string("truncated ") + what, offset);
      offset += 8;
      std::uint64_t u = 0;
      for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(b[k]) << (8 * k);
      std::memcpy(&p[i], &u, 8);
    }
  }
}

inline void expect_magic(std::istream& is, const char magic[4],
                         std::uint64_t& offset) {
  char buf[5] = {};
  if (!is.read(buf, 4)) throw FormatError("truncated magic", offset);
  if (std::memcmp(buf, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic, offset);
  offset += 4;
  int version = is.get();
  if (version == EOF) throw FormatError("truncated version byte", offset);
  if (version != 0x01)
    throw FormatError("unsupported version " + std::to_string(version), offset);
  offset += 1;
}

}  // namespace detail

// ---- dataset binary format (magic "TRDS") ----

inline void write_dataset(const Dataset& d, std::ostream& os) {
  os.write("TRDS", 4);
  os.put('\x01');
  detail::put_u32(os, static_cast<std::uint32_t>(d.m1()));
  detail::put_u32(os, static_cast<std::uint32_t>(d.m2()));
  detail::put_u32(os, static_cast<std::uint32_t>(d.total()));
  const std::size_t dd = static_cast<std::size_t>(d.d());
  for (int i = 0; i < d.total(); ++i) {
    const double y = d.y(i);
    detail::put_f64s(os, &y, 1);
    detail::put_f64s(os, d.raw_x().data() + i * dd, dd);
  }
  if (!os) throw std::runtime_error("write_dataset: stream failure");
}

inline void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
  write_dataset(d, os);
}

inline Dataset read_dataset(std::istream& is) {
  std::uint64_t offset = 0;
  detail::expect_magic(is, "TRDS", offset);
  const std::uint32_t m1 = detail::get_u32(is, offset, "header m1");
  const std::uint32_t m2 = detail::get_u32(is, offset, "header m2");
  const std::uint32_t total = detail::get_u32(is, offset, "header count");
  if (m1 == 0 || m2 == 0)
    throw FormatError("zero dimension in header", offset - 12);
  if (total == 0 || total % 2 != 0)
    throw FormatError("sample count must be even and positive", offset - 4);
  const std::size_t dd = static_cast<std::size_t>(m1) * m2;
  std::vector<double> xs(static_cast<std::size_t>(total) * dd);
  std::vector<double> ys(total);
  for (std::uint32_t i = 0; i < total; ++i) {
    detail::get_f64s(is, &ys[i], 1, offset, "record y");
    detail::get_f64s(is, xs.data() + i * dd, dd, offset, "record X");
  }
  return Dataset(static_cast<int>(m1), static_cast<int>(m2), std::move(xs),
                 std::move(ys));
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_dataset: cannot open " + path);
  return read_dataset(is);
}

// ---- dataset CSV variant ----

inline void write_dataset_csv(const Dataset& d, std::ostream& os) {
  os << "y";
  for (int i = 0; i < d.m1(); ++i)
    for (int j = 0; j < d.m2(); ++j) os << ",x_" << i << "_" << j;
  os << "\n";
  char buf[32];
  const std::size_t dd = static_cast<std::size_t>(d.d());
  for (int s = 0; s < d.total(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g", d.y(s));
    os << buf;
    const double* x = d.raw_x().data() + s * dd;
    for (std::size_t k = 0; k < dd; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", x[k]);
      os << ',' << buf;
    }
    os << "\n";
  }
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw FormatError("empty CSV", 0);
  // Header determines dimensions from the last column label x_{m1-1}_{m2-1}.
  const auto last_comma = line.find_last_of(',');
  if (last_comma == std::string::npos || line.substr(0, 1) != "y")
    throw FormatError("bad CSV header", 0);
  int m1 = 0, m2 = 0;
  if (std::sscanf(line.c_str() + last_comma + 1, "x_%d_%d", &m1, &m2) != 2)
    throw FormatError("bad CSV header column label", last_comma + 1);
  m1 += 1;
  m2 += 1;
  const std::size_t dd = static_cast<std::size_t>(m1) * m2;
  std::vector<double> xs, ys;
  std::uint64_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw FormatError("bad CSV number at line " + std::to_string(lineno), 0);
      if (col == 0)
        ys.push_back(v);
      else
        xs.push_back(v);
      ++col;
    }
    if (col != dd + 1)
      throw FormatError("bad CSV column count at line " + std::to_string(lineno), 0);
  }
  if (ys.empty() || ys.size() % 2 != 0)
    throw FormatError("CSV sample count must be even and positive", 0);
  return Dataset(m1, m2, std::move(xs), std::move(ys));
}

// ---- matrix binary format (magic "TRMX") ----

inline void write_matrix(const Matrix& m, std::ostream& os) {
  os.write("TRMX", 4);
  os.put('\x01');
  detail::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  detail::put_f64s(os, rm.data(), static_cast<std::size_t>(rm.size()));
  if (!os) throw std::runtime_error("write_matrix: stream failure");
}

inline void write_matrix(const Matrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_matrix: cannot open " + path);
  write_matrix(m, os);
}

inline Matrix read_matrix(std::istream& is) {
  std::uint64_t offset = 0;
  detail::expect_magic(is, "TRMX", offset);
  const std::uint32_t rows = detail::get_u32(is, offset, "header rows");
  const std::uint32_t cols = detail::get_u32(is, offset, "header cols");
  if (rows == 0 || cols == 0)
    throw FormatError("zero dimension in header", offset - 8);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      rows, cols);
  detail::get_f64s(is, rm.data(), static_cast<std::size_t>(rm.size()), offset,
                   "matrix payload");
  return Matrix(rm);
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_matrix: cannot open " + path);
  return read_matrix(is);
}

}  // namespace svinfer

#endif  // SVINFER_IO_HPP
