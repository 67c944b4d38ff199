#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wigner/errors.hpp"

namespace wigner {

// Shortest stable decimal form that round-trips a double.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Minimal CSV emitter; values are preformatted strings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
  }
  void row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    line += '\n';
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  void close() { out_.close(); }

 private:
  std::ofstream out_;
};

inline constexpr char kSampleMagic[8] = {'W', 'I', 'G', 'S', 'A', 'M', 'P', '1'};

// Flat binary dump: 16 byte header (magic, dimension) then n*n doubles in
// row-major order.
inline void write_sample_bin(const std::string& path, const Eigen::MatrixXd& W) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kSampleMagic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(W.rows());
  out.write(reinterpret_cast<const char*>(&n), 8);
  std::vector<double> rowbuf(W.cols());
  for (Eigen::Index j = 0; j < W.rows(); ++j) {
    for (Eigen::Index k = 0; k < W.cols(); ++k) rowbuf[static_cast<std::size_t>(k)] = W(j, k);
    out.write(reinterpret_cast<const char*>(rowbuf.data()),
              static_cast<std::streamsize>(sizeof(double) * rowbuf.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Eigen::MatrixXd read_sample_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || std::memcmp(magic, kSampleMagic, 8) != 0)
    throw IoError("not a sample file: " + path);
  if (n == 0 || n > (1u << 20)) throw IoError("implausible dimension in " + path);
  Eigen::MatrixXd W(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> rowbuf(n);
  for (std::uint64_t j = 0; j < n; ++j) {
    in.read(reinterpret_cast<char*>(rowbuf.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw IoError("truncated sample file: " + path);
    for (std::uint64_t k = 0; k < n; ++k)
      W(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = rowbuf[k];
  }
  return W;
}

}  // namespace wigner
