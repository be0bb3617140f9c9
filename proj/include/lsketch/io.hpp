#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"

namespace lsketch::io {

inline constexpr std::array<char, 4> kMatrixMagic{'S', 'K', 'L', 'B'};
inline constexpr std::uint16_t kMatrixVersion = 1;

namespace detail {

template <class U>
void put_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  os.write(buf.data(), buf.size());
}

template <class U>
U get_le(std::istream& is, const std::string& what) {
  static_assert(std::is_unsigned_v<U>);
  std::array<unsigned char, sizeof(U)> buf{};
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw IoError(what + ": truncated input");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

}  // namespace detail

/// rawbin: "SKLB", u16 version, u32 rows, u32 cols, rows*cols little-endian f64.
inline void write_rawbin(std::ostream& os, const Matrix& a) {
  os.write(kMatrixMagic.data(), kMatrixMagic.size());
  detail::put_le<std::uint16_t>(os, kMatrixVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.rows()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.cols()));
  for (double x : a.data()) detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
  if (!os) throw IoError("write_rawbin: stream error");
}

inline Matrix read_rawbin(std::istream& is, const std::string& what = "rawbin") {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMatrixMagic) throw IoError(what + ": bad magic");
  const auto version = detail::get_le<std::uint16_t>(is, what);
  if (version != kMatrixVersion) throw IoError(what + ": unsupported version " + std::to_string(version));
  const std::size_t rows = detail::get_le<std::uint32_t>(is, what);
  const std::size_t cols = detail::get_le<std::uint32_t>(is, what);
  if (rows == 0 || cols == 0) throw IoError(what + ": zero-sized matrix");
  std::vector<double> data(rows * cols);
  for (double& x : data) x = std::bit_cast<double>(detail::get_le<std::uint64_t>(is, what));
  return Matrix(rows, cols, std::move(data));
}

inline void save_rawbin(const std::filesystem::path& p, const Matrix& a) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  write_rawbin(os, a);
}

inline Matrix load_rawbin(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  return read_rawbin(is, p.string());
}

/// 17 significant digits, enough to parse back to the same double.
inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw IoError(what + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline void write_csv(std::ostream& os, const Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? "," : "") << format_double(a(i, j));
    os << '\n';
  }
}

inline Matrix read_csv(std::istream& is, const std::string& what = "csv") {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::size_t count = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      data.push_back(parse_double(rest.substr(0, comma), what));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = count;
    if (count != cols) throw IoError(what + ": row " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                                     " values, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw IoError(what + ": no data");
  return Matrix(rows, cols, std::move(data));
}

namespace detail {

inline std::string pgm_token(std::istream& is, const std::string& what) {
  std::string tok;
  char c = 0;
  while (is.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw IoError(what + ": truncated PGM header");
  return tok;
}

inline std::size_t pgm_int(std::istream& is, const std::string& what) {
  const std::string t = pgm_token(is, what);
  std::size_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw IoError(what + ": bad PGM integer '" + t + "'");
  return v;
}

}  // namespace detail

/// Grayscale PGM (P2 or P5), pixel values scaled to [0, 1] by maxval.
inline Matrix read_pgm(std::istream& is, const std::string& what = "pgm") {
  const std::string magic = detail::pgm_token(is, what);
  if (magic != "P2" && magic != "P5") throw IoError(what + ": not a grayscale PGM");
  const std::size_t width = detail::pgm_int(is, what);
  const std::size_t height = detail::pgm_int(is, what);
  const std::size_t maxval = detail::pgm_int(is, what);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) throw IoError(what + ": bad PGM header");
  Matrix a(height, width);
  const double scale = static_cast<double>(maxval);
  if (magic == "P2") {
    for (double& x : a.data()) {
      const std::size_t v = detail::pgm_int(is, what);
      if (v > maxval) throw IoError(what + ": pixel exceeds maxval");
      x = static_cast<double>(v) / scale;
    }
  } else {
    const bool wide = maxval > 255;
    for (double& x : a.data()) {
      unsigned v = 0;
      unsigned char b[2] = {0, 0};
      if (!is.read(reinterpret_cast<char*>(b), wide ? 2 : 1)) throw IoError(what + ": truncated PGM data");
      v = wide ? (static_cast<unsigned>(b[0]) << 8) | b[1] : b[0];
      if (v > maxval) throw IoError(what + ": pixel exceeds maxval");
      x = static_cast<double>(v) / scale;
    }
  }
  return a;
}

/// Writes P5 with maxval 255; entries are clamped to [0, 1] first.
inline void write_pgm(std::ostream& os, const Matrix& a) {
  os << "P5\n" << a.cols() << ' ' << a.rows() << "\n255\n";
  for (double x : a.data()) {
    const double c = std::clamp(x, 0.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
}

}  // namespace lsketch::io
