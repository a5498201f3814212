#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stylo/error.hpp"

// Little-endian primitives for model files.
namespace stylo::binary_io {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  const auto n = read_u64(in);
  if (n > (std::uint64_t{1} << 32)) throw DataError("model file: implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("model file truncated");
  return s;
}

inline void write_magic(std::ostream& out, const std::string& magic, std::uint64_t version) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  write_u64(out, version);
}

inline void expect_magic(std::istream& in, const std::string& magic, std::uint64_t version) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw DataError("model file: expected " + magic);
  }
  if (const auto v = read_u64(in); v != version) {
    throw DataError("model file: unsupported version " + std::to_string(v));
  }
}

}  // namespace stylo::binary_io
