#include "miprune/io_util.hpp"

#include <charconv>
#include <cstring>

namespace miprune {

void write_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

void write_u32(std::ostream& os, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  os.write(b, 4);
}

void write_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

void write_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u32(os, static_cast<uint32_t>(bits & 0xffffffffu));
  write_u32(os, static_cast<uint32_t>(bits >> 32));
}

void read_bytes(std::istream& is, void* dst, size_t n, const std::string& what) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) {
    throw FormatError("truncated file while reading " + what);
  }
}

void write_bytes(std::ostream& os, const void* src, size_t n) {
  os.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
}

uint8_t read_u8(std::istream& is, const std::string& what) {
  uint8_t v;
  read_bytes(is, &v, 1, what);
  return v;
}

uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  read_bytes(is, b, 4, what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float read_f32(std::istream& is, const std::string& what) {
  const uint32_t bits = read_u32(is, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double read_f64(std::istream& is, const std::string& what) {
  const uint64_t lo = read_u32(is, what);
  const uint64_t hi = read_u32(is, what);
  const uint64_t bits = lo | (hi << 32);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw FormatError("cannot open " + path.string() + " for writing");
  }
  return os;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw FormatError("cannot open " + path.string() + " for reading");
  }
  return is;
}

void expect_magic(std::istream& is, const std::array<char, 4>& magic,
                  const std::string& what) {
  char got[4];
  read_bytes(is, got, 4, what + " magic");
  if (std::memcmp(got, magic.data(), 4) != 0) {
    throw FormatError("bad magic for " + what + ": expected '" +
                      std::string(magic.data(), 4) + "', got '" +
                      std::string(got, 4) + "'");
  }
}

void write_magic(std::ostream& os, const std::array<char, 4>& magic) {
  os.write(magic.data(), 4);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace miprune
