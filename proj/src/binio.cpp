#include "eegvc/binio.hpp"

#include <bit>
#include <cstring>

namespace eegvc::binio {

static_assert(std::endian::native == std::endian::little,
              "little-endian host assumed by the raw numeric writers");

void write_bytes(std::ofstream& o, const void* p, std::size_t n) {
  o.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!o) throw Error("binio: write failed");
}

void write_u8(std::ofstream& o, std::uint8_t v) { write_bytes(o, &v, 1); }
void write_u16(std::ofstream& o, std::uint16_t v) { write_bytes(o, &v, 2); }
void write_u32(std::ofstream& o, std::uint32_t v) { write_bytes(o, &v, 4); }
void write_u64(std::ofstream& o, std::uint64_t v) { write_bytes(o, &v, 8); }
void write_f64(std::ofstream& o, double v) { write_bytes(o, &v, 8); }
void write_f32(std::ofstream& o, float v) { write_bytes(o, &v, 4); }

void write_str(std::ofstream& o, const std::string& s) {
  write_u32(o, static_cast<std::uint32_t>(s.size()));
  write_bytes(o, s.data(), s.size());
}

void read_bytes(std::ifstream& i, void* p, std::size_t n, const char* what) {
  i.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(i.gcount()) != n) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
}

std::uint8_t read_u8(std::ifstream& i, const char* what) {
  std::uint8_t v;
  read_bytes(i, &v, 1, what);
  return v;
}
std::uint16_t read_u16(std::ifstream& i, const char* what) {
  std::uint16_t v;
  read_bytes(i, &v, 2, what);
  return v;
}
std::uint32_t read_u32(std::ifstream& i, const char* what) {
  std::uint32_t v;
  read_bytes(i, &v, 4, what);
  return v;
}
std::uint64_t read_u64(std::ifstream& i, const char* what) {
  std::uint64_t v;
  read_bytes(i, &v, 8, what);
  return v;
}
double read_f64(std::ifstream& i, const char* what) {
  double v;
  read_bytes(i, &v, 8, what);
  return v;
}
float read_f32(std::ifstream& i, const char* what) {
  float v;
  read_bytes(i, &v, 4, what);
  return v;
}

std::string read_str(std::ifstream& i, const char* what) {
  const std::uint32_t n = read_u32(i, what);
  if (n > (1u << 20)) {
    throw FormatError(std::string("implausible string length in ") + what);
  }
  std::string s(n, '\0');
  read_bytes(i, s.data(), n, what);
  return s;
}

}  // namespace eegvc::binio
