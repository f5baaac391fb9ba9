#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hairsynth/common/error.hpp"

namespace hairsynth::binio {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void write(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw error(errc::decode, "unexpected end of stream");
  return to_little(v);
}

inline void write_floats(std::ostream& os, std::span<const float> v) {
  for (float f : v) write(os, f);
}

inline void read_floats(std::istream& is, std::span<float> v) {
  for (float& f : v) f = read<float>(is);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::size_t max_len = 1 << 20) {
  const auto n = read<std::uint32_t>(is);
  if (n > max_len) throw error(errc::decode, "string too long");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw error(errc::decode, "unexpected end of stream");
  return s;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0) throw error(errc::decode, std::string("bad magic, expected ") + magic);
}

}  // namespace hairsynth::binio
