#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hairsynth/common/binary_io.hpp"
#include "hairsynth/flowfield/orientation_field.hpp"

namespace hairsynth {

inline constexpr std::uint32_t kFieldFormatVersion = 1;

// Layout: "HSOF", u32 version, u32 width, u32 height, f32 tau, then float32
// planes dir_x, dir_y, coherence. Little-endian throughout.
inline void write_field(std::ostream& os, const OrientationField& f) {
  binio::write_magic(os, "HSOF");
  binio::write<std::uint32_t>(os, kFieldFormatVersion);
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(f.width()));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(f.height()));
  binio::write<float>(os, static_cast<float>(f.tau()));
  binio::write_floats(os, f.dir_x());
  binio::write_floats(os, f.dir_y());
  binio::write_floats(os, f.coherence_plane());
}

inline OrientationField read_field(std::istream& is) {
  binio::expect_magic(is, "HSOF");
  const auto version = binio::read<std::uint32_t>(is);
  if (version != kFieldFormatVersion) throw error(errc::decode, "unsupported field version");
  const auto w = binio::read<std::uint32_t>(is);
  const auto h = binio::read<std::uint32_t>(is);
  if (w == 0 || h == 0 || w > 1 << 15 || h > 1 << 15) throw error(errc::decode, "bad field extent");
  const auto tau = binio::read<float>(is);
  OrientationField f(static_cast<int>(w), static_cast<int>(h), tau);
  binio::read_floats(is, f.dir_x());
  binio::read_floats(is, f.dir_y());
  binio::read_floats(is, f.coherence_plane());
  return f;
}

inline void save_field(const OrientationField& f, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error(errc::io, "cannot open " + path.string());
  write_field(os, f);
}

inline OrientationField load_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error(errc::io, "cannot open " + path.string());
  return read_field(is);
}

/// Hue encodes orientation (doubled angle so 0 and pi match), value encodes coherence.
inline RasterImage field_false_color(const OrientationField& f) {
  RasterImage out(f.width(), f.height(), 3);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const double hue = f.angle(x, y) / std::numbers::pi * 6.0;
      const double v = f.coherence(x, y);
      const int sector = static_cast<int>(hue) % 6;
      const double frac = hue - std::floor(hue);
      double r = 0, g = 0, b = 0;
      switch (sector) {
        case 0: r = 1; g = frac; break;
        case 1: r = 1 - frac; g = 1; break;
        case 2: g = 1; b = frac; break;
        case 3: g = 1 - frac; b = 1; break;
        case 4: r = frac; b = 1; break;
        default: r = 1; b = 1 - frac; break;
      }
      out(x, y, 0) = static_cast<float>(r * v);
      out(x, y, 1) = static_cast<float>(g * v);
      out(x, y, 2) = static_cast<float>(b * v);
    }
  return out;
}

}  // namespace hairsynth
