#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hairsynth/common/error.hpp"

namespace hairsynth {

inline constexpr int kStyleCount = 50;
inline constexpr int kLengthLevels = 4;
inline constexpr int kPaletteCount = 8;
inline constexpr int kYawMin = -90;
inline constexpr int kYawStep = 10;
inline constexpr int kViewpointCount = 19;
inline constexpr int kGridSize = kStyleCount * kLengthLevels * kPaletteCount * kViewpointCount;
static_assert(kGridSize == 30400);

/// Which procedural population a sample comes from. `shifted` changes skin,
/// lighting and hair palettes and stands in for real photographs.
enum class Domain { synthetic, shifted, real };

inline const char* to_string(Domain d) {
  switch (d) {
    case Domain::synthetic: return "synthetic";
    case Domain::shifted: return "shifted";
    case Domain::real: return "real";
  }
  return "synthetic";
}

inline Domain domain_from_string(const std::string& s) {
  if (s == "synthetic") return Domain::synthetic;
  if (s == "shifted") return Domain::shifted;
  if (s == "real") return Domain::real;
  throw error(errc::invalid_argument, "unknown domain " + s);
}

struct StyleParams {
  int style_id = 0;
  int length_level = 0;
  int palette_id = 0;
  int yaw_deg = 0;
  double density = 0.3;    // fibers per template pixel
  double curliness = 0.2;  // bend of each fiber relative to its length
  std::uint64_t rng_seed = 0;
  Domain domain = Domain::synthetic;

  void validate() const {
    if (style_id < 0 || style_id >= kStyleCount) throw error(errc::invalid_argument, "style_id out of range");
    if (length_level < 0 || length_level >= kLengthLevels) throw error(errc::invalid_argument, "length_level out of range");
    if (palette_id < 0 || palette_id >= kPaletteCount) throw error(errc::invalid_argument, "palette_id out of range");
    if (yaw_deg < kYawMin || yaw_deg > -kYawMin || (yaw_deg - kYawMin) % kYawStep != 0)
      throw error(errc::invalid_argument, "yaw must be a multiple of 10 in [-90, 90]");
    if (!(density >= 0) || !(curliness >= 0)) throw error(errc::invalid_argument, "density/curliness must be >= 0");
  }

  friend bool operator==(const StyleParams&, const StyleParams&) = default;
};

/// Position of (style, length, palette, yaw) in the enumeration grid.
inline int grid_index(const StyleParams& p) {
  const int yaw_idx = (p.yaw_deg - kYawMin) / kYawStep;
  return ((p.style_id * kLengthLevels + p.length_level) * kPaletteCount + p.palette_id) * kViewpointCount + yaw_idx;
}

inline StyleParams grid_params(int index) {
  if (index < 0 || index >= kGridSize) throw error(errc::invalid_argument, "grid index out of range");
  StyleParams p;
  p.yaw_deg = kYawMin + kYawStep * (index % kViewpointCount);
  index /= kViewpointCount;
  p.palette_id = index % kPaletteCount;
  index /= kPaletteCount;
  p.length_level = index % kLengthLevels;
  p.style_id = index / kLengthLevels;
  return p;
}

using Rgb = std::array<float, 3>;

// black, dark-brown, brown, auburn, red, blond, gray, white
inline constexpr std::array<Rgb, kPaletteCount> kHairPalette{{
    {0.06f, 0.05f, 0.05f},
    {0.20f, 0.13f, 0.09f},
    {0.36f, 0.24f, 0.15f},
    {0.45f, 0.20f, 0.10f},
    {0.66f, 0.28f, 0.12f},
    {0.82f, 0.68f, 0.42f},
    {0.55f, 0.55f, 0.55f},
    {0.90f, 0.89f, 0.86f},
}};

inline constexpr std::array<const char*, kPaletteCount> kHairPaletteNames{
    "black", "dark-brown", "brown", "auburn", "red", "blond", "gray", "white"};

}  // namespace hairsynth
