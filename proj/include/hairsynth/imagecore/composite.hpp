#pragma once

#include "hairsynth/imagecore/image.hpp"

namespace hairsynth {

/// Straight-alpha "over": out = a*fg.rgb + (1-a)*bg.
inline RasterImage composite_over(const RasterImage& fg, const RasterImage& bg) {
  if (fg.channels() != 4) throw error(errc::invalid_argument, "foreground must be RGBA");
  if (bg.channels() != 3) throw error(errc::invalid_argument, "background must be RGB");
  if (!fg.same_extent(bg)) throw error(errc::extent_mismatch, "composite_over");
  RasterImage out(bg.width(), bg.height(), 3);
  for (int y = 0; y < bg.height(); ++y)
    for (int x = 0; x < bg.width(); ++x) {
      const float a = fg(x, y, 3);
      for (int c = 0; c < 3; ++c) out(x, y, c) = a * fg(x, y, c) + (1.0f - a) * bg(x, y, c);
    }
  return out;
}

}  // namespace hairsynth
