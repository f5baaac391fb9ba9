#pragma once

#include <algorithm>
#include <cmath>

#include "hairsynth/imagecore/image.hpp"

namespace hairsynth {

// Pixel-center aligned bilinear resampling. Downscaling by more than 2x
// aliases; callers at desk scale only resample by small factors.
inline RasterImage resize_bilinear(const RasterImage& img, int width, int height) {
  if (width < 1 || height < 1) throw error(errc::invalid_argument, "resize target must be positive");
  if (img.width() == width && img.height() == height) return img;
  RasterImage out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) out(x, y, c) = img.bilinear(fx, fy, c);
    }
  }
  return out;
}

inline MaskImage resize_nearest(const MaskImage& mask, int width, int height) {
  if (width < 1 || height < 1) throw error(errc::invalid_argument, "resize target must be positive");
  if (mask.width() == width && mask.height() == height) return mask;
  MaskImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / width));
      out.set(x, y, mask(sx, sy));
    }
  }
  return out;
}

}  // namespace hairsynth
