#pragma once

#include <vector>

#include "hairsynth/flowfield/orientation_field.hpp"

namespace hairsynth {

/// One midpoint (RK2) step of length h along the field, sign-aligned to `heading`.
/// Returns the new position and updates `heading` to the direction used.
inline Vec2 streamline_step(const OrientationField& field, Vec2 p, Vec2& heading, double h) {
  const Vec2 k1 = field.sample_direction(p.x, p.y, heading);
  const Vec2 mid = p + k1 * (0.5 * h);
  const Vec2 k2 = field.sample_direction(mid.x, mid.y, k1);
  heading = k2;
  return p + k2 * h;
}

/// Line integral convolution: box average of 2L+1 bilinear samples taken along
/// the streamline through each pixel, L steps of size h either way.
inline RasterImage lic_filter(const RasterImage& src, const OrientationField& field, int half_length,
                              double step) {
  if (half_length < 0) throw error(errc::invalid_argument, "LIC half-length must be >= 0");
  if (!(step > 0)) throw error(errc::invalid_argument, "LIC step must be > 0");
  if (src.width() != field.width() || src.height() != field.height())
    throw error(errc::extent_mismatch, "lic_filter");
  if (half_length == 0) return src;

  const int channels = src.channels();
  RasterImage out(src.width(), src.height(), channels);
  std::vector<double> acc(static_cast<std::size_t>(channels));
  const double inv = 1.0 / (2 * half_length + 1);
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      for (int c = 0; c < channels; ++c) acc[c] = src(x, y, c);
      const Vec2 start{static_cast<double>(x), static_cast<double>(y)};
      const Vec2 d0 = field.direction(x, y);
      for (const double sign : {1.0, -1.0}) {
        Vec2 p = start;
        Vec2 heading = d0 * sign;
        for (int i = 0; i < half_length; ++i) {
          p = streamline_step(field, p, heading, step);
          for (int c = 0; c < channels; ++c) acc[c] += src.bilinear(p.x, p.y, c);
        }
      }
      for (int c = 0; c < channels; ++c) out(x, y, c) = static_cast<float>(acc[c] * inv);
    }
  return out;
}

/// Flow-aligned abstraction of the image used as the stroke color source.
inline RasterImage color_field(const RasterImage& img, const OrientationField& field, const FieldParams& p = {}) {
  return lic_filter(to_rgb(img), field, p.color_lic_half_length, p.lic_step);
}

}  // namespace hairsynth
