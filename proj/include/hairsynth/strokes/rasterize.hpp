#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hairsynth/imagecore/image.hpp"
#include "hairsynth/strokes/stroke.hpp"

namespace hairsynth {

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

/// Coverage of one stroke over its clipped bounding box.
struct CoverageTile {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  std::vector<float> cov;

  float at(int x, int y) const { return cov[static_cast<std::size_t>(y - y0) * width + (x - x0)]; }
};

/// Anti-aliased coverage: clamp(width/2 + 1/2 - distance, 0, 1), maximum over
/// segments so joints are not double counted.
inline CoverageTile stroke_coverage(const GuideStroke& s, int width, int height) {
  CoverageTile tile;
  if (s.points.empty()) return tile;
  const double reach = 0.5 * s.width + 0.5;
  double lo_x = s.points[0].x, hi_x = lo_x, lo_y = s.points[0].y, hi_y = lo_y;
  for (const Vec2& p : s.points) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  tile.x0 = std::max(0, static_cast<int>(std::floor(lo_x - reach)));
  tile.y0 = std::max(0, static_cast<int>(std::floor(lo_y - reach)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hi_x + reach)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hi_y + reach)));
  if (x1 < tile.x0 || y1 < tile.y0) return tile;
  tile.width = x1 - tile.x0 + 1;
  tile.height = y1 - tile.y0 + 1;
  tile.cov.assign(static_cast<std::size_t>(tile.width) * tile.height, 0.0f);
  auto segment = [&](Vec2 a, Vec2 b) {
    const int sx0 = std::max(tile.x0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
    const int sx1 = std::min(x1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
    const int sy0 = std::max(tile.y0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
    const int sy1 = std::min(y1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
    for (int y = sy0; y <= sy1; ++y)
      for (int x = sx0; x <= sx1; ++x) {
        const double d = point_segment_distance({static_cast<double>(x), static_cast<double>(y)}, a, b);
        const auto c = static_cast<float>(std::clamp(reach - d, 0.0, 1.0));
        float& dst = tile.cov[static_cast<std::size_t>(y - tile.y0) * tile.width + (x - tile.x0)];
        dst = std::max(dst, c);
      }
  };
  if (s.points.size() == 1) segment(s.points[0], s.points[0]);
  for (std::size_t i = 1; i < s.points.size(); ++i) segment(s.points[i - 1], s.points[i]);
  return tile;
}

/// Renders strokes in draw order with premultiplied "over" into a straight-alpha
/// RGBA image. Everything outside the mask is (0,0,0,0).
inline RasterImage rasterize_strokes(const StrokeSet& set, const MaskImage& mask) {
  if (set.width != mask.width() || set.height != mask.height())
    throw error(errc::extent_mismatch, "rasterize_strokes");
  const int w = mask.width();
  const int h = mask.height();
  std::vector<float> premult(static_cast<std::size_t>(w) * h * 4, 0.0f);
  for (const GuideStroke& s : set.strokes) {
    const CoverageTile tile = stroke_coverage(s, w, h);
    for (int y = tile.y0; y < tile.y0 + tile.height; ++y)
      for (int x = tile.x0; x < tile.x0 + tile.width; ++x) {
        const float a = tile.at(x, y) * s.color[3];
        if (a <= 0) continue;
        float* dst = &premult[(static_cast<std::size_t>(y) * w + x) * 4];
        const float keep = 1.0f - a;
        for (int c = 0; c < 3; ++c) dst[c] = s.color[c] * a + keep * dst[c];
        dst[3] = a + keep * dst[3];
      }
  }
  RasterImage out(w, h, 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const float* src = &premult[(static_cast<std::size_t>(y) * w + x) * 4];
      const float a = src[3];
      if (a <= 0) continue;
      for (int c = 0; c < 3; ++c) out(x, y, c) = std::clamp(src[c] / a, 0.0f, 1.0f);
      out(x, y, 3) = std::clamp(a, 0.0f, 1.0f);
    }
  return out;
}

}  // namespace hairsynth
