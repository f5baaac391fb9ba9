#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hairsynth/common/rng.hpp"
#include "hairsynth/flowfield/lic.hpp"
#include "hairsynth/strokes/stroke.hpp"

namespace hairsynth {

/// Minimum seed spacing for a target count: half the mean spacing of a regular grid.
inline double seed_min_distance(std::size_t masked_pixels, std::size_t target) {
  if (target == 0) return 0.0;
  return 0.5 * std::sqrt(static_cast<double>(masked_pixels) / static_cast<double>(target));
}

/// Dart-throwing seed placement inside the mask: candidates are visited in a
/// seeded random order and kept if no accepted seed is closer than the
/// minimum distance. Stops at round(density * |mask| / 1000) seeds.
inline std::vector<Vec2> sample_seeds(const MaskImage& mask, double density, std::uint64_t rng_seed) {
  if (!(density > 0)) throw error(errc::invalid_argument, "seed density must be > 0");
  std::vector<Vec2> candidates;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) candidates.push_back({static_cast<double>(x), static_cast<double>(y)});
  if (candidates.empty()) return {};
  const auto target = static_cast<std::size_t>(std::lround(density * candidates.size() / 1000.0));
  if (target == 0) return {};
  const double min_dist = seed_min_distance(candidates.size(), target);
  const double min_d2 = min_dist * min_dist;

  Rng rng(rng_seed);
  rng.shuffle(candidates);
  std::vector<Vec2> seeds;
  for (const Vec2& c : candidates) {
    bool ok = true;
    for (const Vec2& s : seeds) {
      const Vec2 d = c - s;
      if (d.dot(d) < min_d2) {
        ok = false;
        break;
      }
    }
    if (ok) seeds.push_back(c);
    if (seeds.size() == target) break;
  }
  return seeds;
}

/// Bidirectional midpoint streamline integration from `seed`. Each direction
/// runs at most max_len/2. A direction stops when the next point leaves the
/// mask or the pixel-center extent, falls below the coherence threshold, or
/// comes back within half a step of the stroke itself.
inline GuideStroke trace_stroke(const OrientationField& field, Vec2 seed, const MaskImage& mask, double max_len,
                                double h) {
  if (!(h > 0)) throw error(errc::invalid_argument, "trace step must be > 0");
  if (!mask.covers(seed.x, seed.y)) throw error(errc::invalid_argument, "seed outside mask");
  const int sx = static_cast<int>(std::lround(seed.x));
  const int sy = static_cast<int>(std::lround(seed.y));
  if (field.coherence(sx, sy) <= 0 || field.coherence(sx, sy) < field.tau())
    throw error(errc::degenerate_stroke, "no reliable orientation at seed");

  const double half = 0.5 * max_len;
  const double proximity2 = 0.25 * h * h;
  const auto recent = static_cast<std::size_t>(std::ceil(2.0 / h)) + 2;
  const Vec2 d0 = field.sample_direction(seed.x, seed.y, field.direction(sx, sy));

  std::vector<Vec2> forward, backward;
  auto near_self = [&](Vec2 p, const std::vector<Vec2>& own, const std::vector<Vec2>& other) {
    for (std::size_t i = 0; i + recent < own.size(); ++i) {
      const Vec2 d = p - own[i];
      if (d.dot(d) < proximity2) return true;
    }
    for (std::size_t i = (own.size() < recent ? recent - own.size() : 0); i < other.size(); ++i) {
      const Vec2 d = p - other[i];
      if (d.dot(d) < proximity2) return true;
    }
    return false;
  };
  for (int pass = 0; pass < 2; ++pass) {
    auto& own = pass == 0 ? forward : backward;
    const auto& other = pass == 0 ? backward : forward;
    Vec2 heading = pass == 0 ? d0 : -d0;
    Vec2 p = seed;
    double len = 0;
    while (len + h <= half + 1e-9) {
      Vec2 next = streamline_step(field, p, heading, h);
      if (!mask.covers(next.x, next.y)) break;
      if (next.x < 0 || next.y < 0 || next.x > mask.width() - 1 || next.y > mask.height() - 1) break;
      if (field.sample_coherence(next.x, next.y) < field.tau()) break;
      if (near_self(next, own, other)) break;
      own.push_back(next);
      len += (next - p).norm();
      p = next;
    }
  }
  GuideStroke stroke;
  stroke.points.reserve(forward.size() + backward.size() + 1);
  for (auto it = backward.rbegin(); it != backward.rend(); ++it) stroke.points.push_back(*it);
  stroke.points.push_back(seed);
  stroke.points.insert(stroke.points.end(), forward.begin(), forward.end());
  if (stroke.points.size() < 2) throw error(errc::degenerate_stroke, "stroke terminated immediately");
  return stroke;
}

/// Color = length-weighted mean of colorfield sampled at segment midpoints.
inline GuideStroke colorize_stroke(GuideStroke stroke, const RasterImage& colors, float alpha) {
  if (colors.channels() < 3) throw error(errc::invalid_argument, "color field must be RGB");
  double acc[3] = {0, 0, 0};
  double total = 0;
  for (std::size_t i = 1; i < stroke.points.size(); ++i) {
    const Vec2 a = stroke.points[i - 1];
    const Vec2 b = stroke.points[i];
    const double len = (b - a).norm();
    const Vec2 m = (a + b) * 0.5;
    for (int c = 0; c < 3; ++c) acc[c] += len * colors.bilinear(m.x, m.y, c);
    total += len;
  }
  if (total <= 0) {
    const Vec2 p = stroke.points.front();
    for (int c = 0; c < 3; ++c) acc[c] = colors.bilinear(p.x, p.y, c);
    total = 1;
  }
  for (int c = 0; c < 3; ++c) stroke.color[c] = static_cast<float>(std::clamp(acc[c] / total, 0.0, 1.0));
  stroke.color[3] = alpha;
  return stroke;
}

}  // namespace hairsynth
