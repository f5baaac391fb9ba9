#pragma once

#include <vector>

#include "hairsynth/flowfield/brush.hpp"
#include "hairsynth/flowfield/lic.hpp"
#include "hairsynth/strokes/rasterize.hpp"
#include "hairsynth/strokes/tracing.hpp"

namespace hairsynth {

/// Traces and colorizes strokes from seeds. Seeds that terminate immediately
/// are skipped; one stroke length is drawn per seed so the sequence does not
/// depend on which seeds succeed.
inline std::vector<GuideStroke> trace_seeds(const std::vector<Vec2>& seeds, const OrientationField& field,
                                            const RasterImage& colors, const MaskImage& mask,
                                            const StrokeParams& sp, Rng& rng) {
  std::vector<GuideStroke> out;
  for (const Vec2& seed : seeds) {
    const double max_len = rng.uniform(sp.min_length, sp.max_length);
    try {
      GuideStroke s = trace_stroke(field, seed, mask, max_len, sp.step);
      s = colorize_stroke(std::move(s), colors, sp.alpha);
      s.width = sp.width;
      out.push_back(std::move(s));
    } catch (const error& e) {
      if (e.code() != errc::degenerate_stroke) throw;
    }
  }
  return out;
}

/// Strokes from an existing field and color field.
inline StrokeSet strokes_from_fields(const OrientationField& field, const RasterImage& colors, const MaskImage& mask,
                                     const StrokeParams& sp, std::uint64_t rng_seed) {
  StrokeSet set{mask.width(), mask.height(), {}};
  if (mask.none()) return set;
  Rng rng(mix_seed(rng_seed, 1));
  const auto seeds = sample_seeds(mask, sp.density, rng_seed);
  set.strokes = trace_seeds(seeds, field, colors, mask, sp, rng);
  return set;
}

/// Automatic annotation: structure tensor -> orientation field -> seeds ->
/// streamlines, colored from the LIC-smoothed image.
inline StrokeSet extract_guide_strokes(const RasterImage& img, const MaskImage& mask, const StrokeParams& sp,
                                       std::uint64_t rng_seed, const FieldParams& fp = {}) {
  if (!mask.same_extent(img)) throw error(errc::extent_mismatch, "extract_guide_strokes");
  if (mask.none()) throw error(errc::empty_mask, "extract_guide_strokes needs a nonempty mask");
  const OrientationField field = orientation_field(img, fp);
  const RasterImage colors = color_field(img, field, fp);
  return strokes_from_fields(field, colors, mask, sp, rng_seed);
}

inline bool stroke_touches_disk(const GuideStroke& s, Vec2 center, double radius) {
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Vec2 a = s.points[i];
    const Vec2 b = i + 1 < s.points.size() ? s.points[i + 1] : a;
    if (point_segment_distance(center, a, b) <= radius) return true;
  }
  return false;
}

/// Re-traces every stroke that could pass through the edited disk: strokes
/// touching the disk grown by the maximum stroke length are dropped and new
/// seeds are placed in that grown disk.
inline StrokeSet repopulate_strokes(const StrokeSet& set, const OrientationField& field, const RasterImage& colors,
                                    const MaskImage& mask, Vec2 center, double radius, const StrokeParams& sp,
                                    std::uint64_t rng_seed) {
  const double reach = radius + sp.max_length;
  StrokeSet out{set.width, set.height, {}};
  for (const GuideStroke& s : set.strokes)
    if (!stroke_touches_disk(s, center, reach)) out.strokes.push_back(s);

  MaskImage region(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      region.set(x, y, mask(x, y) && std::hypot(x - center.x, y - center.y) <= reach);
  if (region.none()) return out;
  Rng rng(mix_seed(rng_seed, 1));
  const auto seeds = sample_seeds(region, sp.density, rng_seed);
  auto fresh = trace_seeds(seeds, field, colors, mask, sp, rng);
  out.strokes.insert(out.strokes.end(), fresh.begin(), fresh.end());
  return out;
}

}  // namespace hairsynth
