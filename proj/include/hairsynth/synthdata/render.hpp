#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hairsynth/common/rng.hpp"
#include "hairsynth/imagecore/morphology.hpp"
#include "hairsynth/strokes/rasterize.hpp"
#include "hairsynth/synthdata/style.hpp"

namespace hairsynth {

/// One hair fiber: quadratic Bezier in image pixels.
struct Fiber {
  Vec2 p0, p1, p2;
  Rgb color{};
  float width = 1.0f;
  float alpha = 0.85f;

  Vec2 at(double t) const { return p0 * ((1 - t) * (1 - t)) + p1 * (2 * (1 - t) * t) + p2 * (t * t); }

  double arc_length(int samples = 32) const {
    double len = 0;
    Vec2 prev = p0;
    for (int i = 1; i <= samples; ++i) {
      const Vec2 q = at(static_cast<double>(i) / samples);
      len += (q - prev).norm();
      prev = q;
    }
    return len;
  }

  // Distance of the control point from the chord: bound on how far the curve bends.
  double control_sag() const { return point_segment_distance(p1, p0, p2); }
};

struct RenderedSample {
  RasterImage image;
  MaskImage mask;
};

namespace detail {

// Face placement within the square image; template coordinates u,v are in [-1,1].
struct FaceFrame {
  double cx, cy, half_w, half_h;
  explicit FaceFrame(int size) : cx(0.5 * (size - 1)), cy(0.42 * size), half_w(0.38 * size), half_h(0.42 * size) {}
};

inline bool in_ellipse(double u, double v, double cu, double cv, double ru, double rv) {
  const double a = (u - cu) / ru, b = (v - cv) / rv;
  return a * a + b * b <= 1.0;
}

// Style templates are unions of five facial regions chosen by bits of the
// style id, scaled by a per-style width factor.
inline bool in_template(int style_id, double u, double v) {
  const int bits = 1 + style_id % 31;
  const double s = 0.85 + 0.3 * ((style_id * 7) % 10) / 10.0;
  if (in_ellipse(u, v, 0.0, 0.28, 0.24 * s, 0.07)) return false;  // mouth
  bool in = false;
  if (bits & 1) in = in || in_ellipse(u, v, 0.0, 0.12, 0.38 * s, 0.1);  // moustache
  if (bits & 2) in = in || in_ellipse(u, v, 0.0, 0.62, 0.27 * s, 0.24);  // chin
  if (bits & 4)
    in = in || (v > 0.05 && in_ellipse(u, v, 0.0, 0.1, 0.85 * s, 0.8) && !in_ellipse(u, v, 0.0, 0.1, 0.68 * s, 0.64));
  if (bits & 8) in = in || (std::abs(u) > 0.66 * s && std::abs(u) < 0.86 * s && v > -0.55 && v < 0.2);  // sideburns
  if (bits & 16) in = in || in_ellipse(u, v, 0.0, 0.4, 0.75 * s, 0.5);  // cheeks
  return in;
}

inline constexpr std::array<double, kLengthLevels> kFiberLength{0.07, 0.13, 0.21, 0.32};

inline Rgb skin_tone(const StyleParams& p, Rng& rng) {
  static constexpr std::array<Rgb, 4> synthetic{{{0.90f, 0.75f, 0.64f}, {0.80f, 0.62f, 0.50f},
                                                  {0.64f, 0.47f, 0.36f}, {0.47f, 0.33f, 0.25f}}};
  static constexpr std::array<Rgb, 4> shifted{{{0.86f, 0.70f, 0.66f}, {0.72f, 0.58f, 0.55f},
                                                {0.58f, 0.44f, 0.40f}, {0.40f, 0.30f, 0.28f}}};
  const auto& tones = p.domain == Domain::synthetic ? synthetic : shifted;
  Rgb t = tones[rng.below(tones.size())];
  const double jitter = rng.uniform(-0.04, 0.04);
  for (float& c : t) c = static_cast<float>(std::clamp(c + jitter, 0.0, 1.0));
  return t;
}

inline Rgb hair_color(const StyleParams& p) {
  Rgb c = kHairPalette[static_cast<std::size_t>(p.palette_id)];
  if (p.domain != Domain::synthetic) {
    c[0] = std::clamp(c[0] * 1.08f + 0.03f, 0.0f, 1.0f);
    c[1] = std::clamp(c[1] * 0.95f + 0.03f, 0.0f, 1.0f);
    c[2] = std::clamp(c[2] * 0.85f + 0.05f, 0.0f, 1.0f);
  }
  return c;
}

// Vertical lighting gradient plus yaw-dependent side shading; the shifted
// domain adds a cool tint and low-frequency illumination ripple.
inline RasterImage background(const StyleParams& p, int size, Rng& rng) {
  const Rgb skin = skin_tone(p, rng);
  const double phase = rng.uniform(0, 2 * std::numbers::pi);
  const double yaw = p.yaw_deg * std::numbers::pi / 180.0;
  RasterImage img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double ty = static_cast<double>(y) / (size - 1);
      const double tx = static_cast<double>(x) / (size - 1) - 0.5;
      double light = 1.05 - 0.17 * ty - 0.12 * tx * std::sin(yaw);
      Rgb tint{1, 1, 1};
      if (p.domain != Domain::synthetic) {
        light *= 1.0 + 0.06 * std::sin(4.0 * tx + 3.0 * ty + phase);
        tint = {0.94f, 0.98f, 1.06f};
      }
      for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(std::clamp(skin[c] * tint[c] * light, 0.0, 1.0));
    }
  return img;
}

inline std::vector<Fiber> layout_canonical(const StyleParams& p, int size, Rng& rng) {
  const FaceFrame f(size);
  std::size_t area = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) area += in_template(p.style_id, (x - f.cx) / f.half_w, (y - f.cy) / f.half_h);
  const auto count = static_cast<std::size_t>(std::lround(p.density * static_cast<double>(area)));
  const double yaw = p.yaw_deg * std::numbers::pi / 180.0;
  const Rgb base = hair_color(p);
  const double px_scale = std::max(1.0, size / 64.0);

  // Cylinder projection: u is an angle around the vertical axis.
  auto project = [&](double u, double v) -> Vec2 {
    const double phi = std::clamp(u * 0.45 * std::numbers::pi + yaw, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
    return {f.cx + f.half_w * std::sin(phi), f.cy + f.half_h * v};
  };
  auto visible = [&](double u) { return std::cos(u * 0.45 * std::numbers::pi + yaw) > 0.05; };

  std::vector<Fiber> fibers;
  fibers.reserve(count);
  const std::size_t max_tries = 64 * count + 64;
  for (std::size_t tries = 0; fibers.size() < count && tries < max_tries; ++tries) {
    const double u = rng.uniform(-1, 1);
    const double v = rng.uniform(-1, 1);
    if (!in_template(p.style_id, u, v)) continue;
    const double len = kFiberLength[static_cast<std::size_t>(p.length_level)] * rng.uniform(0.8, 1.2);
    const double ang = 0.5 * std::numbers::pi - 0.6 * u + 0.15 * rng.normal();
    const double sag = p.curliness * len * 0.5 * rng.uniform(-1, 1);
    const double brightness = rng.uniform(0.75, 1.15);
    const double width = rng.uniform(0.7, 1.3);
    Rgb color{};
    for (int c = 0; c < 3; ++c)
      color[c] = static_cast<float>(std::clamp(base[c] * brightness + 0.03 * rng.normal(), 0.0, 1.0));
    if (!visible(u)) continue;
    const double du = std::cos(ang) * len, dv = std::sin(ang) * len;
    const double mu = u + 0.5 * du - dv / len * sag, mv = v + 0.5 * dv + du / len * sag;
    Fiber fb;
    fb.p0 = project(u, v);
    fb.p1 = project(mu, mv);
    fb.p2 = project(u + du, v + dv);
    fb.color = color;
    fb.width = static_cast<float>(width * px_scale);
    fibers.push_back(fb);
  }
  return fibers;
}

inline GuideStroke fiber_polyline(const Fiber& fb) {
  GuideStroke s;
  const int n = std::max(2, static_cast<int>(std::ceil(2.0 * ((fb.p2 - fb.p0).norm() + fb.control_sag()))));
  for (int i = 0; i <= n; ++i) s.points.push_back(fb.at(static_cast<double>(i) / n));
  s.width = fb.width;
  return s;
}

inline Rng sample_rng(const StyleParams& p) { return Rng(mix_seed(p.rng_seed, 0x5eed)); }

inline StyleParams mirror_source(StyleParams p) {
  p.yaw_deg = -p.yaw_deg;
  return p;
}

}  // namespace detail

/// Fiber geometry of a sample in image pixels. Negative yaw is the mirror
/// image of the matching positive yaw.
inline std::vector<Fiber> fiber_layout(const StyleParams& p, int size) {
  p.validate();
  if (p.yaw_deg < 0) {
    auto fibers = fiber_layout(detail::mirror_source(p), size);
    for (Fiber& fb : fibers)
      for (Vec2* q : {&fb.p0, &fb.p1, &fb.p2}) q->x = (size - 1) - q->x;
    return fibers;
  }
  Rng rng = detail::sample_rng(p);
  (void)detail::background(p, size, rng);
  return detail::layout_canonical(p, size, rng);
}

/// Skin render without any hair, for the same seed.
inline RasterImage render_background(const StyleParams& p, int size) {
  p.validate();
  if (p.yaw_deg < 0) return flip_horizontal(render_background(detail::mirror_source(p), size));
  Rng rng = detail::sample_rng(p);
  return detail::background(p, size, rng);
}

/// Procedural hair sample: curved fibers over a skin gradient inside a style
/// template, with the mask being the fiber footprint dilated by one pixel.
/// Pixels under the mask get a faint hair-colored shadow.
inline RenderedSample render_sample(const StyleParams& p, int size) {
  p.validate();
  if (size < 32) throw error(errc::invalid_argument, "sample size must be >= 32");
  if (p.yaw_deg < 0) {
    RenderedSample s = render_sample(detail::mirror_source(p), size);
    return {flip_horizontal(s.image), flip_horizontal(s.mask)};
  }
  Rng rng = detail::sample_rng(p);
  RasterImage img = detail::background(p, size, rng);
  const auto fibers = detail::layout_canonical(p, size, rng);

  std::vector<CoverageTile> tiles;
  tiles.reserve(fibers.size());
  MaskImage footprint(size, size);
  for (const Fiber& fb : fibers) {
    tiles.push_back(stroke_coverage(detail::fiber_polyline(fb), size, size));
    const CoverageTile& t = tiles.back();
    for (int y = t.y0; y < t.y0 + t.height; ++y)
      for (int x = t.x0; x < t.x0 + t.width; ++x)
        if (t.at(x, y) > 0.05f) footprint.set(x, y, true);
  }
  if (footprint.none()) throw error(errc::empty_mask, "sample has no visible fibers");
  MaskImage mask = dilate(footprint, 3);

  const Rgb shade = detail::hair_color(p);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (mask(x, y))
        for (int c = 0; c < 3; ++c) img(x, y, c) = 0.85f * img(x, y, c) + 0.15f * shade[c];

  for (std::size_t i = 0; i < fibers.size(); ++i) {
    const CoverageTile& t = tiles[i];
    for (int y = t.y0; y < t.y0 + t.height; ++y)
      for (int x = t.x0; x < t.x0 + t.width; ++x) {
        const float a = t.at(x, y) * fibers[i].alpha;
        if (a <= 0) continue;
        for (int c = 0; c < 3; ++c) img(x, y, c) = (1 - a) * img(x, y, c) + a * fibers[i].color[c];
      }
  }
  return {std::move(img), std::move(mask)};
}

}  // namespace hairsynth
