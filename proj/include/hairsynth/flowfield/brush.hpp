#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "hairsynth/flowfield/orientation_field.hpp"

namespace hairsynth {

enum class Falloff { flat, smooth };

/// Circular brush. Payload is an orientation (radians) or an RGBA color
/// depending on which brush function receives it.
struct FieldBrush {
  Vec2 center;
  double radius = 8.0;
  double intensity = 1.0;
  Falloff falloff = Falloff::smooth;
  double angle = 0.0;
  std::array<float, 4> color{0, 0, 0, 1};

  void validate() const {
    if (!(radius > 0)) throw error(errc::invalid_argument, "brush radius must be > 0");
    if (!(intensity >= 0 && intensity <= 1)) throw error(errc::invalid_argument, "brush intensity must be in [0,1]");
  }

  // Zero outside the disk.
  double weight(double x, double y) const {
    const double d = std::hypot(x - center.x, y - center.y);
    if (d > radius) return 0.0;
    if (falloff == Falloff::flat) return intensity;
    const double t = d / radius;
    return intensity * (1.0 - t * t) * (1.0 - t * t);
  }
};

namespace detail {
inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  // Ties at exactly -pi resolve to +pi so a half-turn blends counter-clockwise.
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}
}  // namespace detail

/// Angular interpolation of orientations in doubled-angle space.
inline double blend_orientation(double from, double to, double w) {
  const double a = 2.0 * from;
  const double diff = detail::wrap_pi(2.0 * to - a);
  return 0.5 * (a + w * diff);
}

inline OrientationField brush_field(OrientationField field, const FieldBrush& brush) {
  brush.validate();
  const int x0 = std::max(0, static_cast<int>(std::floor(brush.center.x - brush.radius)));
  const int x1 = std::min(field.width() - 1, static_cast<int>(std::ceil(brush.center.x + brush.radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(brush.center.y - brush.radius)));
  const int y1 = std::min(field.height() - 1, static_cast<int>(std::ceil(brush.center.y + brush.radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double w = brush.weight(x, y);
      if (w <= 0) continue;
      const double theta = w >= 1.0 ? brush.angle : blend_orientation(field.angle(x, y), brush.angle, w);
      field.set_angle(x, y, theta, std::max<double>(field.coherence(x, y), w));
    }
  return field;
}

/// Color-field brush: lerp toward the brush RGB, weighted by falloff and the
/// brush color's alpha.
inline RasterImage brush_color(RasterImage colors, const FieldBrush& brush) {
  brush.validate();
  const int x0 = std::max(0, static_cast<int>(std::floor(brush.center.x - brush.radius)));
  const int x1 = std::min(colors.width() - 1, static_cast<int>(std::ceil(brush.center.x + brush.radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(brush.center.y - brush.radius)));
  const int y1 = std::min(colors.height() - 1, static_cast<int>(std::ceil(brush.center.y + brush.radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double w = brush.weight(x, y) * brush.color[3];
      if (w <= 0) continue;
      for (int c = 0; c < std::min(3, colors.channels()); ++c)
        colors(x, y, c) = static_cast<float>((1 - w) * colors(x, y, c) + w * brush.color[c]);
    }
  return colors;
}

}  // namespace hairsynth
