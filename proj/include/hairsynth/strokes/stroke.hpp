#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "hairsynth/flowfield/orientation_field.hpp"

namespace hairsynth {

/// Colored polyline guide stroke.
struct GuideStroke {
  std::vector<Vec2> points;
  std::array<float, 4> color{0, 0, 0, 1};
  float width = 2.0f;

  double length() const {
    double len = 0;
    for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
    return len;
  }

  friend bool operator==(const GuideStroke&, const GuideStroke&) = default;
};

struct StrokeSet {
  int width = 0;
  int height = 0;
  std::vector<GuideStroke> strokes;

  bool empty() const { return strokes.empty(); }
  std::size_t size() const { return strokes.size(); }

  friend bool operator==(const StrokeSet&, const StrokeSet&) = default;
};

/// Annotation and editing defaults.
struct StrokeParams {
  double density = 4.0;  // seeds per 1000 masked pixels
  float width = 2.0f;
  float alpha = 0.9f;
  double min_length = 15.0;
  double max_length = 60.0;
  double step = 1.0;
};

inline void validate_stroke(const GuideStroke& s, int width, int height) {
  if (s.points.size() < 2) throw error(errc::invalid_argument, "stroke needs at least 2 points");
  if (!(s.width > 0)) throw error(errc::invalid_argument, "stroke width must be > 0");
  for (float c : s.color)
    if (!(c >= 0 && c <= 1)) throw error(errc::invalid_argument, "stroke color out of [0,1]");
  if (!(s.color[3] > 0)) throw error(errc::invalid_argument, "stroke alpha must be in (0,1]");
  for (const Vec2& p : s.points)
    if (!(p.x >= 0 && p.y >= 0 && p.x <= width - 1 && p.y <= height - 1))
      throw error(errc::invalid_argument, "stroke point outside image");
}

}  // namespace hairsynth
