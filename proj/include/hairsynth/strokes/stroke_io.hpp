#pragma once

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "hairsynth/strokes/stroke.hpp"

namespace hairsynth {

inline constexpr int kStrokeFormatVersion = 1;

// {"version":1,"width":W,"height":H,
//  "strokes":[{"points":[[x,y],...],"color":[r,g,b,a],"width":w}, ...]}
inline nlohmann::json to_json(const GuideStroke& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec2& p : s.points) pts.push_back({p.x, p.y});
  return {{"points", pts}, {"color", s.color}, {"width", s.width}};
}

inline GuideStroke stroke_from_json(const nlohmann::json& j) {
  GuideStroke s;
  for (const auto& p : j.at("points")) s.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  s.color = j.at("color").get<std::array<float, 4>>();
  s.width = j.value("width", 2.0f);
  return s;
}

inline nlohmann::json to_json(const StrokeSet& set) {
  nlohmann::json strokes = nlohmann::json::array();
  for (const GuideStroke& s : set.strokes) strokes.push_back(to_json(s));
  return {{"version", kStrokeFormatVersion}, {"width", set.width}, {"height", set.height}, {"strokes", strokes}};
}

inline StrokeSet stroke_set_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kStrokeFormatVersion) throw error(errc::decode, "unsupported stroke version");
    StrokeSet set;
    set.width = j.at("width").get<int>();
    set.height = j.at("height").get<int>();
    for (const auto& s : j.at("strokes")) {
      set.strokes.push_back(stroke_from_json(s));
      validate_stroke(set.strokes.back(), set.width, set.height);
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::decode, e.what());
  }
}

inline void save_strokes(const StrokeSet& set, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw error(errc::io, "cannot open " + path.string());
  os << to_json(set).dump() << '\n';
}

inline StrokeSet load_strokes(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw error(errc::io, "cannot open " + path.string());
  try {
    return stroke_set_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::decode, e.what());
  }
}

}  // namespace hairsynth
