#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hairsynth/strokes/extract.hpp"
#include "hairsynth/strokes/stroke_io.hpp"
#include "test_util.hpp"

using namespace hairsynth;
constexpr double kPi = std::numbers::pi;

namespace {

OrientationField constant_field(int w, int h, Vec2 d) {
  OrientationField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.set(x, y, d, 1.0);
  return f;
}

MaskImage rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  MaskImage m(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  return m;
}

// Rows of random brightness with mild variation along x: horizontal "fibers".
RasterImage horizontal_fibers(int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> row(size);
  for (double& v : row) v = rng.uniform(0.1, 0.9);
  RasterImage img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double v = row[y] * (0.9 + 0.1 * std::sin(x / 9.0 + y));
      img(x, y, 0) = static_cast<float>(v);
      img(x, y, 1) = static_cast<float>(0.8 * v);
      img(x, y, 2) = static_cast<float>(0.6 * v);
    }
  return img;
}

double segment_angle_error(Vec2 a, Vec2 b, double target) {
  double ang = std::atan2(b.y - a.y, b.x - a.x);
  double d = std::fmod(std::abs(ang - target), kPi);
  return std::min(d, kPi - d);
}

}  // namespace

TEST(SampleSeeds, EmptyMask) { EXPECT_TRUE(sample_seeds(MaskImage(10, 10), 4, 1).empty()); }

TEST(SampleSeeds, CountSpacingAndDeterminism) {
  const MaskImage m(100, 100, true);
  const auto seeds = sample_seeds(m, 2.0, 17);
  EXPECT_GE(seeds.size(), 16u);
  EXPECT_LE(seeds.size(), 24u);
  const double min_dist = seed_min_distance(m.count(), 20);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j) EXPECT_GE((seeds[i] - seeds[j]).norm(), min_dist);
  EXPECT_EQ(seeds, sample_seeds(m, 2.0, 17));
  EXPECT_NE(seeds, sample_seeds(m, 2.0, 18));
  EXPECT_THROW(sample_seeds(m, 0.0, 1), error);
}

TEST(TraceStroke, StraightField) {
  const auto f = constant_field(30, 30, {1, 0});
  const auto s = trace_stroke(f, {10, 10}, MaskImage(30, 30, true), 10.0, 1.0);
  ASSERT_EQ(s.points.size(), 11u);
  EXPECT_NEAR(s.points.front().x, 5.0, 1e-9);
  EXPECT_NEAR(s.points.back().x, 15.0, 1e-9);
  for (const Vec2& p : s.points) EXPECT_NEAR(p.y, 10.0, 1e-9);
}

TEST(TraceStroke, CircularFieldStaysOnCircle) {
  const int size = 64;
  const Vec2 c{32, 32};
  OrientationField f(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) f.set(x, y, {-(y - c.y), x - c.x}, 1.0);
  const auto s = trace_stroke(f, {52, 32}, MaskImage(size, size, true), 60.0, 0.5);
  EXPECT_GT(s.length(), 50.0);
  for (const Vec2& p : s.points) EXPECT_LT(std::abs((p - c).norm() - 20.0), 0.1);
}

TEST(TraceStroke, StopsAtMaskBorder) {
  const auto f = constant_field(30, 30, {1, 0});
  const MaskImage m = rect_mask(30, 30, 5, 5, 20, 20);
  const auto s = trace_stroke(f, {18, 10}, m, 40.0, 0.5);
  for (const Vec2& p : s.points) EXPECT_TRUE(m.covers(p.x, p.y));
  EXPECT_LE(s.points.back().x, 19.5);
  for (std::size_t i = 1; i < s.points.size(); ++i) EXPECT_LE((s.points[i] - s.points[i - 1]).norm(), 1.0 + 1e-9);
}

TEST(TraceStroke, StaysWithinPixelCenters) {
  // A full mask lets rounding accept points up to half a pixel past the edge.
  const auto f = constant_field(20, 20, {0, 1});
  const auto s = trace_stroke(f, {7, 17.2}, MaskImage(20, 20, true), 30.0, 0.7);
  for (const Vec2& p : s.points) {
    EXPECT_GE(p.y, 0.0);
    EXPECT_LE(p.y, 19.0);
  }
  validate_stroke(s, 20, 20);
}

TEST(TraceStroke, DegenerateSeed) {
  OrientationField f(10, 10);  // coherence 0 everywhere
  try {
    trace_stroke(f, {5, 5}, MaskImage(10, 10, true), 10, 1);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_stroke);
  }
}

TEST(ColorizeStroke, ConstantAndTwoTone) {
  GuideStroke s;
  for (int x = 0; x <= 20; ++x) s.points.push_back({static_cast<double>(x), 5.0});
  RasterImage red(24, 10, 3);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 24; ++x) red(x, y, 0) = 1.0f;
  const auto r = colorize_stroke(s, red, 0.3f);
  EXPECT_FLOAT_EQ(r.color[0], 1.0f);
  EXPECT_FLOAT_EQ(r.color[1], 0.0f);
  EXPECT_FLOAT_EQ(r.color[3], 0.3f);

  // Pixels x<10 are (0.2, 0.4, 0.6), x>=10 are (0.8, 0.0, 0.2). The path
  // x=0..19 is symmetric about the seam at 9.5, so the length-weighted mean of
  // the segment-midpoint samples is exactly the channel-wise midpoint.
  RasterImage two(20, 10, 3);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) {
      const bool left = x < 10;
      two(x, y, 0) = left ? 0.2f : 0.8f;
      two(x, y, 1) = left ? 0.4f : 0.0f;
      two(x, y, 2) = left ? 0.6f : 0.2f;
    }
  GuideStroke t;
  for (int x = 0; x <= 19; ++x) t.points.push_back({static_cast<double>(x), 5.0});
  const auto c = colorize_stroke(t, two, 1.0f);
  EXPECT_NEAR(c.color[0], 0.5, 1e-6);
  EXPECT_NEAR(c.color[1], 0.2, 1e-6);
  EXPECT_NEAR(c.color[2], 0.4, 1e-6);
}

TEST(Rasterize, EmptySet) {
  const auto img = rasterize_strokes(StrokeSet{8, 8, {}}, MaskImage(8, 8, true));
  for (float v : img.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Rasterize, OpaqueRedRow) {
  GuideStroke s;
  s.points = {{5, 10}, {25, 10}};
  s.color = {1, 0, 0, 1};
  s.width = 1;
  const auto img = rasterize_strokes(StrokeSet{32, 20, {s}}, MaskImage(32, 20, true));
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool on = y == 10 && x >= 5 && x <= 25;
      EXPECT_NEAR(img(x, y, 3), on ? 1.0 : 0.0, 1e-6) << x << "," << y;
      if (on) {
        EXPECT_EQ(img(x, y, 0), 1.0f);
      }
    }
}

TEST(Rasterize, ZeroOutsideMaskAndDrawOrder) {
  GuideStroke a;
  a.points = {{0, 8}, {31, 8}};
  a.color = {0, 1, 0, 1};
  a.width = 3;
  GuideStroke b = a;
  b.color = {0, 0, 1, 1};
  const MaskImage m = rect_mask(32, 16, 8, 0, 24, 16);
  const auto img = rasterize_strokes(StrokeSet{32, 16, {a, b}}, m);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x)
      if (!m(x, y)) {
        for (int c = 0; c < 4; ++c) EXPECT_EQ(img(x, y, c), 0.0f);
      }
  EXPECT_FLOAT_EQ(img(16, 8, 2), 1.0f);  // later stroke on top
  EXPECT_FLOAT_EQ(img(16, 8, 1), 0.0f);
  EXPECT_THROW(rasterize_strokes(StrokeSet{31, 16, {}}, m), error);
}

TEST(ExtractGuideStrokes, HorizontalFibersGiveHorizontalStrokes) {
  const RasterImage img = horizontal_fibers(64, 4);
  const MaskImage m = rect_mask(64, 64, 6, 6, 58, 58);
  const auto set = extract_guide_strokes(img, m, StrokeParams{}, 99);
  ASSERT_GT(set.size(), 3u);
  int ok = 0, total = 0;
  for (const auto& s : set.strokes)
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      ++total;
      ok += segment_angle_error(s.points[i - 1], s.points[i], 0.0) < 10 * kPi / 180;
    }
  EXPECT_GE(ok, 0.9 * total);
  for (const auto& s : set.strokes)
    for (const Vec2& p : s.points) EXPECT_TRUE(m.covers(p.x, p.y));
}

TEST(ExtractGuideStrokes, ConstantRegionYieldsNoStrokes) {
  const auto set = extract_guide_strokes(RasterImage(48, 48, 3, 0.3f), MaskImage(48, 48, true), {}, 1);
  EXPECT_TRUE(set.empty());
  EXPECT_THROW(extract_guide_strokes(RasterImage(8, 8, 3), MaskImage(8, 8), {}, 1), error);
}

TEST(ExtractGuideStrokes, DeterministicAndSerializable) {
  const RasterImage img = horizontal_fibers(48, 8);
  const MaskImage m = rect_mask(48, 48, 4, 4, 44, 44);
  const auto a = extract_guide_strokes(img, m, {}, 5);
  const auto b = extract_guide_strokes(img, m, {}, 5);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  const auto back = stroke_set_from_json(nlohmann::json::parse(to_json(a).dump()));
  EXPECT_EQ(back.size(), a.size());
  EXPECT_EQ(to_json(back).dump(), to_json(a).dump());
  EXPECT_THROW(stroke_set_from_json(nlohmann::json::parse(R"({"version":7})")), error);
}

TEST(ExtractGuideStrokes, RasterAlphaInsideMaskAndColorsFaithful) {
  const RasterImage img = horizontal_fibers(64, 12);
  const MaskImage m = rect_mask(64, 64, 10, 10, 54, 50);
  const auto set = extract_guide_strokes(img, m, {}, 3);
  const auto raster = rasterize_strokes(set, m);
  double stroke_mean = 0, image_mean = 0;
  int n = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (!m(x, y)) {
        EXPECT_EQ(raster(x, y, 3), 0.0f);
        continue;
      }
      if (raster(x, y, 3) <= 0) continue;
      for (int c = 0; c < 3; ++c) {
        stroke_mean += raster(x, y, c);
        image_mean += img(x, y, c);
      }
      ++n;
    }
  ASSERT_GT(n, 0);
  EXPECT_NEAR(stroke_mean / (3 * n), image_mean / (3 * n), 0.1);
}

TEST(ExtractGuideStrokes, RepopulationFollowsBrushedField) {
  const RasterImage img = horizontal_fibers(64, 21);
  const MaskImage m = rect_mask(64, 64, 4, 4, 60, 60);
  FieldParams fp;
  StrokeParams sp;
  auto field = orientation_field(img, fp);
  const auto colors = color_field(img, field, fp);
  const auto before = strokes_from_fields(field, colors, m, sp, 2);
  FieldBrush brush;
  brush.center = {32, 32};
  brush.radius = 14;
  brush.intensity = 1;
  brush.falloff = Falloff::flat;
  brush.angle = kPi / 2;
  field = brush_field(field, brush);
  const auto after = repopulate_strokes(before, field, colors, m, brush.center, brush.radius, sp, 7);
  int ok = 0, total = 0;
  for (const auto& s : after.strokes)
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const Vec2 mid = (s.points[i - 1] + s.points[i]) * 0.5;
      if ((mid - brush.center).norm() > brush.radius) continue;
      ++total;
      ok += segment_angle_error(s.points[i - 1], s.points[i], kPi / 2) < 15 * kPi / 180;
    }
  ASSERT_GT(total, 0);
  EXPECT_GE(ok, 0.8 * total);
}
