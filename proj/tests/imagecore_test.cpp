#include <gtest/gtest.h>

#include <filesystem>

#include "hairsynth/imagecore/composite.hpp"
#include "hairsynth/imagecore/morphology.hpp"
#include "hairsynth/imagecore/png_io.hpp"
#include "test_util.hpp"

using namespace hairsynth;
using hairsynth::testing::brute_window;
using hairsynth::testing::random_mask;

TEST(RasterImage, ClampsOnConstruction) {
  RasterImage img(2, 1, 1, std::vector<float>{-0.5f, 1.5f});
  EXPECT_EQ(img(0, 0, 0), 0.0f);
  EXPECT_EQ(img(1, 0, 0), 1.0f);
}

TEST(RasterImage, RejectsNonFiniteAndBadExtent) {
  EXPECT_THROW(RasterImage(1, 1, 1, std::vector<float>{NAN}), error);
  EXPECT_THROW(RasterImage(2, 2, 2), error);
  EXPECT_THROW(RasterImage(2, 2, 3, std::vector<float>(5)), error);
}

TEST(Morphology, ErodeAllOnesZeroPadKillsOuterRing) {
  MaskImage m(20, 20, true);
  const MaskImage e = erode(m, 3);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const bool ring = x == 0 || y == 0 || x == 19 || y == 19;
      EXPECT_EQ(e(x, y), !ring) << x << "," << y;
    }
}

TEST(Morphology, SinglePixel) {
  MaskImage m(11, 11);
  m.set(5, 5, true);
  EXPECT_TRUE(erode(m, 3).none());
  const MaskImage d = dilate(m, 3);
  EXPECT_EQ(d.count(), 9u);
  for (int y = 4; y <= 6; ++y)
    for (int x = 4; x <= 6; ++x) EXPECT_TRUE(d(x, y));
}

TEST(Morphology, EmptyStaysEmpty) {
  MaskImage m(16, 16);
  EXPECT_TRUE(dilate(m, 10).none());
  EXPECT_TRUE(boundary_band(m, 10).none());
}

TEST(Morphology, DegenerateKernel) {
  MaskImage m(8, 6);
  EXPECT_THROW(erode(m, 9), error);
  EXPECT_THROW(dilate(m, 0), error);
  EXPECT_NO_THROW(dilate(m, 8));
  try {
    erode(m, 12);
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_kernel);
  }
}

TEST(Morphology, MatchesBruteForceOracle) {
  for (int trial = 0; trial < 20; ++trial) {
    const MaskImage m = random_mask(32, 32, 100 + trial, 0.3 + 0.02 * trial);
    for (int k : {1, 2, 3, 10}) {
      EXPECT_EQ(erode(m, k), brute_window(m, k, true, false));
      EXPECT_EQ(dilate(m, k), brute_window(m, k, false, false));
      EXPECT_EQ(erode(m, k, Pad::one), brute_window(m, k, true, true));
      EXPECT_EQ(dilate(m, k, Pad::one), brute_window(m, k, false, true));
    }
  }
}

TEST(Morphology, Duality) {
  for (int trial = 0; trial < 50; ++trial) {
    const MaskImage m = random_mask(16, 16, 7 + trial);
    for (int k : {2, 3, 5}) {
      EXPECT_EQ(erode(m, k), dilate(m.inverted(), k, Pad::one).inverted());
      EXPECT_EQ(dilate(m, k), erode(m.inverted(), k, Pad::one).inverted());
    }
  }
}

TEST(Morphology, Monotone) {
  for (int trial = 0; trial < 20; ++trial) {
    const MaskImage small = random_mask(24, 24, 300 + trial, 0.4);
    const MaskImage extra = random_mask(24, 24, 900 + trial, 0.3);
    MaskImage big = small;
    for (std::size_t i = 0; i < big.pixel_count(); ++i) big.data()[i] |= extra.data()[i];
    EXPECT_TRUE(is_subset(dilate(small, 4), dilate(big, 4)));
    EXPECT_TRUE(is_subset(erode(small, 4), erode(big, 4)));
  }
}

TEST(BoundaryBand, CenteredSquare) {
  MaskImage m(64, 64);
  for (int y = 24; y < 40; ++y)
    for (int x = 24; x < 40; ++x) m.set(x, y, true);
  const MaskImage band = boundary_band(m, 10);
  const MaskImage oracle = mask_and_not(brute_window(m, 10, false, false), brute_window(m, 10, true, false));
  EXPECT_EQ(band, oracle);
  // Middle row: dilation spans x=20..44 (25 px), erosion x=29..35 (7 px).
  int run = 0;
  for (int x = 0; x < 64; ++x) run += band(x, 32);
  EXPECT_EQ(run, 18);
}

TEST(BoundaryBand, FullMaskHugsBorder) {
  MaskImage m(32, 32, true);
  const MaskImage band = boundary_band(m, 10);
  EXPECT_TRUE(band(0, 0));
  EXPECT_TRUE(band(4, 16));
  EXPECT_FALSE(band(16, 16));
  EXPECT_FALSE(band(5, 16));
}

TEST(BoundaryBand, ContainsSetBoundary) {
  for (int trial = 0; trial < 20; ++trial) {
    const MaskImage m = random_mask(24, 24, 50 + trial, 0.5);
    const MaskImage band = boundary_band(m, 10);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        if (!m(x, y)) continue;
        bool edge = false;
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
          edge = edge || !m.contains(x + dx, y + dy) || !m(x + dx, y + dy);
        if (edge) {
          EXPECT_TRUE(band(x, y));
        }
      }
  }
}

TEST(Composite, AlphaExtremesAndHalf) {
  RasterImage bg(4, 4, 3, 0.0f);
  RasterImage fg(4, 4, 4, 1.0f);
  EXPECT_EQ(composite_over(fg, bg).data()[0], 1.0f);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) fg(x, y, 3) = 0.0f;
  EXPECT_EQ(composite_over(fg, bg), bg);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) fg(x, y, 3) = 0.5f;
  const RasterImage half = composite_over(fg, bg);
  for (float v : half.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Composite, LinearInAlpha) {
  const RasterImage bg = hairsynth::testing::random_image(5, 5, 3, 1);
  RasterImage fg = hairsynth::testing::random_image(5, 5, 4, 2);
  const RasterImage out = composite_over(fg, bg);
  for (int c = 0; c < 3; ++c) {
    const float a = fg(2, 2, 3);
    EXPECT_NEAR(out(2, 2, c), bg(2, 2, c) + a * (fg(2, 2, c) - bg(2, 2, c)), 1e-6);
  }
  EXPECT_THROW(composite_over(fg, RasterImage(4, 5, 3)), error);
}

TEST(PngIo, RoundTripsEightBitValues) {
  RasterImage img(7, 5, 4);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>(i % 256) / 255.0f;
  const auto bytes = encode_png(img);
  EXPECT_EQ(decode_png(bytes), img);

  MaskImage m = random_mask(9, 9, 3);
  const auto path = std::filesystem::temp_directory_path() / "hairsynth_mask_test.png";
  save_mask_png(m, path);
  const RasterImage raw = load_png(path);
  EXPECT_EQ(raw.channels(), 1);
  for (float v : raw.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
  EXPECT_EQ(load_mask_png(path), m);
  std::filesystem::remove(path);
}

TEST(PngIo, DecodeFailure) {
  std::vector<unsigned char> junk{1, 2, 3, 4};
  EXPECT_THROW(decode_png(junk), error);
}
