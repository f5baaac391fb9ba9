#pragma once

#include <array>
#include <span>
#include <vector>

#include "hairsynth/imagecore/morphology.hpp"
#include "hairsynth/imagecore/resize.hpp"
#include "hairsynth/nn/ops.hpp"
#include "hairsynth/strokes/rasterize.hpp"
#include "hairsynth/synthdata/dataset.hpp"

namespace hairsynth::pipeline {

using nn::Shape;
using nn::Tensor;
using nn::Var;

inline constexpr int kStage1Channels = 5;  // mask + stroke RGBA
inline constexpr int kStage2Channels = 7;  // stage-1 RGB + mask + masked target RGB
inline constexpr int kSingleChannels = 8;  // mask + stroke RGBA + masked target RGB
static_assert(kStage1Channels == 1 + 4 && kStage2Channels == 3 + 1 + 3);

// HWC image -> (1, c, h, w), each value mapped through a*v + b.
inline Tensor<float> to_tensor(const RasterImage& img, float a = 1, float b = 0) {
  Tensor<float> t({1, img.channels(), img.height(), img.width()});
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) t.at(0, c, y, x) = a * img(x, y, c) + b;
  return t;
}

inline Tensor<float> to_tensor(const MaskImage& m) {
  Tensor<float> t({1, 1, m.height(), m.width()});
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) t.at(0, 0, y, x) = m(x, y) ? 1.f : 0.f;
  return t;
}

// Sample n of a [0,1] tensor back to an RGB image, clamped.
inline RasterImage to_image(const Tensor<float>& t, int n = 0) {
  RasterImage img(t.w(), t.h(), t.c());
  for (int c = 0; c < t.c(); ++c)
    for (int y = 0; y < t.h(); ++y)
      for (int x = 0; x < t.w(); ++x) img(x, y, c) = std::clamp(t.at(n, c, y, x), 0.f, 1.f);
  return img;
}

inline std::array<float, 3> mean_color(const RasterImage& img, const MaskImage& mask) {
  if (mask.none()) throw error(errc::empty_mask, "mean_color of an empty region");
  double s[3] = {0, 0, 0};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (mask(x, y))
        for (int c = 0; c < 3; ++c) s[c] += img(x, y, c);
  const double n = static_cast<double>(mask.count());
  return {static_cast<float>(s[0] / n), static_cast<float>(s[1] / n), static_cast<float>(s[2] / n)};
}

// Stroke-free conditioning: the mean color at alpha 1 inside the mask.
inline RasterImage mean_fill(const MaskImage& mask, std::array<float, 3> color) {
  RasterImage out(mask.width(), mask.height(), 4);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) {
        for (int c = 0; c < 3; ++c) out(x, y, c) = std::clamp(color[c], 0.f, 1.f);
        out(x, y, 3) = 1.f;
      }
  return out;
}

enum class Conditioning { strokes, mean_color };

// One training or inference item, all (1, c, h, w).
struct Example {
  Tensor<float> cond1;          // [-1,1]: mask, RGBA conditioning
  Tensor<float> mask;           // {0,1}
  Tensor<float> band;           // {0,1}, boundary ring around the mask
  Tensor<float> target;         // [0,1] RGB; empty at inference
  Tensor<float> masked_target;  // [0,1] RGB, zero inside the mask
  std::array<float, 3> color{};  // mean target color in the mask
};

inline Example make_example(const RasterImage& image, const MaskImage& mask, const RasterImage& rgba,
                            int morph_k, bool keep_target = true) {
  if (!mask.same_extent(image) || !mask.same_extent(rgba)) throw error(errc::extent_mismatch, "make_example");
  if (rgba.channels() != 4) throw error(errc::invalid_argument, "conditioning must be RGBA");
  if (mask.none()) throw error(errc::empty_mask, "example needs a nonempty mask");
  const RasterImage rgb = to_rgb(image);
  Example e;
  e.mask = to_tensor(mask);
  const Tensor<float> cond = to_tensor(rgba, 2, -1);
  e.cond1 = Tensor<float>({1, kStage1Channels, mask.height(), mask.width()});
  const std::size_t plane = e.mask.shape().plane();
  for (std::size_t i = 0; i < plane; ++i) e.cond1[i] = 2 * e.mask[i] - 1;
  std::copy(cond.data(), cond.data() + cond.size(), e.cond1.data() + plane);
  e.band = to_tensor(boundary_band(mask, morph_k));
  const Tensor<float> t = to_tensor(rgb);
  e.masked_target = nn::Tensor<float>(t.shape());
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) e.masked_target[c * plane + i] = t[c * plane + i] * (1 - e.mask[i]);
  if (keep_target) e.target = t;
  e.color = mean_color(rgb, mask);
  return e;
}

// Resamples to size x size; strokes are rescaled before rasterizing.
inline Example example_from_sample(const DatasetSample& s, int size, Conditioning kind, int morph_k) {
  const RasterImage img = resize_bilinear(to_rgb(s.image), size, size);
  const MaskImage mask = resize_nearest(s.mask, size, size);
  if (mask.none()) throw error(errc::empty_mask, "mask vanished after resampling");
  RasterImage rgba;
  if (kind == Conditioning::strokes) {
    StrokeSet set = s.strokes;
    const double sx = static_cast<double>(size) / s.image.width();
    const double sy = static_cast<double>(size) / s.image.height();
    if (sx != 1 || sy != 1) {
      for (auto& st : set.strokes)
        for (auto& p : st.points) {
          p.x = std::clamp((p.x + 0.5) * sx - 0.5, 0.0, size - 1.0);
          p.y = std::clamp((p.y + 0.5) * sy - 0.5, 0.0, size - 1.0);
        }
      set.width = set.height = size;
    }
    rgba = rasterize_strokes(set, mask);
  } else {
    rgba = mean_fill(mask, mean_color(img, mask));
  }
  return make_example(img, mask, rgba, morph_k);
}

inline std::vector<Example> make_examples(std::span<const DatasetSample> samples, int size, Conditioning kind,
                                          int morph_k) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(example_from_sample(s, size, kind, morph_k));
  return out;
}

struct Batch {
  Tensor<float> cond1, mask, band, target, masked_target;
  int size() const { return cond1.n(); }
};

inline Batch collate(std::span<const Example> all, std::span<const std::size_t> idx) {
  std::vector<Tensor<float>> c, m, b, t, mt;
  for (std::size_t i : idx) {
    const Example& e = all[i];
    c.push_back(e.cond1);
    m.push_back(e.mask);
    b.push_back(e.band);
    if (!e.target.empty()) t.push_back(e.target);
    mt.push_back(e.masked_target);
  }
  Batch out;
  out.cond1 = nn::stack<float>(c);
  out.mask = nn::stack<float>(m);
  out.band = nn::stack<float>(b);
  if (!t.empty()) {
    if (t.size() != idx.size()) throw error(errc::invalid_argument, "batch mixes examples with and without targets");
    out.target = nn::stack<float>(t);
  }
  out.masked_target = nn::stack<float>(mt);
  return out;
}

// a*x + b over a whole tensor.
inline Tensor<float> mapped(const Tensor<float>& t, float a, float b) {
  Tensor<float> out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = a * t[i] + b;
  return out;
}

// Target restricted to the mask; the stage-1 ground truth.
inline Tensor<float> masked_in(const Tensor<float>& img, const Tensor<float>& mask) {
  Tensor<float> out(img.shape());
  const std::size_t plane = img.shape().plane();
  for (int n = 0; n < img.n(); ++n)
    for (int c = 0; c < img.c(); ++c)
      for (std::size_t i = 0; i < plane; ++i)
        out.sample(n)[c * plane + i] = img.sample(n)[c * plane + i] * mask.sample(n)[i];
  return out;
}

// Single-network input: the stage-1 conditioning plus the masked target.
inline Var<float> single_stage_input(const Batch& b) {
  return nn::concat(Var<float>(b.cond1), Var<float>(mapped(b.masked_target, 2, -1)));
}

// Stage-2 input from the stage-1 output (tanh range). The stage-1 output is
// cut to the mask so only the synthesized region is passed on.
inline Var<float> stage2_input(const Var<float>& stage1_out, const Batch& b) {
  const Var<float> s1 = nn::affine(nn::mul_const(nn::affine(stage1_out, 1.f, 1.f), b.mask), 1.f, -1.f);
  return nn::concat(nn::concat(s1, Var<float>(mapped(b.mask, 2, -1))), Var<float>(mapped(b.masked_target, 2, -1)));
}

}  // namespace hairsynth::pipeline
