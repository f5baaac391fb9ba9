#pragma once

#include <chrono>

#include "hairsynth/pipeline/state.hpp"

namespace hairsynth::pipeline {

struct StageTiming {
  double stage1_ms = 0;
  double stage2_ms = 0;
  double total_ms() const { return stage1_ms + stage2_ms; }
};

struct ForwardResult {
  Tensor<float> image;   // [0,1] RGB, the final output
  Tensor<float> stage1;  // [0,1] RGB stage-1 output (cut to the mask); empty for single-stage
};

// Inference on a batch without the trained-state check.
inline ForwardResult forward_batch(const PipelineState& st, const Pipeline& p, const Batch& b,
                                   StageTiming* timing = nullptr) {
  nn::NoGrad guard;
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::time_point a, clock::time_point z) {
    return std::chrono::duration<double, std::milli>(z - a).count();
  };
  ForwardResult r;
  const auto t0 = clock::now();
  if (st.single_stage()) {
    r.image = nn::affine(p.stage1.g.forward(single_stage_input(b)), 0.5f, 0.5f).value();
    if (timing) timing->stage1_ms = ms(t0, clock::now());
    return r;
  }
  const Var<float> out1 = p.stage1.g.forward(Var<float>(b.cond1));
  const auto t1 = clock::now();
  r.stage1 = masked_in(nn::affine(out1, 0.5f, 0.5f).value(), b.mask);
  r.image = nn::affine(p.stage2.g.forward(stage2_input(out1, b)), 0.5f, 0.5f).value();
  if (timing) {
    timing->stage1_ms = ms(t0, t1);
    timing->stage2_ms = ms(t1, clock::now());
  }
  return r;
}

namespace detail {

inline int padded_extent(int w, int h, int depth) {
  int s = 1 << depth;
  while (s < w || s < h) s <<= 1;
  return s;
}

// Runs one image through a pipeline, padding to a power-of-two square and
// cropping back.
inline RasterImage run_single(const PipelineState& st, const Pipeline& p, const RasterImage& image,
                              const MaskImage& mask, const RasterImage& rgba, StageTiming* timing) {
  if (!p.trained()) throw error(errc::untrained, "pipeline has not been trained");
  if (!mask.same_extent(image)) throw error(errc::extent_mismatch, "image vs mask");
  if (mask.none()) throw error(errc::empty_mask, "synthesis needs a nonempty mask");
  const int w = image.width(), h = image.height();
  const int s = padded_extent(w, h, st.cfg.depth);
  RasterImage img_p(s, s, 3), rgba_p(s, s, 4);
  MaskImage mask_p(s, s);
  const RasterImage rgb = to_rgb(image);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img_p(x, y, c) = rgb(x, y, c);
      for (int c = 0; c < 4; ++c) rgba_p(x, y, c) = rgba(x, y, c);
      mask_p.set(x, y, mask(x, y));
    }
  const Example e = make_example(img_p, mask_p, rgba_p, st.cfg.loss.morph_k, false);
  const std::vector<Example> one{e};
  const std::size_t idx[] = {0};
  const Tensor<float> out = forward_batch(st, p, collate(one, idx), timing).image;
  RasterImage full = to_image(out);
  if (s == w && s == h) return full;
  RasterImage crop(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) crop(x, y, c) = full(x, y, c);
  return crop;
}

}  // namespace detail

// Strokes -> hair region -> composited image, same extent as the input.
inline RasterImage synthesize(const PipelineState& st, const RasterImage& image, const MaskImage& mask,
                              const StrokeSet& strokes, StageTiming* timing = nullptr) {
  if (strokes.width != image.width() || strokes.height != image.height()) {
    throw error(errc::extent_mismatch, "stroke set extent differs from image");
  }
  if (!mask.same_extent(image)) throw error(errc::extent_mismatch, "image vs mask");
  return detail::run_single(st, st.main, image, mask, rasterize_strokes(strokes, mask), timing);
}

// Stroke-free initialization from the mask and a single color.
inline RasterImage synthesize_init(const PipelineState& st, const RasterImage& image, const MaskImage& mask,
                                   std::array<float, 3> color, StageTiming* timing = nullptr) {
  if (!mask.same_extent(image)) throw error(errc::extent_mismatch, "image vs mask");
  if (mask.none()) throw error(errc::empty_mask, "synthesis needs a nonempty mask");
  return detail::run_single(st, st.init, image, mask, mean_fill(mask, color), timing);
}

}  // namespace hairsynth::pipeline
