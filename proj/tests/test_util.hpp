#pragma once

#include "hairsynth/common/rng.hpp"
#include "hairsynth/imagecore/image.hpp"

namespace hairsynth::testing {

inline MaskImage random_mask(int w, int h, std::uint64_t seed, double p = 0.5) {
  Rng rng(seed);
  MaskImage m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < p);
  return m;
}

inline RasterImage random_image(int w, int h, int c, std::uint64_t seed) {
  Rng rng(seed);
  RasterImage img(w, h, c);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

// Brute-force k×k window filter, window [x - k/2, x - k/2 + k - 1], outside = pad.
inline MaskImage brute_window(const MaskImage& m, int k, bool want_all, bool pad) {
  MaskImage out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true, any = false;
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx) {
          const int u = x - k / 2 + dx;
          const int v = y - k / 2 + dy;
          const bool val = m.contains(u, v) ? m(u, v) : pad;
          all = all && val;
          any = any || val;
        }
      out.set(x, y, want_all ? all : any);
    }
  return out;
}

}  // namespace hairsynth::testing
