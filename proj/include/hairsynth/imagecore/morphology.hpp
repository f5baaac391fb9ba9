#pragma once

#include <algorithm>
#include <vector>

#include "hairsynth/imagecore/image.hpp"

namespace hairsynth {

/// Value assumed for pixels outside the image.
enum class Pad { zero, one };

/// Default kernel for the compositing boundary band.
inline constexpr int kBoundaryKernel = 10;

namespace detail {

// Square k×k window anchored at offset -k/2, so for odd k it is centered.
inline void check_kernel(const MaskImage& mask, int k) {
  if (k < 1) throw error(errc::degenerate_kernel, "kernel size must be >= 1");
  if (k > mask.width() && k > mask.height())
    throw error(errc::degenerate_kernel, "kernel larger than both image dimensions");
}

// One separable pass of a min (want_all) or max filter along rows or columns.
inline std::vector<std::uint8_t> filter_1d(std::span<const std::uint8_t> in, int w, int h, int k,
                                           bool horizontal, bool want_all, std::uint8_t pad) {
  std::vector<std::uint8_t> out(in.size());
  const int lo = k / 2;
  const int len = horizontal ? w : h;
  const int lines = horizontal ? h : w;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int i) -> std::uint8_t {
      return horizontal ? in[static_cast<std::size_t>(line) * w + i] : in[static_cast<std::size_t>(i) * w + line];
    };
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + at(i);
    for (int i = 0; i < len; ++i) {
      const int a = i - lo;
      const int b = a + k - 1;
      const int ca = std::max(a, 0);
      const int cb = std::min(b, len - 1);
      const int inside = cb >= ca ? prefix[cb + 1] - prefix[ca] : 0;
      const int span_in = cb >= ca ? cb - ca + 1 : 0;
      const int outside = k - span_in;
      std::uint8_t v;
      if (want_all)
        v = (inside == span_in && (outside == 0 || pad)) ? 1 : 0;
      else
        v = (inside > 0 || (outside > 0 && pad)) ? 1 : 0;
      if (horizontal)
        out[static_cast<std::size_t>(line) * w + i] = v;
      else
        out[static_cast<std::size_t>(i) * w + line] = v;
    }
  }
  return out;
}

inline MaskImage square_filter(const MaskImage& mask, int k, bool want_all, Pad pad) {
  check_kernel(mask, k);
  const std::uint8_t p = pad == Pad::one ? 1 : 0;
  auto rows = filter_1d(mask.data(), mask.width(), mask.height(), k, true, want_all, p);
  auto cols = filter_1d(rows, mask.width(), mask.height(), k, false, want_all, p);
  MaskImage out(mask.width(), mask.height());
  std::copy(cols.begin(), cols.end(), out.data().begin());
  return out;
}

}  // namespace detail

/// Binary erosion with a k×k square. Out-of-image pixels read as `pad`.
inline MaskImage erode(const MaskImage& mask, int k, Pad pad = Pad::zero) {
  return detail::square_filter(mask, k, true, pad);
}

/// Binary dilation with a k×k square.
inline MaskImage dilate(const MaskImage& mask, int k, Pad pad = Pad::zero) {
  return detail::square_filter(mask, k, false, pad);
}

/// Ring straddling the mask boundary: dilate(mask) minus erode(mask).
inline MaskImage boundary_band(const MaskImage& mask, int k = kBoundaryKernel) {
  return mask_and_not(dilate(mask, k), erode(mask, k));
}

}  // namespace hairsynth
