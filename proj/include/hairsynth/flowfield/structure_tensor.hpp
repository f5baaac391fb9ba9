#pragma once

#include <cmath>
#include <vector>

#include "hairsynth/imagecore/image.hpp"

namespace hairsynth {

/// Tunables for orientation extraction and flow smoothing.
struct FieldParams {
  double sigma_grad = 1.0;
  double sigma_smooth = 2.0;
  double tau_coherence = 0.05;
  double lic_step = 0.5;
  int color_lic_half_length = 4;
};

/// Smoothed structure-tensor components, one value per pixel each.
struct ScalarFieldStack {
  int width = 0;
  int height = 0;
  std::vector<double> jxx, jxy, jyy;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Separable kernel with taps at offsets -radius..radius.
struct Kernel1d {
  int radius = 0;
  std::vector<double> taps;

  double operator[](int offset) const { return taps[static_cast<std::size_t>(offset + radius)]; }
};

inline Kernel1d gaussian_kernel(double sigma) {
  Kernel1d k;
  if (sigma <= 0) {
    k.taps = {1.0};
    return k;
  }
  k.radius = static_cast<int>(std::ceil(3.0 * sigma));
  k.taps.resize(2 * k.radius + 1);
  double sum = 0;
  for (int t = -k.radius; t <= k.radius; ++t) sum += (k.taps[t + k.radius] = std::exp(-0.5 * t * t / (sigma * sigma)));
  for (double& v : k.taps) v /= sum;
  return k;
}

// First-derivative-of-Gaussian, normalized so a unit ramp has unit response
// under f*k with f(x)=x.
inline Kernel1d gaussian_derivative_kernel(double sigma) {
  Kernel1d g = gaussian_kernel(sigma);
  Kernel1d k = g;
  double norm = 0;
  for (int t = -g.radius; t <= g.radius; ++t) norm += t * t * g[t];
  for (int t = -g.radius; t <= g.radius; ++t) k.taps[t + g.radius] = -t * g[t] / norm;
  return k;
}

/// Convolution (f*k)(x) = sum_t f(x - t) k(t) along one axis, edge-clamped.
inline std::vector<double> convolve_axis(const std::vector<double>& in, int w, int h, const Kernel1d& k,
                                         bool horizontal) {
  std::vector<double> out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int t = -k.radius; t <= k.radius; ++t) {
        const int sx = horizontal ? std::clamp(x - t, 0, w - 1) : x;
        const int sy = horizontal ? y : std::clamp(y - t, 0, h - 1);
        acc += in[static_cast<std::size_t>(sy) * w + sx] * k[t];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

inline std::vector<double> luminance_plane(const RasterImage& img) {
  std::vector<double> lum(img.pixel_count());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      double v = img.channels() < 3
                     ? img(x, y, 0)
                     : 0.299 * img(x, y, 0) + 0.587 * img(x, y, 1) + 0.114 * img(x, y, 2);
      if (!std::isfinite(v)) throw error(errc::non_finite, "structure_tensor: non-finite pixel");
      lum[static_cast<std::size_t>(y) * img.width() + x] = v;
    }
  return lum;
}

/// Gaussian-derivative gradients of luminance at sigma_grad, outer products
/// smoothed by a Gaussian at sigma_smooth.
inline ScalarFieldStack structure_tensor(const RasterImage& img, double sigma_grad, double sigma_smooth) {
  if (!(sigma_grad >= 0.5)) throw error(errc::invalid_argument, "sigma_grad must be >= 0.5");
  if (!(sigma_smooth >= 0)) throw error(errc::invalid_argument, "sigma_smooth must be >= 0");
  const int w = img.width();
  const int h = img.height();
  const auto lum = luminance_plane(img);
  const Kernel1d g = gaussian_kernel(sigma_grad);
  const Kernel1d dg = gaussian_derivative_kernel(sigma_grad);
  const auto gx = convolve_axis(convolve_axis(lum, w, h, dg, true), w, h, g, false);
  const auto gy = convolve_axis(convolve_axis(lum, w, h, g, true), w, h, dg, false);

  std::vector<double> xx(gx.size()), xy(gx.size()), yy(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    xx[i] = gx[i] * gx[i];
    xy[i] = gx[i] * gy[i];
    yy[i] = gy[i] * gy[i];
  }
  const Kernel1d s = gaussian_kernel(sigma_smooth);
  ScalarFieldStack out;
  out.width = w;
  out.height = h;
  out.jxx = convolve_axis(convolve_axis(xx, w, h, s, true), w, h, s, false);
  out.jxy = convolve_axis(convolve_axis(xy, w, h, s, true), w, h, s, false);
  out.jyy = convolve_axis(convolve_axis(yy, w, h, s, true), w, h, s, false);
  return out;
}

inline ScalarFieldStack structure_tensor(const RasterImage& img, const FieldParams& p = {}) {
  return structure_tensor(img, p.sigma_grad, p.sigma_smooth);
}

}  // namespace hairsynth
