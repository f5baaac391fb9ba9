#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hairsynth/common/error.hpp"

namespace hairsynth {

/// Dense row-major float image with 1, 3 or 4 interleaved channels in [0,1].
class RasterImage {
 public:
  RasterImage() = default;

  RasterImage(int width, int height, int channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels) {
    validate_extent();
    data_.assign(static_cast<std::size_t>(width) * height * channels, std::clamp(fill, 0.0f, 1.0f));
  }

  RasterImage(int width, int height, int channels, std::vector<float> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    validate_extent();
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
      throw error(errc::invalid_argument, "pixel buffer length does not match extent");
    for (float& v : data_) {
      if (!std::isfinite(v)) throw error(errc::non_finite, "non-finite pixel value");
      v = std::clamp(v, 0.0f, 1.0f);
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(int x, int y, int c) { return data_[index(x, y, c)]; }
  float operator()(int x, int y, int c) const { return data_[index(x, y, c)]; }

  // Edge-clamped read.
  float clamped(int x, int y, int c) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y, c)];
  }

  // Bilinear sample at continuous pixel coordinates (pixel centers at integers),
  // edge-clamped.
  float bilinear(double x, double y, int c) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1 - fx) * (*this)(x0, y0, c) + fx * (*this)(x1, y0, c);
    const double bot = (1 - fx) * (*this)(x0, y1, c) + fx * (*this)(x1, y1, c);
    return static_cast<float>((1 - fy) * top + fy * bot);
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  void clamp_values() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
  }

  bool same_extent(const RasterImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  void validate_extent() const {
    if (width_ <= 0 || height_ <= 0) throw error(errc::invalid_argument, "image extent must be positive");
    if (channels_ != 1 && channels_ != 3 && channels_ != 4)
      throw error(errc::invalid_argument, "channels must be 1, 3 or 4");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Binary occupancy grid.
class MaskImage {
 public:
  MaskImage() = default;

  MaskImage(int width, int height, bool fill = false) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw error(errc::invalid_argument, "mask extent must be positive");
    data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }

  bool operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  // True when the nearest pixel to (x,y) is inside the image and set.
  bool covers(double x, double y) const noexcept {
    const int xi = static_cast<int>(std::lround(x));
    const int yi = static_cast<int>(std::lround(y));
    return contains(xi, yi) && (*this)(xi, yi);
  }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
  }
  bool none() const noexcept { return count() == 0; }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  MaskImage inverted() const {
    MaskImage out = *this;
    for (auto& v : out.data_) v = v ? 0 : 1;
    return out;
  }

  bool same_extent(const MaskImage& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  bool same_extent(const RasterImage& o) const noexcept {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const MaskImage&, const MaskImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

inline MaskImage mask_and(const MaskImage& a, const MaskImage& b) {
  if (!a.same_extent(b)) throw error(errc::extent_mismatch, "mask_and");
  MaskImage out(a.width(), a.height());
  for (std::size_t i = 0; i < out.pixel_count(); ++i) out.data()[i] = a.data()[i] & b.data()[i];
  return out;
}

inline MaskImage mask_and_not(const MaskImage& a, const MaskImage& b) {
  if (!a.same_extent(b)) throw error(errc::extent_mismatch, "mask_and_not");
  MaskImage out(a.width(), a.height());
  for (std::size_t i = 0; i < out.pixel_count(); ++i) out.data()[i] = a.data()[i] & (b.data()[i] ^ 1);
  return out;
}

inline bool is_subset(const MaskImage& a, const MaskImage& b) {
  if (!a.same_extent(b)) return false;
  for (std::size_t i = 0; i < a.pixel_count(); ++i)
    if (a.data()[i] && !b.data()[i]) return false;
  return true;
}

inline float luminance(const RasterImage& img, int x, int y) {
  if (img.channels() < 3) return img(x, y, 0);
  return 0.299f * img(x, y, 0) + 0.587f * img(x, y, 1) + 0.114f * img(x, y, 2);
}

inline RasterImage to_rgb(const RasterImage& img) {
  if (img.channels() == 3) return img;
  RasterImage out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out(x, y, c) = img(x, y, img.channels() == 1 ? 0 : c);
  return out;
}

inline RasterImage flip_horizontal(const RasterImage& img) {
  RasterImage out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) out(x, y, c) = img(img.width() - 1 - x, y, c);
  return out;
}

inline MaskImage flip_horizontal(const MaskImage& m) {
  MaskImage out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(x, y, m(m.width() - 1 - x, y));
  return out;
}

// Target image with the masked region blanked to zero.
inline RasterImage masked_out(const RasterImage& img, const MaskImage& mask) {
  if (!mask.same_extent(img)) throw error(errc::extent_mismatch, "masked_out");
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (mask(x, y))
        for (int c = 0; c < img.channels(); ++c) out(x, y, c) = 0.0f;
  return out;
}

}  // namespace hairsynth
