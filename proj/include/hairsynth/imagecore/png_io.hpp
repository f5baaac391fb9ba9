#pragma once

#include <png.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "hairsynth/imagecore/image.hpp"

namespace hairsynth {

namespace detail {

inline RasterImage from_png_image(png_image& img, std::vector<png_byte>& buf, int channels) {
  std::vector<float> data(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) data[i] = buf[i] / 255.0f;
  return RasterImage(static_cast<int>(img.width), static_cast<int>(img.height), channels, std::move(data));
}

inline int channels_for_format(png_uint_32 format) {
  if (format & PNG_FORMAT_FLAG_COLOR) return (format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3;
  return 1;
}

inline png_uint_32 format_for_channels(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    default: return PNG_FORMAT_RGBA;
  }
}

inline std::vector<png_byte> quantize(const RasterImage& image) {
  std::vector<png_byte> buf(image.data().size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<png_byte>(std::lround(std::clamp(image.data()[i], 0.0f, 1.0f) * 255.0f));
  return buf;
}

inline RasterImage finish_read(png_image& img) {
  // Gray stays gray, gray+alpha is promoted to RGBA.
  int channels = channels_for_format(img.format);
  if (!(img.format & PNG_FORMAT_FLAG_COLOR) && (img.format & PNG_FORMAT_FLAG_ALPHA)) channels = 4;
  img.format = format_for_channels(channels);
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw error(errc::decode, msg);
  }
  return from_png_image(img, buf, channels);
}

}  // namespace detail

/// Decodes an 8-bit PNG held in memory. Values are scaled by 1/255.
inline RasterImage decode_png(std::span<const unsigned char> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw error(errc::decode, img.message);
  return detail::finish_read(img);
}

inline RasterImage load_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw error(errc::decode, path.string() + ": " + img.message);
  return detail::finish_read(img);
}

inline std::vector<unsigned char> encode_png(const RasterImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = detail::format_for_channels(image.channels());
  auto buf = detail::quantize(image);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buf.data(), 0, nullptr))
    throw error(errc::io, img.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buf.data(), 0, nullptr))
    throw error(errc::io, img.message);
  out.resize(size);
  return out;
}

inline void save_png(const RasterImage& image, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = detail::format_for_channels(image.channels());
  auto buf = detail::quantize(image);
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw error(errc::io, path.string() + ": " + img.message);
}

inline RasterImage mask_to_image(const MaskImage& mask) {
  RasterImage out(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) out.data()[i] = mask.data()[i] ? 1.0f : 0.0f;
  return out;
}

// Any channel-0 value at or above one half counts as set.
inline MaskImage image_to_mask(const RasterImage& image) {
  MaskImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out.set(x, y, image(x, y, 0) >= 0.5f);
  return out;
}

/// Masks are stored as 8-bit grayscale with 0/255 values.
inline void save_mask_png(const MaskImage& mask, const std::filesystem::path& path) {
  save_png(mask_to_image(mask), path);
}

inline MaskImage load_mask_png(const std::filesystem::path& path) { return image_to_mask(load_png(path)); }

}  // namespace hairsynth
