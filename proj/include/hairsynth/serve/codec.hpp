#pragma once

#include <sodium.h>

#include <string>
#include <vector>

#include "hairsynth/imagecore/png_io.hpp"

namespace hairsynth::serve {

inline std::string base64_encode(std::span<const unsigned char> bytes) {
  std::string out(sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.size() - 1);  // drop the terminating NUL
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& text) {
  std::vector<unsigned char> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw error(errc::decode, "invalid base64");
  }
  out.resize(len);
  return out;
}

inline std::string png_base64(const RasterImage& img) { return base64_encode(encode_png(img)); }

inline RasterImage image_from_base64(const std::string& text) {
  const auto bytes = base64_decode(text);
  return decode_png(bytes);
}

}  // namespace hairsynth::serve
