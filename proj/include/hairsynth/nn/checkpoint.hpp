#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "hairsynth/common/binary_io.hpp"
#include "hairsynth/nn/models.hpp"

namespace hairsynth::nn {

// Named float32 blobs: u32 count, then per blob name, 4 x i32 shape, data.
template <class T>
void write_params(std::ostream& os, const ParamList<T>& params) {
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    binio::write_string(os, p.name);
    const Shape s = p.var.shape();
    for (int d : {s.n, s.c, s.h, s.w}) binio::write<std::int32_t>(os, d);
    for (std::size_t i = 0; i < p.var.value().size(); ++i) {
      binio::write<float>(os, static_cast<float>(p.var.value()[i]));
    }
  }
}

// Reads into an existing list; names and shapes must match exactly.
template <class T>
void read_params(std::istream& is, ParamList<T>& params) {
  const auto count = binio::read<std::uint32_t>(is);
  if (count != params.size()) {
    throw error(errc::decode, "checkpoint has " + std::to_string(count) + " blobs, expected " +
                                  std::to_string(params.size()));
  }
  for (auto& p : params) {
    const std::string name = binio::read_string(is);
    if (name != p.name) throw error(errc::decode, "blob " + name + " where " + p.name + " expected");
    Shape s;
    s.n = binio::read<std::int32_t>(is);
    s.c = binio::read<std::int32_t>(is);
    s.h = binio::read<std::int32_t>(is);
    s.w = binio::read<std::int32_t>(is);
    if (s != p.var.shape()) throw error(errc::decode, "blob " + name + " has shape " + s.str());
    Tensor<T>& v = p.var.mutable_value();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(binio::read<float>(is));
    require_finite(v, "checkpoint blob");
  }
}

template <class T>
std::uint64_t params_digest(const ParamList<T>& params, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const auto& p : params) {
    h = fnv1a64(p.name.data(), p.name.size(), h);
    for (std::size_t i = 0; i < p.var.value().size(); ++i) {
      const float f = static_cast<float>(p.var.value()[i]);
      h = fnv1a64(&f, sizeof f, h);
    }
  }
  return h;
}

}  // namespace hairsynth::nn
