#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hairsynth/common/error.hpp"
#include "hairsynth/common/rng.hpp"

namespace hairsynth::nn {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

// Dense NCHW tensor.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape_(s), data_(s.numel(), fill) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw error(errc::shape_mismatch, "negative extent " + s.str());
    }
  }
  Tensor(Shape s, std::vector<T> data) : shape_(s), data_(std::move(data)) {
    if (data_.size() != s.numel()) throw error(errc::shape_mismatch, "data size vs " + s.str());
  }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  T& at(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  T at(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  T* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * shape_.c * shape_.plane(); }
  const T* sample(int n) const {
    return data_.data() + static_cast<std::size_t>(n) * shape_.c * shape_.plane();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) return false;
  }
  return true;
}

template <class T>
void require_finite(const Tensor<T>& t, const char* op) {
  if (!all_finite(t)) throw error(errc::non_finite, std::string("non-finite output in ") + op);
}

template <class T>
void require_shape(const Tensor<T>& t, const Shape& s, const char* what) {
  if (t.shape() != s) {
    throw error(errc::shape_mismatch, std::string(what) + ": expected " + s.str() + ", got " +
                                          t.shape().str());
  }
}

template <class T>
Tensor<T> random_normal(Shape s, Rng& rng, double stddev) {
  Tensor<T> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal() * stddev);
  return t;
}

template <class T>
Tensor<T> random_uniform(Shape s, Rng& rng, double lo, double hi) {
  Tensor<T> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Stack single-sample tensors along the batch axis.
template <class T>
Tensor<T> stack(std::span<const Tensor<T>> items) {
  if (items.empty()) throw error(errc::shape_mismatch, "stack of nothing");
  Shape s = items[0].shape();
  for (const auto& t : items) {
    if (t.c() != s.c || t.h() != s.h || t.w() != s.w) {
      throw error(errc::shape_mismatch, "stack: " + t.shape().str() + " vs " + s.str());
    }
  }
  int total = 0;
  for (const auto& t : items) total += t.n();
  Tensor<T> out({total, s.c, s.h, s.w});
  T* dst = out.data();
  for (const auto& t : items) dst = std::copy(t.data(), t.data() + t.size(), dst);
  return out;
}

template <class T>
Tensor<T> take_sample(const Tensor<T>& t, int n) {
  Tensor<T> out({1, t.c(), t.h(), t.w()});
  std::copy(t.sample(n), t.sample(n) + out.size(), out.data());
  return out;
}

}  // namespace hairsynth::nn
