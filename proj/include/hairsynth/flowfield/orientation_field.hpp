#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hairsynth/flowfield/structure_tensor.hpp"

namespace hairsynth {

struct Vec2 {
  double x = 0;
  double y = 0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Eigen-decomposition of [[a, b], [b, c]] with major >= minor.
struct SymEigen2 {
  double major = 0;
  double minor = 0;
  Vec2 major_vec{1, 0};
  Vec2 minor_vec{0, 1};
};

inline SymEigen2 eigen_sym2(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  SymEigen2 e;
  e.major = mean + radius;
  e.minor = mean - radius;
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  e.major_vec = {std::cos(theta), std::sin(theta)};
  e.minor_vec = {-std::sin(theta), std::cos(theta)};
  return e;
}

/// Orientation angle in [0, pi) of an undirected direction.
inline double orientation_angle(Vec2 d) {
  double a = std::atan2(d.y, d.x);
  if (a < 0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

/// Canonical representative of the mod-pi class: y >= 0, and (1,0) rather than (-1,0).
inline Vec2 canonical_direction(Vec2 d) {
  const double a = orientation_angle(d);
  return {std::cos(a), std::sin(a)};
}

/// Per-pixel direction of minimum intensity change plus coherence.
class OrientationField {
 public:
  OrientationField() = default;
  OrientationField(int width, int height, double tau = 0.05)
      : width_(width), height_(height), tau_(static_cast<float>(tau)),
        dir_x_(static_cast<std::size_t>(width) * height, 1.0f),
        dir_y_(static_cast<std::size_t>(width) * height, 0.0f),
        coherence_(static_cast<std::size_t>(width) * height, 0.0f) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double tau() const noexcept { return tau_; }
  void set_tau(double tau) { tau_ = static_cast<float>(tau); }

  Vec2 direction(int x, int y) const { return {dir_x_[idx(x, y)], dir_y_[idx(x, y)]}; }
  float coherence(int x, int y) const { return coherence_[idx(x, y)]; }
  bool reliable(int x, int y) const { return coherence_[idx(x, y)] >= tau_; }
  double angle(int x, int y) const { return orientation_angle(direction(x, y)); }

  void set(int x, int y, Vec2 dir, double coherence) {
    const Vec2 d = canonical_direction(dir);
    dir_x_[idx(x, y)] = static_cast<float>(d.x);
    dir_y_[idx(x, y)] = static_cast<float>(d.y);
    coherence_[idx(x, y)] = static_cast<float>(std::clamp(coherence, 0.0, 1.0));
  }

  void set_angle(int x, int y, double angle, double coherence) {
    set(x, y, {std::cos(angle), std::sin(angle)}, coherence);
  }

  bool contains(double x, double y) const { return x >= 0 && y >= 0 && x <= width_ - 1 && y <= height_ - 1; }

  /// Bilinear direction at (x,y) with each corner sign-aligned to `ref`.
  Vec2 sample_direction(double x, double y, Vec2 ref) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    auto aligned = [&](int px, int py) {
      Vec2 d = direction(px, py);
      return d.dot(ref) < 0 ? -d : d;
    };
    Vec2 v = aligned(x0, y0) * ((1 - fx) * (1 - fy)) + aligned(x1, y0) * (fx * (1 - fy)) +
             aligned(x0, y1) * ((1 - fx) * fy) + aligned(x1, y1) * (fx * fy);
    const double n = v.norm();
    if (n < 1e-9) return aligned(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)));
    return v * (1.0 / n);
  }

  double sample_coherence(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fx) * (1 - fy) * coherence(x0, y0) + fx * (1 - fy) * coherence(x1, y0) +
           (1 - fx) * fy * coherence(x0, y1) + fx * fy * coherence(x1, y1);
  }

  std::span<const float> dir_x() const { return dir_x_; }
  std::span<const float> dir_y() const { return dir_y_; }
  std::span<const float> coherence_plane() const { return coherence_; }
  std::span<float> dir_x() { return dir_x_; }
  std::span<float> dir_y() { return dir_y_; }
  std::span<float> coherence_plane() { return coherence_; }

  friend bool operator==(const OrientationField&, const OrientationField&) = default;

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  float tau_ = 0.05f;
  std::vector<float> dir_x_, dir_y_, coherence_;
};

inline constexpr double kCoherenceEpsilon = 1e-8;
// Tensors below this trace are round-off from flat regions.
inline constexpr double kFlatTensorTrace = 1e-12;

/// Minor eigenvector of the structure tensor per pixel; coherence is the
/// normalized eigenvalue gap. Pixels under `tau` stay but read as unreliable.
inline OrientationField minimum_change_field(const ScalarFieldStack& j, double tau) {
  if (!(tau >= 0 && tau < 1)) throw error(errc::invalid_argument, "tau_coh must be in [0,1)");
  OrientationField field(j.width, j.height, tau);
  for (int y = 0; y < j.height; ++y)
    for (int x = 0; x < j.width; ++x) {
      const auto i = j.index(x, y);
      const SymEigen2 e = eigen_sym2(j.jxx[i], j.jxy[i], j.jyy[i]);
      const double lmax = std::max(e.major, 0.0);
      const double lmin = std::max(e.minor, 0.0);
      const double coh =
          lmax + lmin < kFlatTensorTrace ? 0.0 : (lmax - lmin) / (lmax + lmin + kCoherenceEpsilon);
      field.set(x, y, e.minor_vec, coh);
    }
  return field;
}

inline OrientationField orientation_field(const RasterImage& img, const FieldParams& p = {}) {
  return minimum_change_field(structure_tensor(img, p), p.tau_coherence);
}

}  // namespace hairsynth
