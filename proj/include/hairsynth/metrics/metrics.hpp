#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "hairsynth/imagecore/image.hpp"
#include "hairsynth/nn/models.hpp"

namespace hairsynth::metrics {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kFidEps = 1e-6;

namespace detail {

inline void check_pair(const RasterImage& a, const RasterImage& b) {
  if (!a.same_extent(b) || a.channels() != b.channels()) throw error(errc::extent_mismatch, "metric operands differ");
  if (a.empty()) throw error(errc::invalid_argument, "metric on an empty image");
}

inline nn::Tensor<float> to_nchw(const RasterImage& img) {
  if (img.channels() != 3) throw error(errc::invalid_argument, "expected an RGB image");
  nn::Tensor<float> t({1, 3, img.height(), img.width()});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) t.at(0, c, y, x) = img(x, y, c);
  return t;
}

// 0-255 luma, row-major.
inline std::vector<double> gray255(const RasterImage& img) {
  std::vector<double> g(img.pixel_count());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double v = img.channels() >= 3
                           ? 0.299 * img(x, y, 0) + 0.587 * img(x, y, 1) + 0.114 * img(x, y, 2)
                           : img(x, y, 0);
      g[static_cast<std::size_t>(y) * img.width() + x] = 255.0 * v;
    }
  return g;
}

inline std::vector<double> gaussian_1d(int n, double sigma) {
  std::vector<double> k(n);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double d = i - (n - 1) / 2.0;
    s += k[i] = std::exp(-d * d / (2 * sigma * sigma));
  }
  for (double& v : k) v /= s;
  return k;
}

// Valid-mode separable filter of a w x h plane.
inline std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace detail

// Mean absolute difference on the [0,1] scale over all channels.
inline double l1(const RasterImage& a, const RasterImage& b) {
  detail::check_pair(a, b);
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::abs(double(a.data()[i]) - b.data()[i]);
  return s / static_cast<double>(a.data().size());
}

// Mean squared difference on the 8-bit scale.
inline double mse255(const RasterImage& a, const RasterImage& b) {
  detail::check_pair(a, b);
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = 255.0 * (double(a.data()[i]) - b.data()[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.data().size());
}

inline double psnr_from_mse(double mse) {
  if (!(mse >= 0)) throw error(errc::invalid_argument, "mse must be nonnegative");
  if (mse == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

inline double psnr(const RasterImage& a, const RasterImage& b) { return psnr_from_mse(mse255(a, b)); }

// Mean SSIM over all valid 11x11 Gaussian windows of the 0-255 luma.
inline double ssim(const RasterImage& a, const RasterImage& b) {
  detail::check_pair(a, b);
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw error(errc::invalid_argument, "ssim needs at least an 11x11 image");
  }
  const int w = a.width(), h = a.height();
  const auto ga = detail::gray255(a), gb = detail::gray255(b);
  std::vector<double> aa(ga.size()), bb(ga.size()), ab(ga.size());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    aa[i] = ga[i] * ga[i];
    bb[i] = gb[i] * gb[i];
    ab[i] = ga[i] * gb[i];
  }
  const auto k = detail::gaussian_1d(kSsimWindow, kSsimSigma);
  const auto ma = detail::filter_valid(ga, w, h, k), mb = detail::filter_valid(gb, w, h, k);
  const auto saa = detail::filter_valid(aa, w, h, k), sbb = detail::filter_valid(bb, w, h, k);
  const auto sab = detail::filter_valid(ab, w, h, k);
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cov = sab[i] - ma[i] * mb[i];
    total += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) /
             ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(ma.size());
}

// Perceptual-proxy feature distance between two RGB images.
inline double perceptual(const RasterImage& a, const RasterImage& b) {
  detail::check_pair(a, b);
  nn::NoGrad guard;
  return nn::perceptual_distance(nn::Var<float>(detail::to_nchw(a)), nn::Var<float>(detail::to_nchw(b))).item();
}

// Pooled last-stage proxy features, one row per image.
inline Eigen::MatrixXd proxy_features(std::span<const RasterImage> images) {
  const auto& net = nn::PerceptualNet<float>::instance();
  Eigen::MatrixXd f(static_cast<Eigen::Index>(images.size()), nn::PerceptualNet<float>::kWidths[3]);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto e = net.embedding(detail::to_nchw(images[i]));
    for (Eigen::Index j = 0; j < f.cols(); ++j) f(static_cast<Eigen::Index>(i), j) = e[static_cast<std::size_t>(j)];
  }
  return f;
}

// Frechet distance between Gaussian fits of two feature sets (rows are
// samples). Both covariances get eps*I.
inline double fid_from_features(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps = kFidEps) {
  if (a.rows() < 2 || b.rows() < 2) throw error(errc::invalid_argument, "fid needs at least two samples per set");
  if (a.cols() != b.cols()) throw error(errc::shape_mismatch, "fid feature dimensions differ");
  const Eigen::Index d = a.cols();
  auto stats = [&](const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
    mu = x.colwise().mean().transpose();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
    cov += eps * Eigen::MatrixXd::Identity(d, d);
  };
  Eigen::VectorXd ma, mb;
  Eigen::MatrixXd ca, cb;
  stats(a, ma, ca);
  stats(b, mb, cb);
  // tr sqrt(Ca Cb) = tr sqrt(sqrt(Ca) Cb sqrt(Ca)), a symmetric PSD form.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(ca);
  const Eigen::MatrixXd sa =
      ea.eigenvectors() * ea.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * ea.eigenvectors().transpose();
  const Eigen::MatrixXd m = sa * cb * sa;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double v = (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, v);
}

inline double fid_proxy(std::span<const RasterImage> a, std::span<const RasterImage> b) {
  return fid_from_features(proxy_features(a), proxy_features(b));
}

}  // namespace hairsynth::metrics
