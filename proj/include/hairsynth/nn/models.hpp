#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hairsynth/nn/ops.hpp"

namespace hairsynth::nn {

template <class T>
Var<T> detach(const Var<T>& x) {
  return Var<T>(x.value());
}

template <class T>
struct NamedParam {
  std::string name;
  Var<T> var;
};

template <class T>
using ParamList = std::vector<NamedParam<T>>;

template <class T>
std::size_t parameter_count(const ParamList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var.value().size();
  return n;
}

template <class T>
void zero_grads(ParamList<T>& params) {
  for (auto& p : params) p.var.zero_grad();
}

enum class Init { normal_002, he };

template <class T>
struct Conv {
  Var<T> w, b;
  int stride = 1, pad = 0;
  bool transposed = false;

  static Conv make(int cin, int cout, int k, int stride, int pad, bool transposed, Rng& rng,
                   Init init, bool trainable = true) {
    const double fan_in = static_cast<double>(cin) * k * k;
    const double stddev = init == Init::he ? std::sqrt(2.0 / fan_in) : 0.02;
    const Shape ws = transposed ? Shape{cin, cout, k, k} : Shape{cout, cin, k, k};
    Conv c;
    c.w = Var<T>(random_normal<T>(ws, rng, stddev), trainable);
    c.b = Var<T>(Tensor<T>({1, cout, 1, 1}), trainable);
    c.stride = stride;
    c.pad = pad;
    c.transposed = transposed;
    return c;
  }

  Var<T> operator()(const Var<T>& x) const {
    return transposed ? conv_transpose2d(x, w, b, stride, pad) : conv2d(x, w, b, stride, pad);
  }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".w", w});
    out.push_back({prefix + ".b", b});
  }
};

template <class T>
struct Norm {
  Var<T> gamma, beta;

  static Norm make(int channels, Rng& rng, Init init) {
    Norm n;
    Tensor<T> g({1, channels, 1, 1}, T(1));
    if (init == Init::normal_002) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<T>(1.0 + 0.02 * rng.normal());
    }
    n.gamma = Var<T>(std::move(g), true);
    n.beta = Var<T>(Tensor<T>({1, channels, 1, 1}), true);
    return n;
  }

  Var<T> operator()(const Var<T>& x) const { return instance_norm(x, gamma, beta); }

  void collect(ParamList<T>& out, const std::string& prefix) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
  }
};

inline constexpr double kLeakySlope = 0.2;

struct GeneratorConfig {
  int in_channels = 5;
  int base_width = 16;
  int depth = 4;
  bool skip = true;
  Init init = Init::normal_002;

  void validate() const {
    if (in_channels < 1) throw error(errc::invalid_argument, "generator in_channels");
    if (base_width < 1) throw error(errc::invalid_argument, "generator base_width");
    if (depth < 3) throw error(errc::invalid_argument, "generator depth must be >= 3");
  }

  // Channels at encoder level l (1-based); capped at 8x base.
  int level_channels(int l) const { return base_width * (1 << std::min(l - 1, 3)); }

  std::uint64_t digest() const {
    const std::uint64_t v[] = {std::uint64_t(in_channels), std::uint64_t(base_width),
                               std::uint64_t(depth), std::uint64_t(skip), std::uint64_t(init)};
    return fnv1a64(v, sizeof v);
  }
};

// Encoder-decoder with per-level skips. Encoder: 4x4 stride-2 convs with
// instance norm (not on the first level) and leaky ReLU. Decoder: 4x4
// stride-2 transposed convs with norm and ReLU, each followed by the encoder
// features of the same resolution. The full-resolution decoder output is
// concatenated with the raw input and refined by a 3x3 conv into tanh RGB.
template <class T>
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed);
    const int d = cfg.depth;
    int cin = cfg.in_channels;
    for (int l = 1; l <= d; ++l) {
      const int cout = cfg.level_channels(l);
      enc_.push_back(Conv<T>::make(cin, cout, 4, 2, 1, false, rng, cfg.init));
      enc_norm_.push_back(Norm<T>::make(cout, rng, cfg.init));
      cin = cout;
    }
    for (int l = d - 1; l >= 0; --l) {
      const int cout = l >= 1 ? cfg.level_channels(l) : cfg.base_width;
      dec_.push_back(Conv<T>::make(cin, cout, 4, 2, 1, true, rng, cfg.init));
      dec_norm_.push_back(Norm<T>::make(cout, rng, cfg.init));
      const int skip_ch = l >= 1 ? cfg.level_channels(l) : cfg.in_channels;
      cin = cout + (cfg.skip ? skip_ch : 0);
    }
    head_ = Conv<T>::make(cin, 3, 3, 1, 1, false, rng, cfg.init);
  }

  const GeneratorConfig& config() const { return cfg_; }

  // x: (n, in_channels, H, W) in [-1, 1]; returns (n, 3, H, W) in [-1, 1].
  Var<T> forward(const Var<T>& x) const {
    const Shape s = x.shape();
    const int d = cfg_.depth;
    if (s.c != cfg_.in_channels) {
      throw error(errc::shape_mismatch, "generator expects " + std::to_string(cfg_.in_channels) +
                                            " channels, got " + s.str());
    }
    if (s.h != s.w || s.h < (1 << d) || (s.h & (s.h - 1)) != 0) {
      throw error(errc::shape_mismatch, "generator input must be square, a power of two, >= 2^depth: " +
                                            s.str());
    }
    std::vector<Var<T>> feats{x};
    Var<T> h = x;
    for (int l = 1; l <= d; ++l) {
      h = enc_[l - 1](h);
      if (l > 1) h = enc_norm_[l - 1](h);
      h = leaky_relu(h, static_cast<T>(kLeakySlope));
      feats.push_back(h);
    }
    for (int i = 0; i < d; ++i) {
      const int l = d - 1 - i;
      h = relu(dec_norm_[i](dec_[i](h)));
      if (cfg_.skip) h = concat(h, feats[l]);
    }
    return tanh(head_(h));
  }

  ParamList<T> params() const {
    ParamList<T> out;
    for (std::size_t i = 0; i < enc_.size(); ++i) {
      enc_[i].collect(out, "enc" + std::to_string(i));
      // The first level has no norm; its affine is kept out of the list.
      if (i > 0) enc_norm_[i].collect(out, "enc" + std::to_string(i) + ".norm");
    }
    for (std::size_t i = 0; i < dec_.size(); ++i) {
      dec_[i].collect(out, "dec" + std::to_string(i));
      dec_norm_[i].collect(out, "dec" + std::to_string(i) + ".norm");
    }
    head_.collect(out, "head");
    return out;
  }

 private:
  GeneratorConfig cfg_;
  std::vector<Conv<T>> enc_, dec_;
  std::vector<Norm<T>> enc_norm_, dec_norm_;
  Conv<T> head_;
};

struct DiscriminatorConfig {
  int cond_channels = 5;
  int base_width = 16;
  int depth = 4;
  Init init = Init::normal_002;

  void validate() const {
    if (cond_channels < 1 || base_width < 1 || depth < 1) {
      throw error(errc::invalid_argument, "discriminator config");
    }
  }
  std::uint64_t digest() const {
    const std::uint64_t v[] = {std::uint64_t(cond_channels), std::uint64_t(base_width),
                               std::uint64_t(depth), std::uint64_t(init)};
    return fnv1a64(v, sizeof v);
  }
};

// Conditional patch discriminator: (condition ++ image) through stride-2
// 4x4 convs, then a 3x3 conv to one logit per patch.
template <class T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    Rng rng(seed);
    int cin = cfg.cond_channels + 3;
    for (int l = 1; l <= cfg.depth; ++l) {
      const int cout = cfg.base_width * (1 << std::min(l - 1, 3));
      convs_.push_back(Conv<T>::make(cin, cout, 4, 2, 1, false, rng, cfg.init));
      norms_.push_back(Norm<T>::make(cout, rng, cfg.init));
      cin = cout;
    }
    head_ = Conv<T>::make(cin, 1, 3, 1, 1, false, rng, cfg.init);
  }

  const DiscriminatorConfig& config() const { return cfg_; }

  Var<T> forward(const Var<T>& cond, const Var<T>& img) const {
    const Shape cs = cond.shape(), is = img.shape();
    if (cs.c != cfg_.cond_channels || is.c != 3 || cs.n != is.n || cs.h != is.h || cs.w != is.w) {
      throw error(errc::shape_mismatch, "discriminator inputs " + cs.str() + " and " + is.str());
    }
    if (cs.h % (1 << cfg_.depth) != 0 || cs.w % (1 << cfg_.depth) != 0) {
      throw error(errc::shape_mismatch, "discriminator input not divisible by 2^depth");
    }
    Var<T> h = concat(cond, img);
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i](h);
      if (i > 0) h = norms_[i](h);
      h = leaky_relu(h, static_cast<T>(kLeakySlope));
    }
    return head_(h);
  }

  ParamList<T> params() const {
    ParamList<T> out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].collect(out, "conv" + std::to_string(i));
      if (i > 0) norms_[i].collect(out, "conv" + std::to_string(i) + ".norm");
    }
    head_.collect(out, "head");
    return out;
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<Conv<T>> convs_;
  std::vector<Norm<T>> norms_;
  Conv<T> head_;
};

inline constexpr std::uint64_t kPerceptualSeed = 0x5eed'f00d'cafe'0001ULL;

// Frozen feature network standing in for a pretrained classifier. Four
// stages of two 3x3 convs (8, 16, 32, 64 channels), leaky ReLU, stride 2 on
// the first conv of stages 2-4, He-normal weights from a fixed seed.
template <class T>
class PerceptualNet {
 public:
  static constexpr int kStages = 4;
  static constexpr int kLossStages = 3;
  static constexpr int kWidths[kStages] = {8, 16, 32, 64};

  PerceptualNet() {
    Rng rng(kPerceptualSeed);
    int cin = 3;
    for (int s = 0; s < kStages; ++s) {
      layers_.push_back(Conv<T>::make(cin, kWidths[s], 3, s == 0 ? 1 : 2, 1, false, rng, Init::he, false));
      layers_.push_back(Conv<T>::make(kWidths[s], kWidths[s], 3, 1, 1, false, rng, Init::he, false));
      cin = kWidths[s];
    }
  }

  // img in [0,1], (n,3,h,w). Returns the output of the first `stages` stages.
  std::vector<Var<T>> features(const Var<T>& img, int stages = kStages) const {
    if (img.shape().c != 3) throw error(errc::shape_mismatch, "perceptual net wants RGB");
    std::vector<Var<T>> out;
    Var<T> h = affine(img, T(2), T(-1));
    for (int s = 0; s < stages; ++s) {
      h = leaky_relu(layers_[2 * s](h), static_cast<T>(kLeakySlope));
      h = leaky_relu(layers_[2 * s + 1](h), static_cast<T>(kLeakySlope));
      out.push_back(h);
    }
    return out;
  }

  // Globally pooled last-stage features, (n, 64, 1, 1).
  Tensor<T> embedding(const Tensor<T>& img) const {
    NoGrad guard;
    return global_avg_pool(features(Var<T>(img)).back()).value();
  }

  static const PerceptualNet& instance() {
    static const PerceptualNet net;
    return net;
  }

 private:
  std::vector<Conv<T>> layers_;
};

// Sum over the first three proxy stages of the mean squared feature
// difference. Images in [0,1].
template <class T>
Var<T> perceptual_distance(const Var<T>& a, const Var<T>& b,
                           const PerceptualNet<T>& net = PerceptualNet<T>::instance()) {
  if (a.shape() != b.shape()) {
    throw error(errc::shape_mismatch, "perceptual_distance " + a.shape().str() + " vs " + b.shape().str());
  }
  const auto fa = net.features(a, PerceptualNet<T>::kLossStages);
  const auto fb = net.features(b, PerceptualNet<T>::kLossStages);
  Var<T> total = mse(fa[0], fb[0]);
  for (int s = 1; s < PerceptualNet<T>::kLossStages; ++s) total = add(total, mse(fa[s], fb[s]));
  return total;
}

}  // namespace hairsynth::nn
