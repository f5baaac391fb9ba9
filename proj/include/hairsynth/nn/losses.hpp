#pragma once

#include <cmath>
#include <numbers>

#include "hairsynth/imagecore/morphology.hpp"
#include "hairsynth/nn/models.hpp"

namespace hairsynth::nn {

struct LossConfig {
  double w_l1 = 50.0;
  double w_adv = 1.0;
  double w_per = 0.1;
  // Stage-2 L1 gains. Set both to 0.5 for the down-weighting reading.
  double mask_gain = 1.5;
  double boundary_gain = 1.5;
  int morph_k = kBoundaryKernel;

  void validate() const {
    if (!(w_l1 > 0 && w_adv > 0 && w_per > 0 && mask_gain > 0 && boundary_gain > 0)) {
      throw error(errc::invalid_argument, "loss weights must be positive");
    }
    if (morph_k < 1) throw error(errc::invalid_argument, "morph_k");
  }
};

enum class L1Mode { stage1, stage2 };

// Per-pixel L1 weights, (n,1,h,w). Stage 1: 1 inside the mask, 0 outside.
// Stage 2: 1 outside, mask_gain in the mask, mask_gain*boundary_gain on the band.
template <class T>
Tensor<T> l1_weights(const Tensor<T>& mask, const Tensor<T>& band, const LossConfig& cfg, L1Mode mode) {
  if (mask.c() != 1) throw error(errc::shape_mismatch, "mask must have one channel");
  Tensor<T> w(mask.shape());
  if (mode == L1Mode::stage1) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] > T(0.5) ? T(1) : T(0);
    return w;
  }
  if (band.shape() != mask.shape()) throw error(errc::extent_mismatch, "band vs mask extent");
  const T gm = static_cast<T>(cfg.mask_gain), gb = static_cast<T>(cfg.mask_gain * cfg.boundary_gain);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = band[i] > T(0.5) ? gb : (mask[i] > T(0.5) ? gm : T(1));
  }
  return w;
}

// Stage 2: mean over all entries of w*|out-gt|. Stage 1: the same sum
// normalized by the supervised entries only.
template <class T>
Var<T> weighted_l1(const Var<T>& out, const Var<T>& gt, const Tensor<T>& mask, const Tensor<T>& band,
                   const LossConfig& cfg, L1Mode mode) {
  if (out.shape() != gt.shape()) throw error(errc::extent_mismatch, "weighted_l1 out vs gt");
  const Shape s = out.shape();
  if (mask.n() != s.n || mask.h() != s.h || mask.w() != s.w) {
    throw error(errc::extent_mismatch, "weighted_l1 mask extent");
  }
  const Tensor<T> w = l1_weights(mask, band, cfg, mode);
  Var<T> terms = mul_const(abs(sub(out, gt)), w);
  if (mode == L1Mode::stage2) return mean(terms);
  T count = 0;
  for (std::size_t i = 0; i < w.size(); ++i) count += w[i];
  if (count == 0) throw error(errc::empty_mask, "stage-1 L1 has no supervised pixels");
  return affine(sum(terms), T(1) / (count * static_cast<T>(s.c)), T(0));
}

template <class T>
struct AdversarialLosses {
  Var<T> d;  // discriminator objective
  Var<T> g;  // generator objective
};

// Vanilla cross-entropy patch GAN. The discriminator objective sees the fake
// detached; it averages the real and fake terms.
template <class T>
AdversarialLosses<T> adversarial_losses(const Discriminator<T>& disc, const Var<T>& cond,
                                        const Var<T>& real, const Var<T>& fake) {
  const Var<T> c = detach(cond);
  Var<T> real_term = bce_with_logits(disc.forward(c, real), T(1));
  Var<T> fake_term = bce_with_logits(disc.forward(c, detach(fake)), T(0));
  AdversarialLosses<T> out;
  out.d = affine(add(real_term, fake_term), T(0.5), T(0));
  out.g = bce_with_logits(disc.forward(cond, fake), T(1));
  return out;
}

template <class T>
struct LossTerms {
  Var<T> total;
  double l1 = 0, adv = 0, per = 0;
};

// w_l1 * L1 + w_adv * L_adv + w_per * L_per for the generator. Images in
// [0,1]; adv_g is the generator-side adversarial term.
template <class T>
LossTerms<T> total_loss(const Var<T>& l1, const Var<T>& adv_g, const Var<T>& per, const LossConfig& cfg) {
  LossTerms<T> t;
  t.l1 = static_cast<double>(l1.item());
  t.adv = static_cast<double>(adv_g.item());
  t.per = static_cast<double>(per.item());
  t.total = add(add(affine(l1, static_cast<T>(cfg.w_l1), T(0)), affine(adv_g, static_cast<T>(cfg.w_adv), T(0))),
                affine(per, static_cast<T>(cfg.w_per), T(0)));
  return t;
}

}  // namespace hairsynth::nn
