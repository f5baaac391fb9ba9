#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hairsynth/nn/gradcheck.hpp"
#include "hairsynth/nn/losses.hpp"

namespace hairsynth::gradcases {

using nn::Shape;
using nn::Tensor;
using V = nn::Var<double>;

struct GradCase {
  std::string name;
  std::function<nn::GradCheckResult(std::uint64_t seed)> run;
};

inline V param(Shape s, Rng& rng, double lo = -1, double hi = 1) {
  return V(nn::random_uniform<double>(s, rng, lo, hi), true);
}

inline Tensor<double> binary_map(Shape s, Rng& rng, double p = 0.5) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform() < p ? 1.0 : 0.0;
  return t;
}

// Reduces a tensor to a scalar through a fixed random projection, so every
// output coordinate contributes with a distinct weight.
inline V project(const V& y, std::uint64_t seed) {
  Rng rng(seed ^ 0xabcdef);
  return nn::sum(nn::mul_const(y, nn::random_uniform<double>(y.shape(), rng, -1, 1)));
}

inline nn::GradCheckResult check(std::vector<V> inputs,
                                 std::function<V(std::vector<V>&)> f) {
  return nn::gradcheck(f, std::move(inputs));
}

inline std::vector<GradCase> gradient_cases() {
  using namespace nn;
  std::vector<GradCase> c;
  auto conv_case = [](int k, int s, int p) {
    return [k, s, p](std::uint64_t seed) {
      Rng rng(seed);
      return check({param({2, 3, 7, 6}, rng), param({4, 3, k, k}, rng), param({1, 4, 1, 1}, rng)},
                   [=](std::vector<V>& in) { return project(conv2d(in[0], in[1], in[2], s, p), seed); });
    };
  };
  c.push_back({"conv2d k3 s1 p1", conv_case(3, 1, 1)});
  c.push_back({"conv2d k4 s2 p1", conv_case(4, 2, 1)});
  c.push_back({"conv2d k3 s2 p0", conv_case(3, 2, 0)});
  c.push_back({"conv_transpose2d k4 s2 p1", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return check({param({2, 3, 4, 5}, rng), param({3, 2, 4, 4}, rng), param({1, 2, 1, 1}, rng)},
                              [seed](std::vector<V>& in) {
                                return project(conv_transpose2d(in[0], in[1], in[2], 2, 1), seed);
                              });
               }});
  auto unary_case = [](std::function<V(const V&)> op) {
    return [op](std::uint64_t seed) {
      Rng rng(seed);
      return check({param({2, 2, 3, 4}, rng, -2, 2)},
                   [op, seed](std::vector<V>& in) { return project(op(in[0]), seed); });
    };
  };
  c.push_back({"leaky_relu", unary_case([](const V& x) { return leaky_relu(x, 0.2); })});
  c.push_back({"relu", unary_case([](const V& x) { return relu(x); })});
  c.push_back({"tanh", unary_case([](const V& x) { return nn::tanh(x); })});
  c.push_back({"abs", unary_case([](const V& x) { return nn::abs(x); })});
  c.push_back({"square", unary_case([](const V& x) { return square(x); })});
  c.push_back({"affine", unary_case([](const V& x) { return affine(x, -1.7, 0.3); })});
  c.push_back({"global_avg_pool", unary_case([](const V& x) { return global_avg_pool(x); })});
  c.push_back({"mean", unary_case([](const V& x) { return affine(mean(square(x)), 3.0, 0.0); })});
  auto pair_case = [](std::function<V(const V&, const V&)> op, Shape sb) {
    return [op, sb](std::uint64_t seed) {
      Rng rng(seed);
      return check({param({2, 2, 3, 4}, rng), param(sb, rng)},
                   [op, seed](std::vector<V>& in) { return project(op(in[0], in[1]), seed); });
    };
  };
  c.push_back({"add", pair_case([](const V& a, const V& b) { return add(a, b); }, {2, 2, 3, 4})});
  c.push_back({"sub", pair_case([](const V& a, const V& b) { return sub(a, b); }, {2, 2, 3, 4})});
  c.push_back({"mul", pair_case([](const V& a, const V& b) { return mul(a, b); }, {2, 2, 3, 4})});
  c.push_back({"concat", pair_case([](const V& a, const V& b) { return concat(a, b); }, {2, 3, 3, 4})});
  c.push_back({"mse", pair_case([](const V& a, const V& b) { return mse(a, b); }, {2, 2, 3, 4})});
  c.push_back({"mul_const broadcast", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const Tensor<double> m = random_uniform<double>({2, 1, 3, 4}, rng, -1, 1);
                 return check({param({2, 3, 3, 4}, rng)},
                              [m, seed](std::vector<V>& in) { return project(mul_const(in[0], m), seed); });
               }});
  c.push_back({"instance_norm", [](std::uint64_t seed) {
                 Rng rng(seed);
                 return check({param({2, 3, 4, 4}, rng, -2, 2), param({1, 3, 1, 1}, rng), param({1, 3, 1, 1}, rng)},
                              [seed](std::vector<V>& in) { return project(instance_norm(in[0], in[1], in[2]), seed); });
               }});
  auto bce_case = [](double target) {
    return [target](std::uint64_t seed) {
      Rng rng(seed);
      return check({param({2, 1, 3, 3}, rng, -4, 4)},
                   [target](std::vector<V>& in) { return bce_with_logits(in[0], target); });
    };
  };
  c.push_back({"bce_with_logits real", bce_case(1.0)});
  c.push_back({"bce_with_logits fake", bce_case(0.0)});
  auto l1_case = [](L1Mode mode) {
    return [mode](std::uint64_t seed) {
      Rng rng(seed);
      const Tensor<double> mask = binary_map({2, 1, 5, 5}, rng, 0.6);
      const Tensor<double> band = binary_map({2, 1, 5, 5}, rng, 0.3);
      const V gt(random_uniform<double>({2, 3, 5, 5}, rng, 0, 1));
      return check({param({2, 3, 5, 5}, rng, 0, 1)}, [=](std::vector<V>& in) {
        return weighted_l1(in[0], gt, mask, band, LossConfig{}, mode);
      });
    };
  };
  c.push_back({"loss: weighted_l1 stage 1", l1_case(L1Mode::stage1)});
  c.push_back({"loss: weighted_l1 stage 2", l1_case(L1Mode::stage2)});
  c.push_back({"loss: perceptual_distance", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const V b(random_uniform<double>({1, 3, 16, 16}, rng, 0, 1));
                 return check({param({1, 3, 16, 16}, rng, 0, 1)},
                              [b](std::vector<V>& in) { return perceptual_distance(in[0], b); });
               }});
  // Toy two-layer conditional discriminator: one stride-2 conv plus the head.
  c.push_back({"loss: adversarial (D side, toy D params)", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const Discriminator<double> d({.cond_channels = 2, .base_width = 3, .depth = 1, .init = Init::he}, seed);
                 const V cond(random_uniform<double>({2, 2, 8, 8}, rng, -1, 1));
                 const V real(random_uniform<double>({2, 3, 8, 8}, rng, 0, 1));
                 const V fake(random_uniform<double>({2, 3, 8, 8}, rng, 0, 1));
                 std::vector<V> params;
                 for (auto& p : d.params()) params.push_back(p.var);
                 return check(params, [&](std::vector<V>&) { return adversarial_losses(d, cond, real, fake).d; });
               }});
  c.push_back({"loss: adversarial (G side, fake image)", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Discriminator<double> d({.cond_channels = 2, .base_width = 3, .depth = 1, .init = Init::he}, seed);
                 for (auto& p : d.params()) p.var.node()->requires_grad = false;
                 const V cond(random_uniform<double>({2, 2, 8, 8}, rng, -1, 1));
                 const V real(random_uniform<double>({2, 3, 8, 8}, rng, 0, 1));
                 return check({param({2, 3, 8, 8}, rng, 0, 1)},
                              [&](std::vector<V>& in) { return adversarial_losses(d, cond, real, in[0]).g; });
               }});
  c.push_back({"loss: total", [](std::uint64_t seed) {
                 Rng rng(seed);
                 Discriminator<double> d({.cond_channels = 2, .base_width = 3, .depth = 1, .init = Init::he}, seed);
                 for (auto& p : d.params()) p.var.node()->requires_grad = false;
                 const V cond(random_uniform<double>({1, 2, 16, 16}, rng, -1, 1));
                 const V gt(random_uniform<double>({1, 3, 16, 16}, rng, 0, 1));
                 const Tensor<double> mask = binary_map({1, 1, 16, 16}, rng, 0.5);
                 const Tensor<double> band = binary_map({1, 1, 16, 16}, rng, 0.2);
                 return check({param({1, 3, 16, 16}, rng, 0, 1)}, [&](std::vector<V>& in) {
                   const LossConfig lc;
                   auto l1 = weighted_l1(in[0], gt, mask, band, lc, L1Mode::stage2);
                   auto adv = adversarial_losses(d, cond, gt, in[0]);
                   return total_loss(l1, adv.g, perceptual_distance(in[0], gt), lc).total;
                 });
               }});
  c.push_back({"generator (params and input)", [](std::uint64_t seed) {
                 Rng rng(seed);
                 const Generator<double> g({.in_channels = 2, .base_width = 2, .depth = 3, .skip = true, .init = Init::he}, seed);
                 std::vector<V> in{param({1, 2, 16, 16}, rng)};
                 for (auto& p : g.params()) in.push_back(p.var);
                 return check(in, [&g, seed](std::vector<V>& v) { return project(g.forward(v[0]), seed); });
               }});
  return c;
}

}  // namespace hairsynth::gradcases
