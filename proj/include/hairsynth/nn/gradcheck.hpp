#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hairsynth/nn/autodiff.hpp"

namespace hairsynth::nn {

struct GradCheckResult {
  double rel_error = 0;
  std::size_t checked = 0;
};

// Compares reverse-mode gradients of f(inputs) against central differences.
// At most max_coords coordinates per input are probed, chosen by stride.
inline GradCheckResult gradcheck(const std::function<Var<double>(std::vector<Var<double>>&)>& f,
                                 std::vector<Var<double>> inputs, double eps = 1e-6,
                                 std::size_t max_coords = 256) {
  for (auto& in : inputs) in.zero_grad();
  Var<double> y = f(inputs);
  backward(y);
  double diff2 = 0, na = 0, nf = 0;
  GradCheckResult r;
  for (auto& in : inputs) {
    if (!in.requires_grad()) continue;
    const Tensor<double> ga = in.grad();
    Tensor<double>& x = in.mutable_value();
    const std::size_t n = x.size();
    const std::size_t stride = std::max<std::size_t>(1, n / max_coords);
    for (std::size_t i = 0; i < n; i += stride) {
      const double orig = x[i];
      double fp, fm;
      {
        NoGrad ng;
        x[i] = orig + eps;
        fp = f(inputs).item();
        x[i] = orig - eps;
        fm = f(inputs).item();
      }
      x[i] = orig;
      const double g = (fp - fm) / (2 * eps);
      diff2 += (ga[i] - g) * (ga[i] - g);
      na += ga[i] * ga[i];
      nf += g * g;
      ++r.checked;
    }
  }
  r.rel_error = std::sqrt(diff2) / std::max(std::sqrt(na) + std::sqrt(nf), 1e-12);
  return r;
}

}  // namespace hairsynth::nn
