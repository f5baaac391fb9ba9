#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <vector>

#include "hairsynth/common/binary_io.hpp"
#include "hairsynth/nn/models.hpp"

namespace hairsynth::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg.lr > 0)) throw error(errc::invalid_argument, "Adam lr must be positive");
    for (const auto& p : params_) {
      m_.emplace_back(p.var.value().size(), T(0));
      v_.emplace_back(p.var.value().size(), T(0));
    }
  }

  void set_lr(double lr) {
    if (!(lr > 0)) throw error(errc::invalid_argument, "Adam lr must be positive");
    cfg_.lr = lr;
  }
  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return t_; }
  ParamList<T>& params() { return params_; }

  void zero_grad() { zero_grads(params_); }

  void step() {
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const T step = static_cast<T>(cfg_.lr / c1);
    const T rc2 = static_cast<T>(1.0 / std::sqrt(c2));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Var<T>& p = params_[k].var;
      if (!p.has_grad()) continue;
      Tensor<T>& x = p.mutable_value();
      const Tensor<T>& g = p.grad();
      std::vector<T>& m = m_[k];
      std::vector<T>& v = v_[k];
      for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = static_cast<T>(b1) * m[i] + static_cast<T>(1 - b1) * g[i];
        v[i] = static_cast<T>(b2) * v[i] + static_cast<T>(1 - b2) * g[i] * g[i];
        x[i] -= step * m[i] / (std::sqrt(v[i]) * rc2 + static_cast<T>(cfg_.eps));
      }
      require_finite(x, "adam_step");
    }
  }

  void write_state(std::ostream& os) const {
    binio::write<std::uint64_t>(os, static_cast<std::uint64_t>(t_));
    for (double v : {cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps}) binio::write<double>(os, v);
    binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(m_.size()));
    for (std::size_t k = 0; k < m_.size(); ++k) {
      binio::write<std::uint64_t>(os, m_[k].size());
      write_values(os, m_[k]);
      write_values(os, v_[k]);
    }
  }

  void read_state(std::istream& is) {
    t_ = static_cast<long>(binio::read<std::uint64_t>(is));
    for (double* v : {&cfg_.lr, &cfg_.beta1, &cfg_.beta2, &cfg_.eps}) *v = binio::read<double>(is);
    if (binio::read<std::uint32_t>(is) != m_.size()) throw error(errc::decode, "optimizer slot count");
    for (std::size_t k = 0; k < m_.size(); ++k) {
      if (binio::read<std::uint64_t>(is) != m_[k].size()) throw error(errc::decode, "optimizer slot size");
      read_values(is, m_[k]);
      read_values(is, v_[k]);
    }
  }

 private:
  static void write_values(std::ostream& os, const std::vector<T>& v) {
    for (T x : v) binio::write<float>(os, static_cast<float>(x));
  }
  static void read_values(std::istream& is, std::vector<T>& v) {
    for (T& x : v) x = static_cast<T>(binio::read<float>(is));
  }

  ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_, v_;
  long t_ = 0;
};

}  // namespace hairsynth::nn
