#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "hairsynth/nn/autodiff.hpp"

namespace hairsynth::nn {

namespace detail {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

// Sliding-window geometry over a (channels, h, w) grid.
struct ConvGeom {
  int channels, h, w, k, stride, pad, ho, wo;

  static ConvGeom make(int channels, int h, int w, int k, int stride, int pad) {
    if (k < 1 || stride < 1 || pad < 0) throw error(errc::invalid_argument, "conv geometry");
    const int ho = (h + 2 * pad - k) / stride + 1;
    const int wo = (w + 2 * pad - k) / stride + 1;
    if (h + 2 * pad < k || w + 2 * pad < k || ho < 1 || wo < 1) {
      throw error(errc::shape_mismatch, "input smaller than kernel");
    }
    return {channels, h, w, k, stride, pad, ho, wo};
  }
  int rows() const { return channels * k * k; }
  int cols() const { return ho * wo; }
};

template <class T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
  const int n = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = cols + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * n;
        for (int oy = 0; oy < g.ho; ++oy) {
          T* dst = row + oy * g.wo;
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back onto the grid.
template <class T>
void col2im(const T* cols, const ConvGeom& g, T* x) {
  const int n = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * n;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + oy * g.wo;
          T* dst = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
void add_bias(T* out, const T* bias, int channels, std::size_t plane) {
  for (int c = 0; c < channels; ++c) {
    T* p = out + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
  }
}

template <class T>
void accumulate_bias_grad(const T* gy, T* gb, int channels, std::size_t plane) {
  for (int c = 0; c < channels; ++c) {
    const T* p = gy + c * plane;
    T s = 0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    gb[c] += s;
  }
}

template <class T>
Tensor<T>* grad_of(Node<T>& self, std::size_t i) {
  Node<T>& p = *self.parents[i];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

}  // namespace detail

// Convolution. w: (cout, cin, k, k); b: (1, cout, 1, 1) or undefined.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  if (ws.h != ws.w || ws.c != xs.c) {
    throw error(errc::shape_mismatch, "conv2d weight " + ws.str() + " for input " + xs.str());
  }
  if (b.defined() && b.value().size() != static_cast<std::size_t>(ws.n)) {
    throw error(errc::shape_mismatch, "conv2d bias");
  }
  const auto g = detail::ConvGeom::make(xs.c, xs.h, xs.w, ws.h, stride, pad);
  const int cout = ws.n, K = g.rows(), P = g.cols();
  Tensor<T> out({xs.n, cout, g.ho, g.wo});
  const bool record = grad_enabled() && (x.requires_grad() || w.requires_grad() ||
                                         (b.defined() && b.requires_grad()));
  auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(K) * P * (record ? xs.n : 1));
  detail::CMapR<T> W(w.value().data(), cout, K);
  for (int n = 0; n < xs.n; ++n) {
    T* cn = cols->data() + (record ? static_cast<std::size_t>(n) * K * P : 0);
    detail::im2col(x.value().sample(n), g, cn);
    detail::MapR<T> Y(out.sample(n), cout, P);
    Y.noalias() = W * detail::CMapR<T>(cn, K, P);
    if (b.defined()) detail::add_bias(out.sample(n), b.value().data(), cout, static_cast<std::size_t>(P));
  }
  require_finite(out, "conv2d");
  Var<T> bb = b.defined() ? b : Var<T>(Tensor<T>());
  return Var<T>::make(std::move(out), {x, w, bb}, [g, cols, cout, K, P, xs](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* gx = detail::grad_of(self, 0);
    Tensor<T>* gw = detail::grad_of(self, 1);
    Tensor<T>* gb = detail::grad_of(self, 2);
    const Tensor<T>& W = self.parents[1]->value;
    std::vector<T> dcols(gx ? static_cast<std::size_t>(K) * P : 0);
    for (int n = 0; n < xs.n; ++n) {
      detail::CMapR<T> GY(self.grad.sample(n), cout, P);
      const T* cn = cols->data() + static_cast<std::size_t>(n) * K * P;
      if (gw) detail::MapR<T>(gw->data(), cout, K).noalias() += GY * detail::CMapR<T>(cn, K, P).transpose();
      if (gb) detail::accumulate_bias_grad(self.grad.sample(n), gb->data(), cout, static_cast<std::size_t>(P));
      if (gx) {
        detail::MapR<T>(dcols.data(), K, P).noalias() =
            detail::CMapR<T>(W.data(), cout, K).transpose() * GY;
        detail::col2im(dcols.data(), g, gx->sample(n));
      }
    }
  });
}

// Transposed convolution, the adjoint of conv2d. w: (cin, cout, k, k).
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  if (ws.h != ws.w || ws.n != xs.c) {
    throw error(errc::shape_mismatch, "conv_transpose2d weight " + ws.str() + " for input " + xs.str());
  }
  const int cout = ws.c, k = ws.h;
  const int ho = (xs.h - 1) * stride - 2 * pad + k;
  const int wo = (xs.w - 1) * stride - 2 * pad + k;
  if (ho < 1 || wo < 1) throw error(errc::shape_mismatch, "conv_transpose2d output empty");
  const auto g = detail::ConvGeom::make(cout, ho, wo, k, stride, pad);
  if (g.ho != xs.h || g.wo != xs.w) throw error(errc::shape_mismatch, "conv_transpose2d geometry");
  if (b.defined() && b.value().size() != static_cast<std::size_t>(cout)) {
    throw error(errc::shape_mismatch, "conv_transpose2d bias");
  }
  const int cin = xs.c, K = g.rows(), P = g.cols();
  Tensor<T> out({xs.n, cout, ho, wo});
  std::vector<T> cols(static_cast<std::size_t>(K) * P);
  detail::CMapR<T> W(w.value().data(), cin, K);
  for (int n = 0; n < xs.n; ++n) {
    detail::MapR<T>(cols.data(), K, P).noalias() =
        W.transpose() * detail::CMapR<T>(x.value().sample(n), cin, P);
    detail::col2im(cols.data(), g, out.sample(n));
    if (b.defined()) {
      detail::add_bias(out.sample(n), b.value().data(), cout, static_cast<std::size_t>(ho) * wo);
    }
  }
  require_finite(out, "conv_transpose2d");
  Var<T> bb = b.defined() ? b : Var<T>(Tensor<T>());
  return Var<T>::make(std::move(out), {x, w, bb}, [g, cin, cout, K, P, xs](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* gx = detail::grad_of(self, 0);
    Tensor<T>* gw = detail::grad_of(self, 1);
    Tensor<T>* gb = detail::grad_of(self, 2);
    const Tensor<T>& X = self.parents[0]->value;
    const Tensor<T>& W = self.parents[1]->value;
    std::vector<T> dcols(static_cast<std::size_t>(K) * P);
    for (int n = 0; n < xs.n; ++n) {
      detail::im2col(self.grad.sample(n), g, dcols.data());
      detail::CMapR<T> DC(dcols.data(), K, P);
      if (gx) {
        detail::MapR<T>(gx->sample(n), cin, P).noalias() += detail::CMapR<T>(W.data(), cin, K) * DC;
      }
      if (gw) {
        detail::MapR<T>(gw->data(), cin, K).noalias() +=
            detail::CMapR<T>(X.sample(n), cin, P) * DC.transpose();
      }
      if (gb) {
        detail::accumulate_bias_grad(self.grad.sample(n), gb->data(), cout,
                                     static_cast<std::size_t>(g.h) * g.w);
      }
    }
  });
}

namespace detail {

// Elementwise unary op: f gives the value, df the derivative from (x, y).
template <class T, class F, class DF>
Var<T> unary(const Var<T>& x, const char* name, F f, DF df) {
  Tensor<T> out(x.shape());
  const Tensor<T>& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  require_finite(out, name);
  return Var<T>::make(std::move(out), {x}, [df](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* gx = grad_of(self, 0);
    if (!gx) return;
    const Tensor<T>& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

}  // namespace detail

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return detail::unary(
      x, "leaky_relu", [slope](T v) { return v > 0 ? v : slope * v; },
      [slope](T v, T) { return v > 0 ? T(1) : slope; });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return detail::unary(
      x, "relu", [](T v) { return v > 0 ? v : T(0); }, [](T v, T) { return v > 0 ? T(1) : T(0); });
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return detail::unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> abs(const Var<T>& x) {
  return detail::unary(
      x, "abs", [](T v) { return std::abs(v); },
      [](T v, T) { return v > 0 ? T(1) : (v < 0 ? T(-1) : T(0)); });
}

template <class T>
Var<T> square(const Var<T>& x) {
  return detail::unary(
      x, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

// a*x + b
template <class T>
Var<T> affine(const Var<T>& x, T a, T b) {
  return detail::unary(
      x, "affine", [a, b](T v) { return a * v + b; }, [a](T, T) { return a; });
}

namespace detail {

template <class T>
Var<T> binary(const Var<T>& a, const Var<T>& b, T sa, T sb, const char* name) {
  require_shape(b.value(), a.shape(), name);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sa * a.value()[i] + sb * b.value()[i];
  require_finite(out, name);
  return Var<T>::make(std::move(out), {a, b}, [sa, sb](Node<T>& self) {
    if (self.grad.empty()) return;
    if (Tensor<T>* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += sa * self.grad[i];
    }
    if (Tensor<T>* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += sb * self.grad[i];
    }
  });
}

}  // namespace detail

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return detail::binary(a, b, T(1), T(1), "add");
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return detail::binary(a, b, T(1), T(-1), "sub");
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_shape(b.value(), a.shape(), "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  require_finite(out, "mul");
  return Var<T>::make(std::move(out), {a, b}, [](Node<T>& self) {
    if (self.grad.empty()) return;
    const Tensor<T>& av = self.parents[0]->value;
    const Tensor<T>& bv = self.parents[1]->value;
    if (Tensor<T>* ga = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += bv[i] * self.grad[i];
    }
    if (Tensor<T>* gb = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += av[i] * self.grad[i];
    }
  });
}

// Multiply by a constant tensor. m matches x or has one channel (broadcast
// across channels).
template <class T>
Var<T> mul_const(const Var<T>& x, const Tensor<T>& m) {
  const Shape xs = x.shape(), ms = m.shape();
  if (ms.n != xs.n || ms.h != xs.h || ms.w != xs.w || (ms.c != xs.c && ms.c != 1)) {
    throw error(errc::shape_mismatch, "mul_const " + ms.str() + " onto " + xs.str());
  }
  const bool bcast = ms.c != xs.c;
  auto mi = [bcast, xs](std::size_t i) {
    if (!bcast) return i;
    const std::size_t plane = xs.plane(), per = plane * xs.c;
    return (i / per) * plane + i % plane;
  };
  Tensor<T> out(xs);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * m[mi(i)];
  require_finite(out, "mul_const");
  return Var<T>::make(std::move(out), {x}, [m, mi](Node<T>& self) {
    if (self.grad.empty()) return;
    if (Tensor<T>* gx = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += m[mi(i)] * self.grad[i];
    }
  });
}

// Concatenate along channels.
template <class T>
Var<T> concat(const Var<T>& a, const Var<T>& b) {
  const Shape as = a.shape(), bs = b.shape();
  if (as.n != bs.n || as.h != bs.h || as.w != bs.w) {
    throw error(errc::shape_mismatch, "concat " + as.str() + " with " + bs.str());
  }
  Tensor<T> out({as.n, as.c + bs.c, as.h, as.w});
  const std::size_t la = as.c * as.plane(), lb = bs.c * bs.plane();
  for (int n = 0; n < as.n; ++n) {
    std::copy(a.value().sample(n), a.value().sample(n) + la, out.sample(n));
    std::copy(b.value().sample(n), b.value().sample(n) + lb, out.sample(n) + la);
  }
  return Var<T>::make(std::move(out), {a, b}, [la, lb](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* ga = detail::grad_of(self, 0);
    Tensor<T>* gb = detail::grad_of(self, 1);
    for (int n = 0; n < self.value.n(); ++n) {
      const T* g = self.grad.sample(n);
      if (ga) {
        T* d = ga->sample(n);
        for (std::size_t i = 0; i < la; ++i) d[i] += g[i];
      }
      if (gb) {
        T* d = gb->sample(n);
        for (std::size_t i = 0; i < lb; ++i) d[i] += g[la + i];
      }
    }
  });
}

// Per-sample, per-channel normalization with an affine transform.
template <class T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  const Shape xs = x.shape();
  if (gamma.value().size() != static_cast<std::size_t>(xs.c) ||
      beta.value().size() != static_cast<std::size_t>(xs.c)) {
    throw error(errc::shape_mismatch, "instance_norm affine");
  }
  const std::size_t plane = xs.plane();
  Tensor<T> out(xs);
  auto xhat = std::make_shared<Tensor<T>>(xs);
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(xs.n) * xs.c);
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * xs.c + c) * plane;
      const T* p = x.value().data() + off;
      T mean = 0;
      for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      mean /= static_cast<T>(plane);
      T var = 0;
      for (std::size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= static_cast<T>(plane);
      const T is = T(1) / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(n) * xs.c + c] = is;
      const T g = gamma.value()[c], bt = beta.value()[c];
      for (std::size_t i = 0; i < plane; ++i) {
        const T h = (p[i] - mean) * is;
        (*xhat)[off + i] = h;
        out[off + i] = g * h + bt;
      }
    }
  }
  require_finite(out, "instance_norm");
  return Var<T>::make(std::move(out), {x, gamma, beta}, [xhat, inv_std, xs, plane](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* gx = detail::grad_of(self, 0);
    Tensor<T>* gg = detail::grad_of(self, 1);
    Tensor<T>* gbt = detail::grad_of(self, 2);
    const Tensor<T>& gamma = self.parents[1]->value;
    const T m = static_cast<T>(plane);
    for (int n = 0; n < xs.n; ++n) {
      for (int c = 0; c < xs.c; ++c) {
        const std::size_t off = (static_cast<std::size_t>(n) * xs.c + c) * plane;
        const T* dy = self.grad.data() + off;
        const T* h = xhat->data() + off;
        T sdy = 0, sdyh = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          sdy += dy[i];
          sdyh += dy[i] * h[i];
        }
        if (gg) (*gg)[c] += sdyh;
        if (gbt) (*gbt)[c] += sdy;
        if (gx) {
          const T k = gamma[c] * (*inv_std)[static_cast<std::size_t>(n) * xs.c + c] / m;
          T* d = gx->data() + off;
          for (std::size_t i = 0; i < plane; ++i) d[i] += k * (m * dy[i] - sdy - h[i] * sdyh);
        }
      }
    }
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  T s = 0;
  for (std::size_t i = 0; i < x.value().size(); ++i) s += x.value()[i];
  Tensor<T> out({1, 1, 1, 1}, s);
  require_finite(out, "sum");
  return Var<T>::make(std::move(out), {x}, [](Node<T>& self) {
    if (self.grad.empty()) return;
    if (Tensor<T>* gx = detail::grad_of(self, 0)) {
      const T g = self.grad[0];
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g;
    }
  });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw error(errc::shape_mismatch, "mean of empty tensor");
  return affine(sum(x), T(1) / static_cast<T>(count), T(0));
}

template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  return mean(square(sub(a, b)));
}

// (n, c, h, w) -> (n, c, 1, 1)
template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Shape xs = x.shape();
  const std::size_t plane = xs.plane();
  Tensor<T> out({xs.n, xs.c, 1, 1});
  for (std::size_t j = 0; j < out.size(); ++j) {
    const T* p = x.value().data() + j * plane;
    T s = 0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    out[j] = s / static_cast<T>(plane);
  }
  return Var<T>::make(std::move(out), {x}, [plane](Node<T>& self) {
    if (self.grad.empty()) return;
    if (Tensor<T>* gx = detail::grad_of(self, 0)) {
      for (std::size_t j = 0; j < self.grad.size(); ++j) {
        const T g = self.grad[j] / static_cast<T>(plane);
        T* d = gx->data() + j * plane;
        for (std::size_t i = 0; i < plane; ++i) d[i] += g;
      }
    }
  });
}

inline constexpr double kLogitClip = 30.0;

// Mean binary cross-entropy of logits against a constant target in [0,1].
// Logits are clipped to +-30 and carry no gradient beyond the clip.
template <class T>
Var<T> bce_with_logits(const Var<T>& logits, T target) {
  const Tensor<T>& z = logits.value();
  if (z.size() == 0) throw error(errc::shape_mismatch, "bce of empty tensor");
  const T clip = static_cast<T>(kLogitClip);
  T s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T v = std::clamp(z[i], -clip, clip);
    s += std::max(v, T(0)) - v * target + std::log1p(std::exp(-std::abs(v)));
  }
  Tensor<T> out({1, 1, 1, 1}, s / static_cast<T>(z.size()));
  require_finite(out, "bce_with_logits");
  return Var<T>::make(std::move(out), {logits}, [target, clip](Node<T>& self) {
    if (self.grad.empty()) return;
    Tensor<T>* gz = detail::grad_of(self, 0);
    if (!gz) return;
    const Tensor<T>& z = self.parents[0]->value;
    const T g = self.grad[0] / static_cast<T>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] < -clip || z[i] > clip) continue;
      const T sig = T(1) / (T(1) + std::exp(-z[i]));
      (*gz)[i] += g * (sig - target);
    }
  });
}

}  // namespace hairsynth::nn
