#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hairsynth/nn/tensor.hpp"

namespace hairsynth::nn {

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape() || grad.empty() != value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

namespace detail {
inline thread_local int no_grad_depth = 0;
}

// While alive, ops on this thread do not record a tape.
class NoGrad {
 public:
  NoGrad() { ++detail::no_grad_depth; }
  ~NoGrad() { --detail::no_grad_depth; }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

inline bool grad_enabled() { return detail::no_grad_depth == 0; }

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  const Tensor<T>& grad() const { return node_->grad_buffer(); }
  Tensor<T>& grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(T(0));
  }
  T item() const { return node_->value[0]; }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

  // Builds a result node; records the tape only when some input needs grad.
  static Var make(Tensor<T> value, std::initializer_list<Var> inputs,
                  std::function<void(Node<T>&)> backward) {
    Var out(std::move(value));
    if (!grad_enabled()) return out;
    for (const Var& in : inputs) {
      if (in.requires_grad()) {
        out.node_->requires_grad = true;
        break;
      }
    }
    if (out.node_->requires_grad) {
      for (const Var& in : inputs) out.node_->parents.push_back(in.node_);
      out.node_->backward = std::move(backward);
    }
    return out;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <class T>
bool needs(const Var<T>& v) {
  return v.requires_grad();
}

// Reverse-mode sweep from a scalar.
template <class T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) throw error(errc::shape_mismatch, "backward needs a scalar");
  if (!loss.requires_grad()) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward) n->backward(*n);
  }
  // Interior grads are not needed after the sweep; release the tape.
  for (Node<T>* n : order) {
    if (n->backward) {
      n->grad = Tensor<T>();
      n->parents.clear();
      n->backward = nullptr;
    }
  }
}

}  // namespace hairsynth::nn
