#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dcnn/tensor.hpp"

namespace dcnn {

template <class T>
struct NodeT;
template <class T>
using VarT = std::shared_ptr<NodeT<T>>;

/// Pass-local gradient buffers used while walking the graph backwards.
/// Each backward() call propagates through fresh buffers and only then
/// folds the result into the nodes' persistent grad slots, so repeated
/// calls without zeroing accumulate additively.
template <class T>
class BackwardPassT {
 public:
  /// Accumulation buffer for this pass's gradient of `v`, zero-initialized
  /// on first access; nullptr when `v` does not require gradients.
  TensorT<T>* grad_of(const VarT<T>& v) {
    if (!v || !v->requires_grad) return nullptr;
    auto it = grads_.find(v.get());
    if (it == grads_.end()) it = grads_.emplace(v.get(), TensorT<T>(v->value.shape())).first;
    return &it->second;
  }

  TensorT<T>* find(const NodeT<T>* n) {
    auto it = grads_.find(n);
    return it == grads_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<const NodeT<T>*, TensorT<T>> grads_;
};

/// One node of the reverse-mode tape: the op's output tensor, its producer
/// inputs and a closure that routes an upstream gradient to them.
template <class T>
struct NodeT {
  TensorT<T> value;
  TensorT<T> grad;  // persistent accumulated gradient; empty until first backward
  bool requires_grad = false;
  const char* kind = "leaf";
  std::vector<VarT<T>> inputs;
  std::function<void(const TensorT<T>& g, BackwardPassT<T>& pass)> backward_fn;

  void zero_grad() { grad = TensorT<T>(); }
  void accumulate_grad(const TensorT<T>& g) {
    if (grad.empty()) grad = TensorT<T>(value.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
};

template <class T>
VarT<T> make_leaf(TensorT<T> value, bool requires_grad) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <class T>
VarT<T> make_node(const char* kind, TensorT<T> value, std::vector<VarT<T>> inputs,
                  std::function<void(const TensorT<T>&, BackwardPassT<T>&)> backward_fn) {
  auto n = std::make_shared<NodeT<T>>();
  n->kind = kind;
  for (const auto& in : inputs)
    if (in && in->requires_grad) n->requires_grad = true;
  n->value = std::move(value);
  n->inputs = std::move(inputs);
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  check_finite(n->value, kind);
  return n;
}

/// Reverse-mode sweep from a scalar root. Visits each node exactly once in
/// reverse topological order and adds this pass's gradients into every
/// reachable requires_grad node.
template <class T>
void backward(const VarT<T>& root);

using Var = VarT<float>;
using VarD = VarT<double>;

}  // namespace dcnn
