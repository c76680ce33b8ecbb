#include "dcnn/autodiff.hpp"

#include <stdexcept>
#include <unordered_map>

namespace dcnn {

namespace {
bool g_finite_checks =
#ifdef NDEBUG
    false;
#else
    true;
#endif
}  // namespace

bool finite_checks_enabled() { return g_finite_checks; }
void set_finite_checks(bool enabled) { g_finite_checks = enabled; }

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

// Iterative post-order DFS. Gray marking detects cycles, which the value
// API cannot construct but backward() is contracted to reject.
template <class T>
void topo_sort(const VarT<T>& root, std::vector<NodeT<T>*>& order) {
  enum class Mark : char { White, Gray, Black };
  std::unordered_map<NodeT<T>*, Mark> mark;
  std::vector<std::pair<NodeT<T>*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  mark[root.get()] = Mark::Gray;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      NodeT<T>* child = node->inputs[next++].get();
      if (!child) continue;
      auto it = mark.find(child);
      if (it == mark.end()) {
        mark[child] = Mark::Gray;
        stack.emplace_back(child, 0);
      } else if (it->second == Mark::Gray) {
        throw std::runtime_error("backward: graph contains a cycle");
      }
    } else {
      mark[node] = Mark::Black;
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

template <class T>
void backward(const VarT<T>& root) {
  if (!root) throw std::runtime_error("backward: null root");
  if (root->value.size() != 1) throw ShapeError("backward: root must be a scalar");
  if (!root->requires_grad) return;

  std::vector<NodeT<T>*> order;
  topo_sort(root, order);

  BackwardPassT<T> pass;
  *pass.grad_of(root) = TensorT<T>(root->value.shape(), {T(1)});

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT<T>* node = *it;
    if (!node->requires_grad || !node->backward_fn) continue;
    TensorT<T>* g = pass.find(node);
    if (!g) continue;
    node->backward_fn(*g, pass);
  }

  for (NodeT<T>* node : order) {
    if (!node->requires_grad) continue;
    if (TensorT<T>* g = pass.find(node)) node->accumulate_grad(*g);
  }
}

template void backward<float>(const VarT<float>&);
template void backward<double>(const VarT<double>&);

}  // namespace dcnn
