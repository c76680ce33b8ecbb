#include "dcnn/ops.hpp"

#include <cmath>
#include <cstring>
#include <string_view>

namespace dcnn {

namespace {

int same_out(int in, int stride) { return (in + stride - 1) / stride; }

int same_pad_begin(int in, int out, int k, int stride) {
  int total = (out - 1) * stride + k - in;
  if (total < 0) total = 0;
  return total / 2;  // extra cell goes to the bottom/right
}

}  // namespace

kernels::ConvDims conv_dims(const Shape& xs, const Shape& ws, int stride, Padding pad) {
  if (xs.size() != 4) throw ShapeError("conv2d: input must be NCHW, got " + shape_str(xs));
  if (ws.size() != 4) throw ShapeError("conv2d: weight must be OIHW, got " + shape_str(ws));
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  kernels::ConvDims d;
  d.n = xs[0];
  d.in_c = xs[1];
  d.in_h = xs[2];
  d.in_w = xs[3];
  d.out_c = ws[0];
  d.k_h = ws[2];
  d.k_w = ws[3];
  d.stride = stride;
  if (ws[1] != d.in_c)
    throw ShapeError("conv2d: weight expects " + std::to_string(ws[1]) + " input channels, got " +
                     std::to_string(d.in_c));
  if (pad == Padding::Same) {
    if (d.k_h % 2 == 0 || d.k_w % 2 == 0)
      throw ShapeError("conv2d: same padding requires odd kernel dims");
    d.out_h = same_out(d.in_h, stride);
    d.out_w = same_out(d.in_w, stride);
    d.pad_top = same_pad_begin(d.in_h, d.out_h, d.k_h, stride);
    d.pad_left = same_pad_begin(d.in_w, d.out_w, d.k_w, stride);
  } else {
    d.out_h = (d.in_h - d.k_h) / stride + 1;
    d.out_w = (d.in_w - d.k_w) / stride + 1;
    if (d.in_h < d.k_h || d.in_w < d.k_w || d.out_h < 1 || d.out_w < 1)
      throw ShapeError("conv2d: zero-sized spatial output for input " + shape_str(xs));
  }
  return d;
}

kernels::PoolDims pool_dims(const Shape& xs, int window, int stride, Padding pad) {
  if (xs.size() != 4) throw ShapeError("pool: input must be NCHW, got " + shape_str(xs));
  if (window < 1 || stride < 1) throw ShapeError("pool: window and stride must be >= 1");
  kernels::PoolDims d;
  d.n = xs[0];
  d.c = xs[1];
  d.in_h = xs[2];
  d.in_w = xs[3];
  d.window = window;
  d.stride = stride;
  if (pad == Padding::Same) {
    d.out_h = same_out(d.in_h, stride);
    d.out_w = same_out(d.in_w, stride);
    d.pad_top = same_pad_begin(d.in_h, d.out_h, window, stride);
    d.pad_left = same_pad_begin(d.in_w, d.out_w, window, stride);
  } else {
    if (window > d.in_h || window > d.in_w)
      throw ShapeError("pool: window " + std::to_string(window) + " larger than input " +
                       shape_str(xs));
    d.out_h = (d.in_h - window) / stride + 1;
    d.out_w = (d.in_w - window) / stride + 1;
  }
  return d;
}

template <class T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b, int stride, Padding pad) {
  auto d = conv_dims(x->value.shape(), w->value.shape(), stride, pad);
  if (b && (b->value.rank() != 1 || b->value.dim(0) != d.out_c))
    throw ShapeError("conv2d: bias must have one entry per output channel");
  TensorT<T> y({d.n, d.out_c, d.out_h, d.out_w});
  kernels::conv2d_forward(d, x->value.data(), w->value.data(), b ? b->value.data() : nullptr,
                          y.data());
  return make_node<T>("conv2d", std::move(y), {x, w, b},
                      [x, w, b, d](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::conv2d_backward_input(d, g.data(), w->value.data(), dx->data());
                        if (auto* dw = pass.grad_of(w))
                          kernels::conv2d_backward_weight(d, x->value.data(), g.data(), dw->data());
                        if (b)
                          if (auto* db = pass.grad_of(b))
                            kernels::conv2d_backward_bias(d, g.data(), db->data());
                      });
}

template <class T>
VarT<T> relu(const VarT<T>& x) {
  TensorT<T> y(x->value.shape());
  kernels::relu_forward(x->value.size(), x->value.data(), y.data());
  return make_node<T>("relu", std::move(y), {x},
                      [x](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::relu_backward(g.size(), x->value.data(), g.data(), dx->data());
                      });
}

template <class T>
VarT<T> maxpool2d(const VarT<T>& x, int window, int stride, Padding pad) {
  auto d = pool_dims(x->value.shape(), window, stride, pad);
  TensorT<T> y({d.n, d.c, d.out_h, d.out_w});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(y.size());
  kernels::maxpool_forward(d, x->value.data(), y.data(), argmax->data());
  return make_node<T>("maxpool2d", std::move(y), {x},
                      [x, d, argmax](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::maxpool_backward(d, g.data(), argmax->data(), dx->data());
                      });
}

template <class T>
VarT<T> avgpool2d(const VarT<T>& x, int window, int stride) {
  auto d = pool_dims(x->value.shape(), window, stride, Padding::Valid);
  TensorT<T> y({d.n, d.c, d.out_h, d.out_w});
  kernels::avgpool_forward(d, x->value.data(), y.data());
  return make_node<T>("avgpool2d", std::move(y), {x},
                      [x, d](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::avgpool_backward(d, g.data(), dx->data());
                      });
}

template <class T>
VarT<T> global_avg_pool(const VarT<T>& x) {
  if (x->value.rank() != 4) throw ShapeError("global_avg_pool: input must be NCHW");
  const int n = x->value.dim(0), c = x->value.dim(1);
  const int hw = x->value.dim(2) * x->value.dim(3);
  TensorT<T> y({n, c});
  kernels::global_avg_pool_forward(n, c, hw, x->value.data(), y.data());
  return make_node<T>("global_avg_pool", std::move(y), {x},
                      [x, n, c, hw](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::global_avg_pool_backward(n, c, hw, g.data(), dx->data());
                      });
}

template <class T>
VarT<T> batch_norm(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta,
                   BnStateT<T>* state, BnMode mode, T eps, T momentum) {
  if (x->value.rank() != 4) throw ShapeError("batch_norm: input must be NCHW");
  const kernels::BnDims d{x->value.dim(0), x->value.dim(1), x->value.dim(2), x->value.dim(3)};
  if (gamma->value.rank() != 1 || gamma->value.dim(0) != d.c || !gamma->value.same_shape(beta->value))
    throw ShapeError("batch_norm: gamma/beta must have one entry per channel");

  TensorT<T> mean({d.c}), var({d.c});
  if (mode == BnMode::Train) {
    kernels::bn_batch_stats(d, x->value.data(), mean.data(), var.data());
    if (state) {
      if (state->running_mean.size() != static_cast<std::size_t>(d.c))
        throw ShapeError("batch_norm: running stats not initialized for this channel count");
      for (int c = 0; c < d.c; ++c) {
        state->running_mean[c] = momentum * state->running_mean[c] + (T(1) - momentum) * mean[c];
        state->running_var[c] = momentum * state->running_var[c] + (T(1) - momentum) * var[c];
      }
    }
  } else {
    if (!state || state->running_mean.size() != static_cast<std::size_t>(d.c))
      throw ShapeError("batch_norm: infer mode requires initialized running stats");
    mean = state->running_mean;
    var = state->running_var;
  }

  const bool needs_grad = x->requires_grad || gamma->requires_grad || beta->requires_grad;
  TensorT<T> y(x->value.shape());
  auto xhat = needs_grad ? std::make_shared<TensorT<T>>(x->value.shape()) : nullptr;
  kernels::bn_forward(d, x->value.data(), mean.data(), var.data(), gamma->value.data(),
                      beta->value.data(), eps, y.data(), xhat ? xhat->data() : nullptr);

  auto invstd = std::make_shared<TensorT<T>>(Shape{d.c});
  if (needs_grad)
    for (int c = 0; c < d.c; ++c) (*invstd)[c] = T(1) / std::sqrt(var[c] + eps);

  return make_node<T>(
      "batch_norm", std::move(y), {x, gamma, beta},
      [x, gamma, beta, d, xhat, invstd, mode](const TensorT<T>& g, BackwardPassT<T>& pass) {
        TensorT<T>* dx = pass.grad_of(x);
        TensorT<T>* dgamma = pass.grad_of(gamma);
        TensorT<T>* dbeta = pass.grad_of(beta);
        // The kernel fills all three sinks; route unwanted ones to scratch.
        TensorT<T> sx, sg, sb;
        if (!dx) {
          sx = TensorT<T>(x->value.shape());
          dx = &sx;
        }
        if (!dgamma) {
          sg = TensorT<T>(Shape{d.c});
          dgamma = &sg;
        }
        if (!dbeta) {
          sb = TensorT<T>(Shape{d.c});
          dbeta = &sb;
        }
        if (mode == BnMode::Train)
          kernels::bn_backward_train(d, g.data(), xhat->data(), gamma->value.data(),
                                     invstd->data(), dx->data(), dgamma->data(), dbeta->data());
        else
          kernels::bn_backward_infer(d, g.data(), xhat->data(), gamma->value.data(),
                                     invstd->data(), dx->data(), dgamma->data(), dbeta->data());
      });
}

template <class T>
VarT<T> fully_connected(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  if (x->value.rank() != 2 || w->value.rank() != 2)
    throw ShapeError("fully_connected: x and w must be rank-2");
  const int n = x->value.dim(0), f = x->value.dim(1), k = w->value.dim(1);
  if (w->value.dim(0) != f)
    throw ShapeError("fully_connected: inner dims disagree: x " + shape_str(x->value.shape()) +
                     " vs w " + shape_str(w->value.shape()));
  if (b && (b->value.rank() != 1 || b->value.dim(0) != k))
    throw ShapeError("fully_connected: bias must have K entries");
  TensorT<T> y({n, k});
  kernels::fc_forward(n, f, k, x->value.data(), w->value.data(), b ? b->value.data() : nullptr,
                      y.data());
  return make_node<T>("fully_connected", std::move(y), {x, w, b},
                      [x, w, b, n, f, k](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::fc_backward_input(n, f, k, g.data(), w->value.data(), dx->data());
                        if (auto* dw = pass.grad_of(w))
                          kernels::fc_backward_weight(n, f, k, x->value.data(), g.data(), dw->data());
                        if (b)
                          if (auto* db = pass.grad_of(b))
                            kernels::fc_backward_bias(n, f, k, g.data(), db->data());
                      });
}

template <class T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value))
    throw ShapeError("add: shape mismatch " + shape_str(a->value.shape()) + " vs " +
                     shape_str(b->value.shape()));
  TensorT<T> y(a->value.shape());
  kernels::add_forward(y.size(), a->value.data(), b->value.data(), y.data());
  return make_node<T>("add", std::move(y), {a, b},
                      [a, b](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* da = pass.grad_of(a)) kernels::axpy(g.size(), T(1), g.data(), da->data());
                        if (auto* db = pass.grad_of(b)) kernels::axpy(g.size(), T(1), g.data(), db->data());
                      });
}

template <class T>
VarT<T> scale(const VarT<T>& x, T alpha) {
  TensorT<T> y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = alpha * x->value[i];
  return make_node<T>("scale", std::move(y), {x},
                      [x, alpha](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x)) kernels::axpy(g.size(), alpha, g.data(), dx->data());
                      });
}

template <class T>
VarT<T> concat_channels(const std::vector<VarT<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  const auto& first = parts.front()->value.shape();
  if (first.size() != 4) throw ShapeError("concat_channels: parts must be NCHW");
  int total_c = 0;
  for (const auto& p : parts) {
    const auto& s = p->value.shape();
    if (s.size() != 4 || s[0] != first[0] || s[2] != first[2] || s[3] != first[3])
      throw ShapeError("concat_channels: spatial/batch mismatch: " + shape_str(first) + " vs " +
                       shape_str(s));
    total_c += s[1];
  }
  const int n = first[0], h = first[2], w = first[3];
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  TensorT<T> y({n, total_c, h, w});
  for (int i = 0; i < n; ++i) {
    std::size_t off = static_cast<std::size_t>(i) * total_c * hw;
    for (const auto& p : parts) {
      const int pc = p->value.dim(1);
      const std::size_t block = static_cast<std::size_t>(pc) * hw;
      std::memcpy(y.data() + off, p->value.data() + static_cast<std::size_t>(i) * block,
                  block * sizeof(T));
      off += block;
    }
  }
  std::vector<VarT<T>> inputs(parts.begin(), parts.end());
  return make_node<T>("concat_channels", std::move(y), std::move(inputs),
                      [parts, n, total_c, hw](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        for (int i = 0; i < n; ++i) {
                          std::size_t off = static_cast<std::size_t>(i) * total_c * hw;
                          for (const auto& p : parts) {
                            const std::size_t block = static_cast<std::size_t>(p->value.dim(1)) * hw;
                            if (auto* dp = pass.grad_of(p)) {
                              T* dst = dp->data() + static_cast<std::size_t>(i) * block;
                              const T* src = g.data() + off;
                              for (std::size_t t = 0; t < block; ++t) dst[t] += src[t];
                            }
                            off += block;
                          }
                        }
                      });
}

template <class T>
VarT<T> flatten(const VarT<T>& x) {
  if (x->value.rank() < 2) throw ShapeError("flatten: input must have rank >= 2");
  const int n = x->value.dim(0);
  const int rest = static_cast<int>(x->value.size()) / n;
  TensorT<T> y({n, rest}, x->value.vec());
  return make_node<T>("flatten", std::move(y), {x},
                      [x](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x))
                          kernels::axpy(g.size(), T(1), g.data(), dx->data());
                      });
}

template <class T>
VarT<T> softmax(const VarT<T>& x) {
  if (x->value.rank() != 2) throw ShapeError("softmax: input must be NxK");
  const int n = x->value.dim(0), k = x->value.dim(1);
  TensorT<T> y({n, k});
  kernels::softmax_forward(n, k, x->value.data(), y.data());
  auto node = make_node<T>("softmax", std::move(y), {x}, nullptr);
  if (node->requires_grad) {
    // Raw self pointer: the closure is owned by the node, a shared_ptr
    // capture would form a reference cycle.
    NodeT<T>* self = node.get();
    node->backward_fn = [x, self, n, k](const TensorT<T>& g, BackwardPassT<T>& pass) {
      if (auto* dx = pass.grad_of(x))
        kernels::softmax_backward(n, k, self->value.data(), g.data(), dx->data());
    };
  }
  return node;
}

template <class T>
VarT<T> cross_entropy(const VarT<T>& probs, const std::vector<int>& labels) {
  if (probs->value.rank() != 2) throw ShapeError("cross_entropy: probs must be NxK");
  const int n = probs->value.dim(0), k = probs->value.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw ShapeError("cross_entropy: got " + std::to_string(labels.size()) + " labels for batch " +
                     std::to_string(n));
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw ShapeError("cross_entropy: label " + std::to_string(labels[i]) + " out of range at row " +
                       std::to_string(i));
    T row = T(0);
    for (int j = 0; j < k; ++j) row += probs->value.at2(i, j);
    if (std::abs(static_cast<double>(row) - 1.0) > 1e-5)
      throw ShapeError("cross_entropy: probability row " + std::to_string(i) + " sums to " +
                       std::to_string(static_cast<double>(row)));
  }

  double loss = 0;
  for (int i = 0; i < n; ++i) loss -= std::log(static_cast<double>(probs->value.at2(i, labels[i])));
  loss /= n;

  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  const bool fused = std::string_view(probs->kind) == "softmax" && !probs->inputs.empty();
  return make_node<T>(
      "cross_entropy", TensorT<T>({1}, {static_cast<T>(loss)}), {probs},
      [probs, labels_copy, n, k, fused](const TensorT<T>& g, BackwardPassT<T>& pass) {
        const T gs = g[0];
        if (fused) {
          if (auto* dlogits = pass.grad_of(probs->inputs[0])) {
            for (int i = 0; i < n; ++i) {
              const int y = (*labels_copy)[i];
              for (int j = 0; j < k; ++j) {
                T p = probs->value.at2(i, j);
                dlogits->at2(i, j) += gs * ((j == y ? p - T(1) : p) / static_cast<T>(n));
              }
            }
          }
          return;
        }
        if (auto* dp = pass.grad_of(probs)) {
          for (int i = 0; i < n; ++i) {
            const int y = (*labels_copy)[i];
            dp->at2(i, y) += -gs / (static_cast<T>(n) * probs->value.at2(i, y));
          }
        }
      });
}

template <class T>
VarT<T> sum_all(const VarT<T>& x) {
  T acc = T(0);
  for (std::size_t i = 0; i < x->value.size(); ++i) acc += x->value[i];
  return make_node<T>("sum_all", TensorT<T>({1}, {acc}), {x},
                      [x](const TensorT<T>& g, BackwardPassT<T>& pass) {
                        if (auto* dx = pass.grad_of(x)) {
                          const T gs = g[0];
                          for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += gs;
                        }
                      });
}

#define DCNN_INSTANTIATE_OPS(T)                                                                  \
  template VarT<T> conv2d<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&, int, Padding);      \
  template VarT<T> relu<T>(const VarT<T>&);                                                      \
  template VarT<T> maxpool2d<T>(const VarT<T>&, int, int, Padding);                              \
  template VarT<T> avgpool2d<T>(const VarT<T>&, int, int);                                       \
  template VarT<T> global_avg_pool<T>(const VarT<T>&);                                           \
  template VarT<T> batch_norm<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&, BnStateT<T>*,   \
                                 BnMode, T, T);                                                  \
  template VarT<T> fully_connected<T>(const VarT<T>&, const VarT<T>&, const VarT<T>&);           \
  template VarT<T> add<T>(const VarT<T>&, const VarT<T>&);                                       \
  template VarT<T> scale<T>(const VarT<T>&, T);                                                  \
  template VarT<T> concat_channels<T>(const std::vector<VarT<T>>&);                              \
  template VarT<T> flatten<T>(const VarT<T>&);                                                   \
  template VarT<T> softmax<T>(const VarT<T>&);                                                   \
  template VarT<T> cross_entropy<T>(const VarT<T>&, const std::vector<int>&);                    \
  template VarT<T> sum_all<T>(const VarT<T>&)

DCNN_INSTANTIATE_OPS(float);
DCNN_INSTANTIATE_OPS(double);

}  // namespace dcnn
