#pragma once

#include <vector>

#include "dcnn/autodiff.hpp"
#include "dcnn/kernels.hpp"

namespace dcnn {

enum class Padding { Valid, Same };
enum class BnMode { Train, Infer };

/// Running batch-norm statistics. Deliberately kept outside the parameter
/// store: they are updated by train-mode forward passes, not by the
/// optimizer, so freezing contracts do not apply to them.
template <class T>
struct BnStateT {
  TensorT<T> running_mean;
  TensorT<T> running_var;
};

using BnState = BnStateT<float>;

/// Output spatial size and padding for a convolution/pooling window.
/// Same padding follows the ceil convention: out = ceil(in / stride),
/// with the total pad split top-light (extra cell goes to the bottom/right).
kernels::ConvDims conv_dims(const Shape& x_shape, const Shape& w_shape, int stride, Padding pad);
kernels::PoolDims pool_dims(const Shape& x_shape, int window, int stride, Padding pad);

template <class T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b, int stride, Padding pad);

template <class T>
VarT<T> relu(const VarT<T>& x);

template <class T>
VarT<T> maxpool2d(const VarT<T>& x, int window, int stride, Padding pad = Padding::Valid);

/// Windowed average pooling (valid padding only).
template <class T>
VarT<T> avgpool2d(const VarT<T>& x, int window, int stride);

template <class T>
VarT<T> global_avg_pool(const VarT<T>& x);

/// `state` may be null in train mode (no running-stat tracking); it is
/// required in infer mode.
template <class T>
VarT<T> batch_norm(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta,
                   BnStateT<T>* state, BnMode mode, T eps = T(1e-5), T momentum = T(0.9));

template <class T>
VarT<T> fully_connected(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b);

template <class T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b);

template <class T>
VarT<T> scale(const VarT<T>& x, T alpha);

template <class T>
VarT<T> concat_channels(const std::vector<VarT<T>>& parts);

template <class T>
VarT<T> flatten(const VarT<T>& x);

template <class T>
VarT<T> softmax(const VarT<T>& x);

/// Mean negative log-likelihood of the true classes. When `probs` comes
/// straight from softmax, the backward pass uses the fused (p - onehot)/N
/// form written directly to the softmax input.
template <class T>
VarT<T> cross_entropy(const VarT<T>& probs, const std::vector<int>& labels);

template <class T>
VarT<T> sum_all(const VarT<T>& x);

}  // namespace dcnn
