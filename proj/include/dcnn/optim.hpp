#pragma once

#include <cstdint>
#include <map>

#include "dcnn/params.hpp"

namespace dcnn {

/// p <- p - lr * g for every trainable parameter. Non-trainable entries
/// are never touched. A trainable parameter without a gradient is an error.
template <class T>
void sgd_step(ParamStoreT<T>& params, T lr);

template <class T>
struct AdamStateT {
  struct Moments {
    TensorT<T> m, v;
  };
  std::map<std::string, Moments> slots;
  std::int64_t t = 0;
};

using AdamState = AdamStateT<float>;

/// Bias-corrected Adam. Moment slots are created on first use and must
/// keep matching their parameter's shape afterwards.
template <class T>
void adam_step(ParamStoreT<T>& params, AdamStateT<T>& state, T lr, T beta1 = T(0.9),
               T beta2 = T(0.999), T eps = T(1e-8));

}  // namespace dcnn
