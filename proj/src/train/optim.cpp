#include "dcnn/optim.hpp"

#include <cmath>

namespace dcnn {

template <class T>
void sgd_step(ParamStoreT<T>& params, T lr) {
  for (auto& [name, e] : params.entries()) {
    if (!e.trainable) continue;
    if (e.var->grad.empty()) throw ModelError("sgd_step: no gradient for trainable parameter " + name);
    auto& p = e.var->value;
    const auto& g = e.var->grad;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
}

template <class T>
void adam_step(ParamStoreT<T>& params, AdamStateT<T>& state, T lr, T beta1, T beta2, T eps) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), static_cast<double>(state.t));
  for (auto& [name, e] : params.entries()) {
    if (!e.trainable) continue;
    if (e.var->grad.empty()) throw ModelError("adam_step: no gradient for trainable parameter " + name);
    auto& p = e.var->value;
    const auto& g = e.var->grad;
    auto& slot = state.slots[name];
    if (slot.m.empty()) {
      slot.m = TensorT<T>(p.shape());
      slot.v = TensorT<T>(p.shape());
    }
    if (!slot.m.same_shape(p))
      throw ModelError("adam_step: moment shape mismatch for parameter " + name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      slot.m[i] = beta1 * slot.m[i] + (T(1) - beta1) * g[i];
      slot.v[i] = beta2 * slot.v[i] + (T(1) - beta2) * g[i] * g[i];
      const T mhat = slot.m[i] / static_cast<T>(bc1);
      const T vhat = slot.v[i] / static_cast<T>(bc2);
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template void sgd_step<float>(ParamStoreT<float>&, float);
template void sgd_step<double>(ParamStoreT<double>&, double);
template void adam_step<float>(ParamStoreT<float>&, AdamStateT<float>&, float, float, float, float);
template void adam_step<double>(ParamStoreT<double>&, AdamStateT<double>&, double, double, double,
                                double);

}  // namespace dcnn
