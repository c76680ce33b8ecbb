// Batch-norm kernels, NCHW with per-channel statistics. Channel reductions
// run in fixed (n, h, w) order; the parallel backend splits over channels.

#include <cmath>

#include "dcnn/kernels.hpp"

namespace dcnn::kernels {

namespace {

template <class T>
void stats_channel(const BnDims& d, const T* x, T* mean, T* var, int c) {
  const std::size_t hw = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t stride_n = static_cast<std::size_t>(d.c) * hw;
  const T m = static_cast<T>(d.n) * static_cast<T>(hw);
  T sum = T(0);
  for (int n = 0; n < d.n; ++n) {
    const T* p = x + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) sum += p[i];
  }
  const T mu = sum / m;
  T sq = T(0);
  for (int n = 0; n < d.n; ++n) {
    const T* p = x + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      const T t = p[i] - mu;
      sq += t * t;
    }
  }
  mean[c] = mu;
  var[c] = sq / m;  // population variance
}

template <class T>
void forward_channel(const BnDims& d, const T* x, const T* mean, const T* var, const T* gamma,
                     const T* beta, T eps, T* y, T* xhat, int c) {
  const std::size_t hw = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t stride_n = static_cast<std::size_t>(d.c) * hw;
  const T invstd = T(1) / std::sqrt(var[c] + eps);
  const T g = gamma[c], b = beta[c], mu = mean[c];
  for (int n = 0; n < d.n; ++n) {
    const T* p = x + n * stride_n + c * hw;
    T* q = y + n * stride_n + c * hw;
    if (xhat) {
      T* h = xhat + n * stride_n + c * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T xh = (p[i] - mu) * invstd;
        h[i] = xh;
        q[i] = g * xh + b;
      }
    } else {
      for (std::size_t i = 0; i < hw; ++i) q[i] = g * ((p[i] - mu) * invstd) + b;
    }
  }
}

template <class T>
void backward_train_channel(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                            const T* invstd, T* dx, T* dgamma, T* dbeta, int c) {
  const std::size_t hw = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t stride_n = static_cast<std::size_t>(d.c) * hw;
  const T m = static_cast<T>(d.n) * static_cast<T>(hw);
  T s1 = T(0), s2 = T(0);
  for (int n = 0; n < d.n; ++n) {
    const T* g = dy + n * stride_n + c * hw;
    const T* h = xhat + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      s1 += g[i];
      s2 += g[i] * h[i];
    }
  }
  dbeta[c] += s1;
  dgamma[c] += s2;
  const T scale = gamma[c] * invstd[c] / m;
  for (int n = 0; n < d.n; ++n) {
    const T* g = dy + n * stride_n + c * hw;
    const T* h = xhat + n * stride_n + c * hw;
    T* o = dx + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) o[i] += scale * (m * g[i] - s1 - h[i] * s2);
  }
}

template <class T>
void backward_infer_channel(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                            const T* invstd, T* dx, T* dgamma, T* dbeta, int c) {
  const std::size_t hw = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t stride_n = static_cast<std::size_t>(d.c) * hw;
  T s1 = T(0), s2 = T(0);
  for (int n = 0; n < d.n; ++n) {
    const T* g = dy + n * stride_n + c * hw;
    const T* h = xhat + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      s1 += g[i];
      s2 += g[i] * h[i];
    }
  }
  dbeta[c] += s1;
  dgamma[c] += s2;
  const T scale = gamma[c] * invstd[c];
  for (int n = 0; n < d.n; ++n) {
    const T* g = dy + n * stride_n + c * hw;
    T* o = dx + n * stride_n + c * hw;
    for (std::size_t i = 0; i < hw; ++i) o[i] += scale * g[i];
  }
}

}  // namespace

template <class T>
void bn_batch_stats(const BnDims& d, const T* x, T* mean, T* var) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < d.c; ++c) stats_channel(d, x, mean, var, c);
  } else {
    for (int c = 0; c < d.c; ++c) stats_channel(d, x, mean, var, c);
  }
}

template <class T>
void bn_forward(const BnDims& d, const T* x, const T* mean, const T* var, const T* gamma,
                const T* beta, T eps, T* y, T* xhat) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < d.c; ++c) forward_channel(d, x, mean, var, gamma, beta, eps, y, xhat, c);
  } else {
    for (int c = 0; c < d.c; ++c) forward_channel(d, x, mean, var, gamma, beta, eps, y, xhat, c);
  }
}

template <class T>
void bn_backward_train(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                       const T* invstd, T* dx, T* dgamma, T* dbeta) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < d.c; ++c)
      backward_train_channel(d, dy, xhat, gamma, invstd, dx, dgamma, dbeta, c);
  } else {
    for (int c = 0; c < d.c; ++c)
      backward_train_channel(d, dy, xhat, gamma, invstd, dx, dgamma, dbeta, c);
  }
}

template <class T>
void bn_backward_infer(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                       const T* invstd, T* dx, T* dgamma, T* dbeta) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < d.c; ++c)
      backward_infer_channel(d, dy, xhat, gamma, invstd, dx, dgamma, dbeta, c);
  } else {
    for (int c = 0; c < d.c; ++c)
      backward_infer_channel(d, dy, xhat, gamma, invstd, dx, dgamma, dbeta, c);
  }
}

template void bn_batch_stats<float>(const BnDims&, const float*, float*, float*);
template void bn_batch_stats<double>(const BnDims&, const double*, double*, double*);
template void bn_forward<float>(const BnDims&, const float*, const float*, const float*,
                                const float*, const float*, float, float*, float*);
template void bn_forward<double>(const BnDims&, const double*, const double*, const double*,
                                 const double*, const double*, double, double*, double*);
template void bn_backward_train<float>(const BnDims&, const float*, const float*, const float*,
                                       const float*, float*, float*, float*);
template void bn_backward_train<double>(const BnDims&, const double*, const double*, const double*,
                                        const double*, double*, double*, double*);
template void bn_backward_infer<float>(const BnDims&, const float*, const float*, const float*,
                                       const float*, float*, float*, float*);
template void bn_backward_infer<double>(const BnDims&, const double*, const double*, const double*,
                                        const double*, double*, double*, double*);

}  // namespace dcnn::kernels
