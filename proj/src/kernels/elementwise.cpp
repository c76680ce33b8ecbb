// Elementwise and row-wise kernels. Elementwise loops have no cross-element
// reductions, so any split is bitwise safe; softmax parallelizes over rows.

#include <algorithm>
#include <cmath>

#include "dcnn/kernels.hpp"

namespace dcnn::kernels {

namespace {

template <class T>
void softmax_row(int k, const T* x, T* y) {
  T m = x[0];
  for (int j = 1; j < k; ++j) m = std::max(m, x[j]);
  T sum = T(0);
  for (int j = 0; j < k; ++j) {
    y[j] = std::exp(x[j] - m);
    sum += y[j];
  }
  for (int j = 0; j < k; ++j) y[j] /= sum;
}

template <class T>
void softmax_backward_row(int k, const T* y, const T* dy, T* dx) {
  T dot = T(0);
  for (int j = 0; j < k; ++j) dot += dy[j] * y[j];
  for (int j = 0; j < k; ++j) dx[j] += y[j] * (dy[j] - dot);
}

}  // namespace

template <class T>
void relu_forward(std::size_t n, const T* x, T* y) {
  if (active_backend() == Backend::Parallel) {
    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  }
}

template <class T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx) {
  if (active_backend() == Backend::Parallel) {
    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i)
      if (x[i] > T(0)) dx[i] += dy[i];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] > T(0)) dx[i] += dy[i];
  }
}

template <class T>
void add_forward(std::size_t n, const T* a, const T* b, T* y) {
  if (active_backend() == Backend::Parallel) {
    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) y[i] = a[i] + b[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
  }
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  if (active_backend() == Backend::Parallel) {
    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) y[i] += alpha * x[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

template <class T>
void softmax_forward(int n, int k, const T* x, T* y) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
      softmax_row(k, x + static_cast<std::size_t>(i) * k, y + static_cast<std::size_t>(i) * k);
  } else {
    for (int i = 0; i < n; ++i)
      softmax_row(k, x + static_cast<std::size_t>(i) * k, y + static_cast<std::size_t>(i) * k);
  }
}

template <class T>
void softmax_backward(int n, int k, const T* y, const T* dy, T* dx) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
      softmax_backward_row(k, y + static_cast<std::size_t>(i) * k,
                           dy + static_cast<std::size_t>(i) * k,
                           dx + static_cast<std::size_t>(i) * k);
  } else {
    for (int i = 0; i < n; ++i)
      softmax_backward_row(k, y + static_cast<std::size_t>(i) * k,
                           dy + static_cast<std::size_t>(i) * k,
                           dx + static_cast<std::size_t>(i) * k);
  }
}

template void relu_forward<float>(std::size_t, const float*, float*);
template void relu_forward<double>(std::size_t, const double*, double*);
template void relu_backward<float>(std::size_t, const float*, const float*, float*);
template void relu_backward<double>(std::size_t, const double*, const double*, double*);
template void add_forward<float>(std::size_t, const float*, const float*, float*);
template void add_forward<double>(std::size_t, const double*, const double*, double*);
template void axpy<float>(std::size_t, float, const float*, float*);
template void axpy<double>(std::size_t, double, const double*, double*);
template void softmax_forward<float>(int, int, const float*, float*);
template void softmax_forward<double>(int, int, const double*, double*);
template void softmax_backward<float>(int, int, const float*, const float*, float*);
template void softmax_backward<double>(int, int, const double*, const double*, double*);

}  // namespace dcnn::kernels
