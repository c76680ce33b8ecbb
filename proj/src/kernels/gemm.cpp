// Dense-layer kernels. Per output element the reduction order is fixed
// (ascending f for forward/dx, ascending n for dw) in both backends.

#include "dcnn/kernels.hpp"

namespace dcnn::kernels {

namespace serial {

template <class T>
void fc_forward(int n, int f, int k, const T* x, const T* w, const T* b, T* y) {
  for (int i = 0; i < n; ++i) {
    T* yr = y + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) yr[j] = b ? b[j] : T(0);
    const T* xr = x + static_cast<std::size_t>(i) * f;
    for (int t = 0; t < f; ++t) {
      const T xv = xr[t];
      const T* wr = w + static_cast<std::size_t>(t) * k;
      for (int j = 0; j < k; ++j) yr[j] += xv * wr[j];
    }
  }
}

template <class T>
void fc_backward_input(int n, int f, int k, const T* dy, const T* w, T* dx) {
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < f; ++t) {
      T acc = T(0);
      const T* dyr = dy + static_cast<std::size_t>(i) * k;
      const T* wr = w + static_cast<std::size_t>(t) * k;
      for (int j = 0; j < k; ++j) acc += dyr[j] * wr[j];
      dx[static_cast<std::size_t>(i) * f + t] += acc;
    }
}

template <class T>
void fc_backward_weight(int n, int f, int k, const T* x, const T* dy, T* dw) {
  for (int t = 0; t < f; ++t) {
    T* dwr = dw + static_cast<std::size_t>(t) * k;
    for (int i = 0; i < n; ++i) {
      const T xv = x[static_cast<std::size_t>(i) * f + t];
      const T* dyr = dy + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) dwr[j] += xv * dyr[j];
    }
  }
}

template <class T>
void fc_backward_bias(int n, int f, int k, const T* dy, T* db) {
  (void)f;
  for (int j = 0; j < k; ++j) {
    T acc = T(0);
    for (int i = 0; i < n; ++i) acc += dy[static_cast<std::size_t>(i) * k + j];
    db[j] += acc;
  }
}

}  // namespace serial

namespace omp {

template <class T>
void fc_forward(int n, int f, int k, const T* x, const T* w, const T* b, T* y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    T* yr = y + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) yr[j] = b ? b[j] : T(0);
    const T* xr = x + static_cast<std::size_t>(i) * f;
    for (int t = 0; t < f; ++t) {
      const T xv = xr[t];
      const T* wr = w + static_cast<std::size_t>(t) * k;
      for (int j = 0; j < k; ++j) yr[j] += xv * wr[j];
    }
  }
}

template <class T>
void fc_backward_input(int n, int f, int k, const T* dy, const T* w, T* dx) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < f; ++t) {
      T acc = T(0);
      const T* dyr = dy + static_cast<std::size_t>(i) * k;
      const T* wr = w + static_cast<std::size_t>(t) * k;
      for (int j = 0; j < k; ++j) acc += dyr[j] * wr[j];
      dx[static_cast<std::size_t>(i) * f + t] += acc;
    }
}

template <class T>
void fc_backward_weight(int n, int f, int k, const T* x, const T* dy, T* dw) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < f; ++t) {
    T* dwr = dw + static_cast<std::size_t>(t) * k;
    for (int i = 0; i < n; ++i) {
      const T xv = x[static_cast<std::size_t>(i) * f + t];
      const T* dyr = dy + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) dwr[j] += xv * dyr[j];
    }
  }
}

template <class T>
void fc_backward_bias(int n, int f, int k, const T* dy, T* db) {
  (void)f;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < k; ++j) {
    T acc = T(0);
    for (int i = 0; i < n; ++i) acc += dy[static_cast<std::size_t>(i) * k + j];
    db[j] += acc;
  }
}

}  // namespace omp

template <class T>
void fc_forward(int n, int f, int k, const T* x, const T* w, const T* b, T* y) {
  if (active_backend() == Backend::Parallel)
    omp::fc_forward(n, f, k, x, w, b, y);
  else
    serial::fc_forward(n, f, k, x, w, b, y);
}
template <class T>
void fc_backward_input(int n, int f, int k, const T* dy, const T* w, T* dx) {
  if (active_backend() == Backend::Parallel)
    omp::fc_backward_input(n, f, k, dy, w, dx);
  else
    serial::fc_backward_input(n, f, k, dy, w, dx);
}
template <class T>
void fc_backward_weight(int n, int f, int k, const T* x, const T* dy, T* dw) {
  if (active_backend() == Backend::Parallel)
    omp::fc_backward_weight(n, f, k, x, dy, dw);
  else
    serial::fc_backward_weight(n, f, k, x, dy, dw);
}
template <class T>
void fc_backward_bias(int n, int f, int k, const T* dy, T* db) {
  if (active_backend() == Backend::Parallel)
    omp::fc_backward_bias(n, f, k, dy, db);
  else
    serial::fc_backward_bias(n, f, k, dy, db);
}

template void fc_forward<float>(int, int, int, const float*, const float*, const float*, float*);
template void fc_forward<double>(int, int, int, const double*, const double*, const double*, double*);
template void fc_backward_input<float>(int, int, int, const float*, const float*, float*);
template void fc_backward_input<double>(int, int, int, const double*, const double*, double*);
template void fc_backward_weight<float>(int, int, int, const float*, const float*, float*);
template void fc_backward_weight<double>(int, int, int, const double*, const double*, double*);
template void fc_backward_bias<float>(int, int, int, const float*, float*);
template void fc_backward_bias<double>(int, int, int, const double*, double*);

}  // namespace dcnn::kernels
