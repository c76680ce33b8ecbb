// Pooling kernels. Max pooling routes the gradient to the first maximal
// element in row-major window order; the argmax buffer holds flat input
// offsets so backward is a plain scatter. Parallel backward splits over
// (n, c) planes, which write disjoint regions of dx.

#include <algorithm>
#include <limits>

#include "dcnn/kernels.hpp"

namespace dcnn::kernels {

namespace {

inline std::size_t plane_off(int n, int c, int ch, int h, int w) {
  return (static_cast<std::size_t>(n) * ch + c) * (static_cast<std::size_t>(h) * w);
}

template <class T>
void maxpool_plane(const PoolDims& d, const T* x, T* y, std::int64_t* argmax, int n, int c) {
  const std::size_t in_base = plane_off(n, c, d.c, d.in_h, d.in_w);
  const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
  for (int oh = 0; oh < d.out_h; ++oh)
    for (int ow = 0; ow < d.out_w; ++ow) {
      T best = -std::numeric_limits<T>::infinity();
      std::int64_t best_at = -1;
      for (int kh = 0; kh < d.window; ++kh) {
        const int ih = oh * d.stride - d.pad_top + kh;
        if (ih < 0 || ih >= d.in_h) continue;
        for (int kw = 0; kw < d.window; ++kw) {
          const int iw = ow * d.stride - d.pad_left + kw;
          if (iw < 0 || iw >= d.in_w) continue;
          const std::size_t at = in_base + static_cast<std::size_t>(ih) * d.in_w + iw;
          if (x[at] > best) {
            best = x[at];
            best_at = static_cast<std::int64_t>(at);
          }
        }
      }
      const std::size_t o = out_base + static_cast<std::size_t>(oh) * d.out_w + ow;
      y[o] = best;
      if (argmax) argmax[o] = best_at;
    }
}

template <class T>
void avgpool_plane(const PoolDims& d, const T* x, T* y, int n, int c) {
  const std::size_t in_base = plane_off(n, c, d.c, d.in_h, d.in_w);
  const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
  const T inv = T(1) / (static_cast<T>(d.window) * d.window);
  for (int oh = 0; oh < d.out_h; ++oh)
    for (int ow = 0; ow < d.out_w; ++ow) {
      T acc = T(0);
      for (int kh = 0; kh < d.window; ++kh) {
        const int ih = oh * d.stride + kh;
        for (int kw = 0; kw < d.window; ++kw) {
          const int iw = ow * d.stride + kw;
          acc += x[in_base + static_cast<std::size_t>(ih) * d.in_w + iw];
        }
      }
      y[out_base + static_cast<std::size_t>(oh) * d.out_w + ow] = acc * inv;
    }
}

}  // namespace

template <class T>
void maxpool_forward(const PoolDims& d, const T* x, T* y, std::int64_t* argmax) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) maxpool_plane(d, x, y, argmax, n, c);
  } else {
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) maxpool_plane(d, x, y, argmax, n, c);
  }
}

template <class T>
void maxpool_backward(const PoolDims& d, const T* dy, const std::int64_t* argmax, T* dx) {
  const std::size_t out_plane = static_cast<std::size_t>(d.out_h) * d.out_w;
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) {
        const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
        for (std::size_t i = 0; i < out_plane; ++i) dx[argmax[out_base + i]] += dy[out_base + i];
      }
  } else {
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) {
        const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
        for (std::size_t i = 0; i < out_plane; ++i) dx[argmax[out_base + i]] += dy[out_base + i];
      }
  }
}

template <class T>
void avgpool_forward(const PoolDims& d, const T* x, T* y) {
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) avgpool_plane(d, x, y, n, c);
  } else {
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) avgpool_plane(d, x, y, n, c);
  }
}

template <class T>
void avgpool_backward(const PoolDims& d, const T* dy, T* dx) {
  const T inv = T(1) / (static_cast<T>(d.window) * d.window);
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) {
        const std::size_t in_base = plane_off(n, c, d.c, d.in_h, d.in_w);
        const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
        for (int oh = 0; oh < d.out_h; ++oh)
          for (int ow = 0; ow < d.out_w; ++ow) {
            const T g = dy[out_base + static_cast<std::size_t>(oh) * d.out_w + ow] * inv;
            for (int kh = 0; kh < d.window; ++kh)
              for (int kw = 0; kw < d.window; ++kw)
                dx[in_base + static_cast<std::size_t>(oh * d.stride + kh) * d.in_w +
                   (ow * d.stride + kw)] += g;
          }
      }
  } else {
    for (int n = 0; n < d.n; ++n)
      for (int c = 0; c < d.c; ++c) {
        const std::size_t in_base = plane_off(n, c, d.c, d.in_h, d.in_w);
        const std::size_t out_base = plane_off(n, c, d.c, d.out_h, d.out_w);
        for (int oh = 0; oh < d.out_h; ++oh)
          for (int ow = 0; ow < d.out_w; ++ow) {
            const T g = dy[out_base + static_cast<std::size_t>(oh) * d.out_w + ow] * inv;
            for (int kh = 0; kh < d.window; ++kh)
              for (int kw = 0; kw < d.window; ++kw)
                dx[in_base + static_cast<std::size_t>(oh * d.stride + kh) * d.in_w +
                   (ow * d.stride + kw)] += g;
          }
      }
  }
}

template <class T>
void global_avg_pool_forward(int n, int c, int hw, const T* x, T* y) {
  const T inv = T(1) / static_cast<T>(hw);
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T* p = x + (static_cast<std::size_t>(i) * c + j) * hw;
        T acc = T(0);
        for (int t = 0; t < hw; ++t) acc += p[t];
        y[static_cast<std::size_t>(i) * c + j] = acc * inv;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T* p = x + (static_cast<std::size_t>(i) * c + j) * hw;
        T acc = T(0);
        for (int t = 0; t < hw; ++t) acc += p[t];
        y[static_cast<std::size_t>(i) * c + j] = acc * inv;
      }
  }
}

template <class T>
void global_avg_pool_backward(int n, int c, int hw, const T* dy, T* dx) {
  const T inv = T(1) / static_cast<T>(hw);
  if (active_backend() == Backend::Parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T g = dy[static_cast<std::size_t>(i) * c + j] * inv;
        T* p = dx + (static_cast<std::size_t>(i) * c + j) * hw;
        for (int t = 0; t < hw; ++t) p[t] += g;
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T g = dy[static_cast<std::size_t>(i) * c + j] * inv;
        T* p = dx + (static_cast<std::size_t>(i) * c + j) * hw;
        for (int t = 0; t < hw; ++t) p[t] += g;
      }
  }
}

template void maxpool_forward<float>(const PoolDims&, const float*, float*, std::int64_t*);
template void maxpool_forward<double>(const PoolDims&, const double*, double*, std::int64_t*);
template void maxpool_backward<float>(const PoolDims&, const float*, const std::int64_t*, float*);
template void maxpool_backward<double>(const PoolDims&, const double*, const std::int64_t*, double*);
template void avgpool_forward<float>(const PoolDims&, const float*, float*);
template void avgpool_forward<double>(const PoolDims&, const double*, double*);
template void avgpool_backward<float>(const PoolDims&, const float*, float*);
template void avgpool_backward<double>(const PoolDims&, const double*, double*);
template void global_avg_pool_forward<float>(int, int, int, const float*, float*);
template void global_avg_pool_forward<double>(int, int, int, const double*, double*);
template void global_avg_pool_backward<float>(int, int, int, const float*, float*);
template void global_avg_pool_backward<double>(int, int, int, const double*, double*);

}  // namespace dcnn::kernels
