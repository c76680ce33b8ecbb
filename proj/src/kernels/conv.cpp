// 2-d convolution (cross-correlation) kernels.
//
// The serial namespace is the reference: per output element, terms are
// accumulated bias-first then in (ic, kh, kw) order; weight gradients
// accumulate in (n, oh, ow) order. The omp namespace computes the exact
// same per-element term sequences, only distributing independent outer
// indices across threads, so both backends agree bitwise.

#include <algorithm>

#include "dcnn/kernels.hpp"

namespace dcnn::kernels {

namespace {

inline int div_floor(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
inline int div_ceil(int a, int b) { return a >= 0 ? (a + b - 1) / b : -(-a / b); }

inline std::size_t off4(int a, int b, int c, int d, int db, int dc, int dd) {
  return ((static_cast<std::size_t>(a) * db + b) * dc + c) * dd + d;
}

}  // namespace

namespace serial {

template <class T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* b, T* y) {
  for (int n = 0; n < d.n; ++n)
    for (int oc = 0; oc < d.out_c; ++oc)
      for (int oh = 0; oh < d.out_h; ++oh)
        for (int ow = 0; ow < d.out_w; ++ow) {
          T acc = b ? b[oc] : T(0);
          for (int ic = 0; ic < d.in_c; ++ic)
            for (int kh = 0; kh < d.k_h; ++kh) {
              const int ih = oh * d.stride - d.pad_top + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              for (int kw = 0; kw < d.k_w; ++kw) {
                const int iw = ow * d.stride - d.pad_left + kw;
                if (iw < 0 || iw >= d.in_w) continue;
                acc += x[off4(n, ic, ih, iw, d.in_c, d.in_h, d.in_w)] *
                       w[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)];
              }
            }
          y[off4(n, oc, oh, ow, d.out_c, d.out_h, d.out_w)] = acc;
        }
}

template <class T>
void conv2d_backward_input(const ConvDims& d, const T* dy, const T* w, T* dx) {
  for (int n = 0; n < d.n; ++n)
    for (int ic = 0; ic < d.in_c; ++ic)
      for (int ih = 0; ih < d.in_h; ++ih)
        for (int iw = 0; iw < d.in_w; ++iw) {
          T acc = T(0);
          for (int oc = 0; oc < d.out_c; ++oc)
            for (int kh = 0; kh < d.k_h; ++kh) {
              const int oh_num = ih + d.pad_top - kh;
              if (oh_num % d.stride != 0) continue;
              const int oh = oh_num / d.stride;
              if (oh < 0 || oh >= d.out_h) continue;
              for (int kw = 0; kw < d.k_w; ++kw) {
                const int ow_num = iw + d.pad_left - kw;
                if (ow_num % d.stride != 0) continue;
                const int ow = ow_num / d.stride;
                if (ow < 0 || ow >= d.out_w) continue;
                acc += dy[off4(n, oc, oh, ow, d.out_c, d.out_h, d.out_w)] *
                       w[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)];
              }
            }
          dx[off4(n, ic, ih, iw, d.in_c, d.in_h, d.in_w)] += acc;
        }
}

template <class T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* dy, T* dw) {
  for (int oc = 0; oc < d.out_c; ++oc)
    for (int ic = 0; ic < d.in_c; ++ic)
      for (int kh = 0; kh < d.k_h; ++kh)
        for (int kw = 0; kw < d.k_w; ++kw) {
          T acc = T(0);
          for (int n = 0; n < d.n; ++n)
            for (int oh = 0; oh < d.out_h; ++oh) {
              const int ih = oh * d.stride - d.pad_top + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              for (int ow = 0; ow < d.out_w; ++ow) {
                const int iw = ow * d.stride - d.pad_left + kw;
                if (iw < 0 || iw >= d.in_w) continue;
                acc += x[off4(n, ic, ih, iw, d.in_c, d.in_h, d.in_w)] *
                       dy[off4(n, oc, oh, ow, d.out_c, d.out_h, d.out_w)];
              }
            }
          dw[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)] += acc;
        }
}

template <class T>
void conv2d_backward_bias(const ConvDims& d, const T* dy, T* db) {
  const std::size_t plane = static_cast<std::size_t>(d.out_h) * d.out_w;
  for (int oc = 0; oc < d.out_c; ++oc) {
    T acc = T(0);
    for (int n = 0; n < d.n; ++n) {
      const T* p = dy + off4(n, oc, 0, 0, d.out_c, d.out_h, d.out_w);
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    }
    db[oc] += acc;
  }
}

}  // namespace serial

namespace omp {

template <class T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* b, T* y) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n)
    for (int oc = 0; oc < d.out_c; ++oc) {
      T* yp = y + off4(n, oc, 0, 0, d.out_c, d.out_h, d.out_w);
      const std::size_t plane = static_cast<std::size_t>(d.out_h) * d.out_w;
      const T bias = b ? b[oc] : T(0);
      for (std::size_t i = 0; i < plane; ++i) yp[i] = bias;
      for (int ic = 0; ic < d.in_c; ++ic) {
        const T* xp = x + off4(n, ic, 0, 0, d.in_c, d.in_h, d.in_w);
        for (int kh = 0; kh < d.k_h; ++kh)
          for (int kw = 0; kw < d.k_w; ++kw) {
            const T wv = w[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)];
            const int oh_lo = std::max(0, div_ceil(d.pad_top - kh, d.stride));
            const int oh_hi = std::min(d.out_h - 1, div_floor(d.in_h - 1 + d.pad_top - kh, d.stride));
            const int ow_lo = std::max(0, div_ceil(d.pad_left - kw, d.stride));
            const int ow_hi = std::min(d.out_w - 1, div_floor(d.in_w - 1 + d.pad_left - kw, d.stride));
            for (int oh = oh_lo; oh <= oh_hi; ++oh) {
              const int ih = oh * d.stride - d.pad_top + kh;
              const std::ptrdiff_t xoff =
                  static_cast<std::ptrdiff_t>(ih) * d.in_w + kw - d.pad_left;
              T* yrow = yp + static_cast<std::size_t>(oh) * d.out_w;
              if (d.stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) yrow[ow] += wv * xp[xoff + ow];
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow)
                  yrow[ow] += wv * xp[xoff + static_cast<std::ptrdiff_t>(ow) * d.stride];
              }
            }
          }
      }
    }
}

template <class T>
void conv2d_backward_input(const ConvDims& d, const T* dy, const T* w, T* dx) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n)
    for (int ic = 0; ic < d.in_c; ++ic)
      for (int ih = 0; ih < d.in_h; ++ih)
        for (int iw = 0; iw < d.in_w; ++iw) {
          T acc = T(0);
          for (int oc = 0; oc < d.out_c; ++oc)
            for (int kh = 0; kh < d.k_h; ++kh) {
              const int oh_num = ih + d.pad_top - kh;
              if (oh_num % d.stride != 0) continue;
              const int oh = oh_num / d.stride;
              if (oh < 0 || oh >= d.out_h) continue;
              for (int kw = 0; kw < d.k_w; ++kw) {
                const int ow_num = iw + d.pad_left - kw;
                if (ow_num % d.stride != 0) continue;
                const int ow = ow_num / d.stride;
                if (ow < 0 || ow >= d.out_w) continue;
                acc += dy[off4(n, oc, oh, ow, d.out_c, d.out_h, d.out_w)] *
                       w[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)];
              }
            }
          dx[off4(n, ic, ih, iw, d.in_c, d.in_h, d.in_w)] += acc;
        }
}

template <class T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* dy, T* dw) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < d.out_c; ++oc)
    for (int ic = 0; ic < d.in_c; ++ic)
      for (int kh = 0; kh < d.k_h; ++kh)
        for (int kw = 0; kw < d.k_w; ++kw) {
          T acc = T(0);
          for (int n = 0; n < d.n; ++n) {
            const T* xp = x + off4(n, ic, 0, 0, d.in_c, d.in_h, d.in_w);
            const T* dyp = dy + off4(n, oc, 0, 0, d.out_c, d.out_h, d.out_w);
            for (int oh = 0; oh < d.out_h; ++oh) {
              const int ih = oh * d.stride - d.pad_top + kh;
              if (ih < 0 || ih >= d.in_h) continue;
              const int ow_lo = std::max(0, div_ceil(d.pad_left - kw, d.stride));
              const int ow_hi =
                  std::min(d.out_w - 1, div_floor(d.in_w - 1 + d.pad_left - kw, d.stride));
              const std::ptrdiff_t xoff =
                  static_cast<std::ptrdiff_t>(ih) * d.in_w + kw - d.pad_left;
              const T* dyrow = dyp + static_cast<std::size_t>(oh) * d.out_w;
              if (d.stride == 1) {
                for (int ow = ow_lo; ow <= ow_hi; ++ow) acc += xp[xoff + ow] * dyrow[ow];
              } else {
                for (int ow = ow_lo; ow <= ow_hi; ++ow)
                  acc += xp[xoff + static_cast<std::ptrdiff_t>(ow) * d.stride] * dyrow[ow];
              }
            }
          }
          dw[off4(oc, ic, kh, kw, d.in_c, d.k_h, d.k_w)] += acc;
        }
}

template <class T>
void conv2d_backward_bias(const ConvDims& d, const T* dy, T* db) {
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < d.out_c; ++oc) {
    T acc = T(0);
    const std::size_t plane = static_cast<std::size_t>(d.out_h) * d.out_w;
    for (int n = 0; n < d.n; ++n) {
      const T* p = dy + off4(n, oc, 0, 0, d.out_c, d.out_h, d.out_w);
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    }
    db[oc] += acc;
  }
}

}  // namespace omp

template <class T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* b, T* y) {
  if (active_backend() == Backend::Parallel)
    omp::conv2d_forward(d, x, w, b, y);
  else
    serial::conv2d_forward(d, x, w, b, y);
}

template <class T>
void conv2d_backward_input(const ConvDims& d, const T* dy, const T* w, T* dx) {
  if (active_backend() == Backend::Parallel)
    omp::conv2d_backward_input(d, dy, w, dx);
  else
    serial::conv2d_backward_input(d, dy, w, dx);
}

template <class T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* dy, T* dw) {
  if (active_backend() == Backend::Parallel)
    omp::conv2d_backward_weight(d, x, dy, dw);
  else
    serial::conv2d_backward_weight(d, x, dy, dw);
}

template <class T>
void conv2d_backward_bias(const ConvDims& d, const T* dy, T* db) {
  if (active_backend() == Backend::Parallel)
    omp::conv2d_backward_bias(d, dy, db);
  else
    serial::conv2d_backward_bias(d, dy, db);
}

template void conv2d_forward<float>(const ConvDims&, const float*, const float*, const float*, float*);
template void conv2d_forward<double>(const ConvDims&, const double*, const double*, const double*, double*);
template void conv2d_backward_input<float>(const ConvDims&, const float*, const float*, float*);
template void conv2d_backward_input<double>(const ConvDims&, const double*, const double*, double*);
template void conv2d_backward_weight<float>(const ConvDims&, const float*, const float*, float*);
template void conv2d_backward_weight<double>(const ConvDims&, const double*, const double*, double*);
template void conv2d_backward_bias<float>(const ConvDims&, const float*, float*);
template void conv2d_backward_bias<double>(const ConvDims&, const double*, double*);

}  // namespace dcnn::kernels
