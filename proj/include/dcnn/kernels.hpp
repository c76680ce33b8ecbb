#pragma once

#include <cstddef>
#include <cstdint>

namespace dcnn::kernels {

/// Kernel backend selection. `Serial` is the reference implementation:
/// single-threaded, bit-deterministic. `Parallel` splits independent
/// outer loops (batch, channel, row) across OpenMP threads while keeping
/// every per-element reduction in the same fixed order, so its results
/// are bitwise identical to the reference. Tests assert this.
enum class Backend { Serial, Parallel };

Backend active_backend();
void set_backend(Backend b);
bool parallel_available();
int thread_count();

struct ConvDims {
  int n = 0, in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, k_h = 0, k_w = 0;
  int stride = 1;
  int pad_top = 0, pad_left = 0;
  int out_h = 0, out_w = 0;
};

struct PoolDims {
  int n = 0, c = 0, in_h = 0, in_w = 0;
  int window = 0, stride = 1;
  int pad_top = 0, pad_left = 0;
  int out_h = 0, out_w = 0;
};

struct BnDims {
  int n = 0, c = 0, h = 0, w = 0;  // per-channel count m = n*h*w
};

// Convolution is cross-correlation (no kernel flip). All backward kernels
// accumulate (+=) into their destination so fan-out gradients add up.
template <class T>
void conv2d_forward(const ConvDims& d, const T* x, const T* w, const T* b, T* y);
template <class T>
void conv2d_backward_input(const ConvDims& d, const T* dy, const T* w, T* dx);
template <class T>
void conv2d_backward_weight(const ConvDims& d, const T* x, const T* dy, T* dw);
template <class T>
void conv2d_backward_bias(const ConvDims& d, const T* dy, T* db);

// Max pooling records the flat input offset of each window maximum
// (first maximum in row-major scan order on ties).
template <class T>
void maxpool_forward(const PoolDims& d, const T* x, T* y, std::int64_t* argmax);
template <class T>
void maxpool_backward(const PoolDims& d, const T* dy, const std::int64_t* argmax, T* dx);

template <class T>
void avgpool_forward(const PoolDims& d, const T* x, T* y);
template <class T>
void avgpool_backward(const PoolDims& d, const T* dy, T* dx);

template <class T>
void global_avg_pool_forward(int n, int c, int hw, const T* x, T* y);
template <class T>
void global_avg_pool_backward(int n, int c, int hw, const T* dy, T* dx);

// Dense layer: y[n,k] = b[k] + sum_f x[n,f] * w[f,k].
template <class T>
void fc_forward(int n, int f, int k, const T* x, const T* w, const T* b, T* y);
template <class T>
void fc_backward_input(int n, int f, int k, const T* dy, const T* w, T* dx);
template <class T>
void fc_backward_weight(int n, int f, int k, const T* x, const T* dy, T* dw);
template <class T>
void fc_backward_bias(int n, int f, int k, const T* dy, T* db);

// Batch norm statistics use the population (biased) variance.
template <class T>
void bn_batch_stats(const BnDims& d, const T* x, T* mean, T* var);
template <class T>
void bn_forward(const BnDims& d, const T* x, const T* mean, const T* var, const T* gamma,
                const T* beta, T eps, T* y, T* xhat);
// Backward through the batch statistics (train mode).
template <class T>
void bn_backward_train(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                       const T* invstd, T* dx, T* dgamma, T* dbeta);
// Running statistics treated as constants (infer mode).
template <class T>
void bn_backward_infer(const BnDims& d, const T* dy, const T* xhat, const T* gamma,
                       const T* invstd, T* dx, T* dgamma, T* dbeta);

template <class T>
void relu_forward(std::size_t n, const T* x, T* y);
template <class T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx);

template <class T>
void add_forward(std::size_t n, const T* a, const T* b, T* y);
// y += alpha * x
template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y);

template <class T>
void softmax_forward(int n, int k, const T* x, T* y);
template <class T>
void softmax_backward(int n, int k, const T* y, const T* dy, T* dx);

}  // namespace dcnn::kernels
