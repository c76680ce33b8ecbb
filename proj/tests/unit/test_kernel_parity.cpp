// The OpenMP backend is contracted to reduce in the same fixed order as
// the serial reference, so outputs must match bitwise, not approximately.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "dcnn/kernels.hpp"
#include "gradcheck.hpp"

using namespace dcnn;
using kernels::Backend;
using test::random_tensor;

namespace {

template <class Fn>
bool bitwise_equal_runs(Fn&& run, std::vector<float>& out_serial, std::vector<float>& out_omp) {
  kernels::set_backend(Backend::Serial);
  run(out_serial);
  kernels::set_backend(Backend::Parallel);
  run(out_omp);
  kernels::set_backend(Backend::Parallel);
  return std::memcmp(out_serial.data(), out_omp.data(), out_serial.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_SUITE("kernel-parity") {

TEST_CASE("conv2d forward/backward parity") {
  if (!kernels::parallel_available()) return;
  for (int stride : {1, 2}) {
    kernels::ConvDims d;
    d.n = 3;
    d.in_c = 5;
    d.in_h = 13;
    d.in_w = 11;
    d.out_c = 7;
    d.k_h = d.k_w = 3;
    d.stride = stride;
    d.pad_top = d.pad_left = 1;
    d.out_h = (d.in_h + stride - 1) / stride;
    d.out_w = (d.in_w + stride - 1) / stride;
    const auto x = random_tensor<float>({d.n, d.in_c, d.in_h, d.in_w}, 301);
    const auto w = random_tensor<float>({d.out_c, d.in_c, d.k_h, d.k_w}, 302);
    const auto b = random_tensor<float>({d.out_c}, 303);
    const auto dy = random_tensor<float>({d.n, d.out_c, d.out_h, d.out_w}, 304);

    std::vector<float> s, p;
    s.assign(static_cast<std::size_t>(d.n) * d.out_c * d.out_h * d.out_w, 0);
    p = s;
    CHECK(bitwise_equal_runs(
        [&](std::vector<float>& out) {
          std::fill(out.begin(), out.end(), 0.0f);
          kernels::conv2d_forward(d, x.data(), w.data(), b.data(), out.data());
        },
        s, p));

    s.assign(x.size(), 0);
    p = s;
    CHECK(bitwise_equal_runs(
        [&](std::vector<float>& out) {
          std::fill(out.begin(), out.end(), 0.0f);
          kernels::conv2d_backward_input(d, dy.data(), w.data(), out.data());
        },
        s, p));

    s.assign(w.size(), 0);
    p = s;
    CHECK(bitwise_equal_runs(
        [&](std::vector<float>& out) {
          std::fill(out.begin(), out.end(), 0.0f);
          kernels::conv2d_backward_weight(d, x.data(), dy.data(), out.data());
        },
        s, p));

    s.assign(static_cast<std::size_t>(d.out_c), 0);
    p = s;
    CHECK(bitwise_equal_runs(
        [&](std::vector<float>& out) {
          std::fill(out.begin(), out.end(), 0.0f);
          kernels::conv2d_backward_bias(d, dy.data(), out.data());
        },
        s, p));
  }
}

TEST_CASE("dense parity") {
  if (!kernels::parallel_available()) return;
  const int n = 9, f = 17, k = 5;
  const auto x = random_tensor<float>({n, f}, 311);
  const auto w = random_tensor<float>({f, k}, 312);
  const auto b = random_tensor<float>({k}, 313);
  const auto dy = random_tensor<float>({n, k}, 314);

  std::vector<float> s(static_cast<std::size_t>(n) * k, 0), p = s;
  CHECK(bitwise_equal_runs(
      [&](std::vector<float>& out) {
        kernels::fc_forward(n, f, k, x.data(), w.data(), b.data(), out.data());
      },
      s, p));

  s.assign(static_cast<std::size_t>(n) * f, 0);
  p = s;
  CHECK(bitwise_equal_runs(
      [&](std::vector<float>& out) {
        std::fill(out.begin(), out.end(), 0.0f);
        kernels::fc_backward_input(n, f, k, dy.data(), w.data(), out.data());
      },
      s, p));

  s.assign(static_cast<std::size_t>(f) * k, 0);
  p = s;
  CHECK(bitwise_equal_runs(
      [&](std::vector<float>& out) {
        std::fill(out.begin(), out.end(), 0.0f);
        kernels::fc_backward_weight(n, f, k, x.data(), dy.data(), out.data());
      },
      s, p));
}

TEST_CASE("batch norm parity") {
  if (!kernels::parallel_available()) return;
  kernels::BnDims d{4, 6, 5, 5};
  const auto x = random_tensor<float>({d.n, d.c, d.h, d.w}, 321);
  const auto gamma = random_tensor<float>({d.c}, 322);
  const auto beta = random_tensor<float>({d.c}, 323);
  const auto dy = random_tensor<float>({d.n, d.c, d.h, d.w}, 324);

  std::vector<float> mean_s(static_cast<std::size_t>(d.c)), var_s(mean_s.size());
  kernels::set_backend(Backend::Serial);
  kernels::bn_batch_stats(d, x.data(), mean_s.data(), var_s.data());
  std::vector<float> mean_p(mean_s.size()), var_p(mean_s.size());
  kernels::set_backend(Backend::Parallel);
  kernels::bn_batch_stats(d, x.data(), mean_p.data(), var_p.data());
  CHECK(std::memcmp(mean_s.data(), mean_p.data(), mean_s.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(var_s.data(), var_p.data(), var_s.size() * sizeof(float)) == 0);

  std::vector<float> invstd(static_cast<std::size_t>(d.c));
  for (int c = 0; c < d.c; ++c) invstd[static_cast<std::size_t>(c)] = 1.0f / std::sqrt(var_s[static_cast<std::size_t>(c)] + 1e-5f);

  std::vector<float> y_s(x.size()), xhat(x.size()), y_p(x.size()), xhat_p(x.size());
  kernels::set_backend(Backend::Serial);
  kernels::bn_forward(d, x.data(), mean_s.data(), var_s.data(), gamma.data(), beta.data(), 1e-5f,
                      y_s.data(), xhat.data());
  kernels::set_backend(Backend::Parallel);
  kernels::bn_forward(d, x.data(), mean_s.data(), var_s.data(), gamma.data(), beta.data(), 1e-5f,
                      y_p.data(), xhat_p.data());
  CHECK(std::memcmp(y_s.data(), y_p.data(), y_s.size() * sizeof(float)) == 0);

  std::vector<float> s(x.size(), 0), p2 = s;
  std::vector<float> dg_s(static_cast<std::size_t>(d.c), 0), db_s = dg_s, dg_p = dg_s, db_p = dg_s;
  kernels::set_backend(Backend::Serial);
  kernels::bn_backward_train(d, dy.data(), xhat.data(), gamma.data(), invstd.data(), s.data(),
                             dg_s.data(), db_s.data());
  kernels::set_backend(Backend::Parallel);
  kernels::bn_backward_train(d, dy.data(), xhat.data(), gamma.data(), invstd.data(), p2.data(),
                             dg_p.data(), db_p.data());
  CHECK(std::memcmp(s.data(), p2.data(), s.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(dg_s.data(), dg_p.data(), dg_s.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(db_s.data(), db_p.data(), db_s.size() * sizeof(float)) == 0);
}

TEST_CASE("pool, elementwise and softmax parity") {
  if (!kernels::parallel_available()) return;
  kernels::PoolDims d{3, 4, 9, 9, 2, 2, 0, 0, 4, 4};
  const auto x = random_tensor<float>({d.n, d.c, d.in_h, d.in_w}, 331);
  const auto dy = random_tensor<float>({d.n, d.c, d.out_h, d.out_w}, 332);

  std::vector<float> s(static_cast<std::size_t>(d.n) * d.c * d.out_h * d.out_w), p = s;
  std::vector<std::int64_t> am_s(s.size()), am_p(s.size());
  kernels::set_backend(Backend::Serial);
  kernels::maxpool_forward(d, x.data(), s.data(), am_s.data());
  kernels::set_backend(Backend::Parallel);
  kernels::maxpool_forward(d, x.data(), p.data(), am_p.data());
  CHECK(std::memcmp(s.data(), p.data(), s.size() * sizeof(float)) == 0);
  CHECK(am_s == am_p);

  std::vector<float> dx_s(x.size(), 0), dx_p(x.size(), 0);
  kernels::set_backend(Backend::Serial);
  kernels::maxpool_backward(d, dy.data(), am_s.data(), dx_s.data());
  kernels::set_backend(Backend::Parallel);
  kernels::maxpool_backward(d, dy.data(), am_p.data(), dx_p.data());
  CHECK(std::memcmp(dx_s.data(), dx_p.data(), dx_s.size() * sizeof(float)) == 0);

  const int rows = 37, cols = 11;
  const auto logits = random_tensor<float>({rows, cols}, 333);
  std::vector<float> sm_s(logits.size()), sm_p(logits.size());
  CHECK(bitwise_equal_runs(
      [&](std::vector<float>& out) {
        kernels::softmax_forward(rows, cols, logits.data(), out.data());
      },
      sm_s, sm_p));

  std::vector<float> relu_s(x.size()), relu_p(x.size());
  CHECK(bitwise_equal_runs(
      [&](std::vector<float>& out) { kernels::relu_forward(x.size(), x.data(), out.data()); },
      relu_s, relu_p));
}

}  // TEST_SUITE
