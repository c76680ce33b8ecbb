#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dcnn/ops.hpp"
#include "gradcheck.hpp"

using namespace dcnn;

TEST_SUITE("tensor-ops") {

TEST_CASE("conv2d with the identity kernel reproduces the input") {
  auto x = make_leaf(Tensor({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), false);
  Tensor w({1, 1, 3, 3});
  w.at4(0, 0, 1, 1) = 1.0f;
  auto wv = make_leaf(w, false);
  auto b = make_leaf(Tensor({1}), false);
  auto y = conv2d(x, wv, b, 1, Padding::Same);
  REQUIRE(y->value.shape() == Shape{1, 1, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) CHECK(y->value[i] == x->value[i]);
}

TEST_CASE("conv2d all-ones 2x2 valid kernel sums the entries") {
  auto x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), false);
  auto w = make_leaf(Tensor::full({1, 1, 2, 2}, 1.0f), false);
  auto y = conv2d(x, w, Var{}, 1, Padding::Valid);
  REQUIRE(y->value.shape() == Shape{1, 1, 1, 1});
  CHECK(y->value[0] == 10.0f);
}

TEST_CASE("conv2d same padding with stride 1 preserves spatial dims") {
  for (int hw : {5, 7, 11}) {
    auto x = make_leaf(test::random_tensor<float>({2, 3, hw, hw}, 7), false);
    auto w = make_leaf(test::random_tensor<float>({4, 3, 3, 3}, 8), false);
    auto b = make_leaf(Tensor({4}), false);
    auto y = conv2d(x, w, b, 1, Padding::Same);
    CHECK(y->value.shape() == Shape{2, 4, hw, hw});
  }
}

TEST_CASE("conv2d rejects bad shapes") {
  auto x = make_leaf(test::random_tensor<float>({1, 3, 4, 4}, 1), false);
  auto w_bad = make_leaf(test::random_tensor<float>({2, 5, 3, 3}, 2), false);
  CHECK_THROWS_AS(conv2d(x, w_bad, Var{}, 1, Padding::Same), ShapeError);
  auto w_big = make_leaf(test::random_tensor<float>({2, 3, 5, 5}, 2), false);
  CHECK_THROWS_AS(conv2d(x, w_big, Var{}, 1, Padding::Valid), ShapeError);  // zero-sized output
  auto w_even = make_leaf(test::random_tensor<float>({2, 3, 2, 2}, 2), false);
  CHECK_THROWS_AS(conv2d(x, w_even, Var{}, 1, Padding::Same), ShapeError);  // even kernel
}

TEST_CASE("relu clamps negatives") {
  auto x = make_leaf(Tensor({3}, {-1, 0, 2}), false);
  auto y = relu(x);
  CHECK(y->value[0] == 0.0f);
  CHECK(y->value[1] == 0.0f);
  CHECK(y->value[2] == 2.0f);

  auto all_neg = make_leaf(Tensor({4}, {-5, -1, -0.5f, -2}), false);
  auto z = relu(all_neg);
  for (std::size_t i = 0; i < 4; ++i) CHECK(z->value[i] == 0.0f);
}

TEST_CASE("maxpool takes the window maximum") {
  auto x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), false);
  auto y = maxpool2d(x, 2, 2);
  REQUIRE(y->value.shape() == Shape{1, 1, 1, 1});
  CHECK(y->value[0] == 4.0f);

  auto c = make_leaf(Tensor::full({1, 2, 4, 4}, 3.5f), false);
  auto yc = maxpool2d(c, 2, 2);
  for (std::size_t i = 0; i < yc->value.size(); ++i) CHECK(yc->value[i] == 3.5f);

  CHECK_THROWS_AS(maxpool2d(x, 3, 1), ShapeError);  // window larger than input
}

TEST_CASE("maxpool ties route gradient to the first maximum in row-major order") {
  auto x = make_leaf(Tensor({1, 1, 2, 2}, {7, 7, 7, 7}), true);
  auto y = maxpool2d(x, 2, 2);
  auto loss = sum_all(y);
  backward(loss);
  CHECK(x->grad[0] == 1.0f);
  CHECK(x->grad[1] == 0.0f);
  CHECK(x->grad[2] == 0.0f);
  CHECK(x->grad[3] == 0.0f);
}

TEST_CASE("global average pool averages each channel") {
  auto x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), false);
  auto y = global_avg_pool(x);
  REQUIRE(y->value.shape() == Shape{1, 1});
  CHECK(y->value[0] == doctest::Approx(2.5));

  auto one = make_leaf(Tensor({2, 3, 1, 1}, {1, 2, 3, 4, 5, 6}), false);
  auto y1 = global_avg_pool(one);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y1->value[i] == one->value[i]);
}

TEST_CASE("batch norm normalizes to zero mean unit variance") {
  // one channel, batch values {1, 3}: mean 2, population std 1
  auto x = make_leaf(Tensor({2, 1, 1, 1}, {1, 3}), false);
  auto gamma = make_leaf(Tensor::full({1}, 1.0f), false);
  auto beta = make_leaf(Tensor({1}), false);
  auto y = batch_norm<float>(x, gamma, beta, nullptr, BnMode::Train, 1e-12f);
  CHECK(y->value[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(y->value[1] == doctest::Approx(+1.0).epsilon(1e-5));

  auto gamma2 = make_leaf(Tensor::full({1}, 2.0f), false);
  auto beta5 = make_leaf(Tensor::full({1}, 5.0f), false);
  auto y2 = batch_norm<float>(x, gamma2, beta5, nullptr, BnMode::Train, 1e-12f);
  CHECK(y2->value[0] == doctest::Approx(2.0 * -1.0 + 5.0).epsilon(1e-5));
  CHECK(y2->value[1] == doctest::Approx(2.0 * +1.0 + 5.0).epsilon(1e-5));
}

TEST_CASE("batch norm running stats: train updates them, infer consumes them") {
  BnStateT<float> state{Tensor({1}), Tensor::full({1}, 1.0f)};
  auto x = make_leaf(Tensor({2, 1, 1, 1}, {1, 3}), false);
  auto gamma = make_leaf(Tensor::full({1}, 1.0f), false);
  auto beta = make_leaf(Tensor({1}), false);
  batch_norm(x, gamma, beta, &state, BnMode::Train, 1e-5f, 0.9f);
  // running <- 0.9*running + 0.1*batch
  CHECK(state.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 2.0));
  CHECK(state.running_var[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));

  // constructed so running stats equal batch stats: train == infer output
  BnStateT<float> match{Tensor::full({1}, 2.0f), Tensor::full({1}, 1.0f)};
  auto yt = batch_norm(x, gamma, beta, &match, BnMode::Train, 1e-5f, 1.0f);
  BnStateT<float> match2{Tensor::full({1}, 2.0f), Tensor::full({1}, 1.0f)};
  auto yi = batch_norm(x, gamma, beta, &match2, BnMode::Infer, 1e-5f, 1.0f);
  CHECK(yt->value[0] == yi->value[0]);
  CHECK(yt->value[1] == yi->value[1]);
}

TEST_CASE("fully connected computes xW + b") {
  auto x = make_leaf(Tensor({1, 2}, {1, 2}), false);
  auto w = make_leaf(Tensor({2, 1}, {1, 1}), false);
  auto b = make_leaf(Tensor({1}, {3}), false);
  auto y = fully_connected(x, w, b);
  CHECK(y->value[0] == 6.0f);

  auto eye = make_leaf(Tensor({2, 2}, {1, 0, 0, 1}), false);
  auto xb = make_leaf(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}), false);
  auto zb = make_leaf(Tensor({2}), false);
  auto y2 = fully_connected(xb, eye, zb);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y2->value[i] == xb->value[i]);

  auto w_bad = make_leaf(Tensor({3, 1}, {1, 1, 1}), false);
  CHECK_THROWS_AS(fully_connected(x, w_bad, Var{}), ShapeError);
}

TEST_CASE("add is elementwise and x + 0 = x") {
  auto x = make_leaf(Tensor({2}, {1, 2}), false);
  auto y = make_leaf(Tensor({2}, {3, 4}), false);
  auto s = add(x, y);
  CHECK(s->value[0] == 4.0f);
  CHECK(s->value[1] == 6.0f);

  auto zero = make_leaf(Tensor({2}), false);
  auto id = add(x, zero);
  CHECK(id->value[0] == x->value[0]);
  CHECK(id->value[1] == x->value[1]);

  auto bad = make_leaf(Tensor({3}), false);
  CHECK_THROWS_AS(add(x, bad), ShapeError);
}

TEST_CASE("add duplicates the upstream gradient to both inputs") {
  auto x = make_leaf(Tensor({2}, {1, 2}), true);
  auto y = make_leaf(Tensor({2}, {3, 4}), true);
  auto loss = sum_all(add(x, y));
  backward(loss);
  for (int i = 0; i < 2; ++i) {
    CHECK(x->grad[static_cast<std::size_t>(i)] == 1.0f);
    CHECK(y->grad[static_cast<std::size_t>(i)] == 1.0f);
  }
}

TEST_CASE("concat_channels keeps order and slices gradients back") {
  auto a = make_leaf(test::random_tensor<float>({1, 2, 2, 2}, 3), true);
  auto b = make_leaf(test::random_tensor<float>({1, 3, 2, 2}, 4), true);
  auto y = concat_channels<float>({a, b});
  REQUIRE(y->value.shape() == Shape{1, 5, 2, 2});
  for (std::size_t i = 0; i < a->value.size(); ++i) CHECK(y->value[i] == a->value[i]);
  for (std::size_t i = 0; i < b->value.size(); ++i)
    CHECK(y->value[a->value.size() + i] == b->value[i]);

  // single part is the identity
  auto solo = concat_channels<float>({a});
  CHECK(std::memcmp(solo->value.data(), a->value.data(), a->value.size() * sizeof(float)) == 0);

  // round trip: weighted sums of slices match gradients routed back
  auto loss = sum_all(y);
  backward(loss);
  for (std::size_t i = 0; i < a->value.size(); ++i) CHECK(a->grad[i] == 1.0f);
  for (std::size_t i = 0; i < b->value.size(); ++i) CHECK(b->grad[i] == 1.0f);

  auto mism = make_leaf(test::random_tensor<float>({1, 2, 3, 2}, 5), false);
  CHECK_THROWS_AS(concat_channels<float>({a, mism}), ShapeError);
}

TEST_CASE("softmax rows are probability vectors") {
  auto x = make_leaf(Tensor({2, 2}, {0, 0, 0, std::log(3.0f)}), false);
  auto p = softmax(x);
  CHECK(p->value.at2(0, 0) == doctest::Approx(0.5));
  CHECK(p->value.at2(0, 1) == doctest::Approx(0.5));
  CHECK(p->value.at2(1, 0) == doctest::Approx(0.25));
  CHECK(p->value.at2(1, 1) == doctest::Approx(0.75));
}

TEST_CASE("softmax is shift invariant and rows sum to one") {
  auto x = make_leaf(test::random_tensor<float>({4, 6}, 11, 3.0f), false);
  auto p = softmax(x);
  Tensor shifted = x->value;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) shifted.at2(i, j) += 17.25f;
  auto p2 = softmax(make_leaf(shifted, false));
  for (int i = 0; i < 4; ++i) {
    double row = 0;
    for (int j = 0; j < 6; ++j) {
      row += p->value.at2(i, j);
      CHECK(p->value.at2(i, j) == doctest::Approx(p2->value.at2(i, j)).epsilon(1e-6));
      CHECK(p->value.at2(i, j) > 0.0f);
      CHECK(p->value.at2(i, j) <= 1.0f);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("cross entropy of uniform binary probabilities is ln 2") {
  auto p = make_leaf(Tensor({1, 2}, {0.5f, 0.5f}), false);
  auto loss = cross_entropy(p, {0});
  CHECK(loss->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  auto sure = make_leaf(Tensor({1, 2}, {0.0f, 1.0f}), false);
  auto zero = cross_entropy(sure, {1});
  CHECK(zero->value[0] == doctest::Approx(0.0));

  CHECK_THROWS_AS(cross_entropy(p, {2}), ShapeError);       // label out of range
  auto unnorm = make_leaf(Tensor({1, 2}, {0.9f, 0.5f}), false);
  CHECK_THROWS_AS(cross_entropy(unnorm, {0}), ShapeError);  // rows must sum to 1
}

TEST_CASE("backward of sum gives all-ones gradient") {
  auto x = make_leaf(test::random_tensor<float>({3, 4}, 21), true);
  auto loss = sum_all(x);
  backward(loss);
  for (std::size_t i = 0; i < x->value.size(); ++i) CHECK(x->grad[i] == 1.0f);
}

TEST_CASE("fan-out accumulates: d(x+x)/dx = 2") {
  auto x = make_leaf(Tensor({1}, {3}), true);
  auto loss = sum_all(add(x, x));
  backward(loss);
  CHECK(x->grad[0] == 2.0f);
}

TEST_CASE("backward called twice without zeroing doubles every gradient") {
  auto x = make_leaf(test::random_tensor<float>({2, 3}, 31), true);
  auto y = relu(x);
  auto loss = sum_all(y);
  backward(loss);
  Tensor first = x->grad;
  backward(loss);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(x->grad[i] == 2.0f * first[i]);
}

TEST_CASE("backward rejects a non-scalar root") {
  auto x = make_leaf(test::random_tensor<float>({2, 2}, 41), true);
  auto y = relu(x);
  CHECK_THROWS_AS(backward(y), ShapeError);
}

TEST_CASE("forward ops are deterministic on the serial path") {
  auto prev = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Serial);
  auto x = make_leaf(test::random_tensor<float>({2, 3, 8, 8}, 55), false);
  auto w = make_leaf(test::random_tensor<float>({4, 3, 3, 3}, 56), false);
  auto b = make_leaf(test::random_tensor<float>({4}, 57), false);
  auto y1 = conv2d(x, w, b, 1, Padding::Same);
  auto y2 = conv2d(x, w, b, 1, Padding::Same);
  CHECK(std::memcmp(y1->value.data(), y2->value.data(), y1->value.size() * sizeof(float)) == 0);
  kernels::set_backend(prev);
}

TEST_CASE("avgpool averages windows (provided, unused by presets)") {
  auto x = make_leaf(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), false);
  auto y = avgpool2d(x, 2, 2);
  CHECK(y->value[0] == doctest::Approx(2.5));
}

}  // TEST_SUITE
