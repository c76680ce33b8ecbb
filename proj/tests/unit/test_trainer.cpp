#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dcnn/builders.hpp"
#include "dcnn/image.hpp"
#include "dcnn/io.hpp"
#include "dcnn/train.hpp"
#include "gradcheck.hpp"
#include "testutil.hpp"

using namespace dcnn;

namespace {

// 8x8 images, 3 classes of splits, tiny diacnn: everything a train-loop
// test needs in well under a second.
struct TinyTask {
  test::TempDir tmp{"trainer"};
  Dataset ds;
  ModelSpec spec = build_diacnn(4, 2, 8, 8);
  PreprocessConfig pre;

  TinyTask() {
    std::string csv = "image_path,eye,label,split\n";
    Rng64 rng(33);
    for (int i = 0; i < 16; ++i) {
      Tensor img({8, 8, 3});
      const float base = i % 2 ? 40.0f : 200.0f;
      for (std::size_t t = 0; t < img.size(); ++t)
        img[t] = std::clamp(base + static_cast<float>(rng.normal()) * 25.0f, 0.0f, 255.0f);
      const std::string name = "t" + std::to_string(i) + ".png";
      encode_png(img, tmp.str(name));
      const char* split = i < 10 ? "train" : (i < 13 ? "val" : "test");
      csv += tmp.str(name) + ",left," + (i % 2 ? "C" : "N") + "," + split + "\n";
    }
    io::write_text_file(tmp.str("m.csv"), csv);
    ds = binary_task_filter(load_manifest(tmp.str("m.csv")), {"C"}, {"N"});
    pre.resize_h = pre.resize_w = 8;
    pre.equalize = false;
    pre.augment = {0.0, {1.0, 1.0}, 0.0};
  }
};

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("sgd step: p -= lr * g, frozen parameters untouched") {
  ParamStoreT<double> params;
  params.insert("a", TensorD({1}, {1.0}), true);
  params.insert("b", TensorD({1}, {2.0}), false);
  params.entry("a").var->grad = TensorD({1}, {0.5});
  params.entry("b").var->grad = TensorD({1}, {100.0});
  sgd_step(params, 0.1);
  CHECK(params.var("a")->value[0] == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(params.var("b")->value[0] == 2.0);

  sgd_step(params, 0.0);  // lr = 0 leaves params unchanged
  CHECK(params.var("a")->value[0] == doctest::Approx(0.95).epsilon(1e-15));

  ParamStoreT<double> missing;
  missing.insert("w", TensorD({1}, {1.0}), true);
  CHECK_THROWS_AS(sgd_step(missing, 0.1), ModelError);
}

TEST_CASE("adam first step moves by about lr, zero gradient moves nothing") {
  ParamStoreT<double> params;
  params.insert("p", TensorD({1}, {1.0}), true);
  params.entry("p").var->grad = TensorD({1}, {0.5});
  AdamStateT<double> state;
  adam_step(params, state, 1e-3);
  // bias-corrected mhat/sqrt(vhat) = sign(g) up to eps on the first step
  CHECK(params.var("p")->value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-7));
  CHECK(state.t == 1);

  ParamStoreT<double> zero;
  zero.insert("p", TensorD({1}, {3.0}), true);
  zero.entry("p").var->grad = TensorD({1}, {0.0});
  AdamStateT<double> zstate;
  adam_step(zero, zstate, 1e-3);
  CHECK(zero.var("p")->value[0] == 3.0);
}

TEST_CASE("adam 10-step trajectory matches the hand recurrence to 1e-12") {
  // quadratic f(p) = p^2/2, gradient p
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ParamStoreT<double> params;
  params.insert("p", TensorD({1}, {1.0}), true);
  AdamStateT<double> state;

  double p_ref = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 10; ++t) {
    const double g = params.var("p")->value[0];
    params.entry("p").var->zero_grad();
    params.entry("p").var->grad = TensorD({1}, {g});
    adam_step(params, state, lr, b1, b2, eps);

    const double g_ref = p_ref;
    m = b1 * m + (1 - b1) * g_ref;
    v = b2 * v + (1 - b2) * g_ref * g_ref;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    p_ref -= lr * mhat / (std::sqrt(vhat) + eps);

    CHECK(params.var("p")->value[0] == doctest::Approx(p_ref).epsilon(1e-12));
  }
}

TEST_CASE("adam rejects moment shape changes") {
  ParamStoreT<double> params;
  params.insert("p", TensorD({2}, {1.0, 2.0}), true);
  params.entry("p").var->grad = TensorD({2}, {0.1, 0.2});
  AdamStateT<double> state;
  adam_step(params, state, 1e-3);
  state.slots["p"].m = TensorD({3});
  CHECK_THROWS_AS(adam_step(params, state, 1e-3), ModelError);
}

TEST_CASE("step halving follows the closed form") {
  CHECK(step_halving_lr(1e-4, 0) == doctest::Approx(1e-4));
  CHECK(step_halving_lr(1e-4, 4) == doctest::Approx(1e-4));
  CHECK(step_halving_lr(1e-4, 5) == doctest::Approx(5e-5));
  CHECK(step_halving_lr(1e-4, 12, 5) == doctest::Approx(2.5e-5));
  for (int e = 0; e < 30; ++e)
    CHECK(step_halving_lr(0.02, e, 5) ==
          doctest::Approx(0.02 * std::pow(0.5, e / 5)).epsilon(1e-15));
}

TEST_CASE("plateau reduction fires exactly when the stall rule says") {
  // val_acc [0.80, 0.800, 0.800], patience 2: fires after epoch 3
  CHECK(plateau_reduce({0.80, 0.800, 0.800}, "val_acc", 1e-3, 0.3, 2, 0.001) ==
        doctest::Approx(3e-4));
  CHECK(plateau_reduce({0.80, 0.800}, "val_acc", 1e-3, 0.3, 2, 0.001) == doctest::Approx(1e-3));
  // monotone improvement never reduces
  CHECK(plateau_reduce({0.1, 0.2, 0.3, 0.4, 0.5}, "val_acc", 1e-3) == doctest::Approx(1e-3));
  // improvement of exactly min_delta does not reset the stall
  // (binary-exact values so the comparison really is an equality case)
  CHECK(plateau_reduce({0.5, 0.75, 1.0}, "val_acc", 1e-3, 0.3, 2, 0.25) == doctest::Approx(3e-4));
  // loss-style monitor improves downward
  CHECK(plateau_reduce({1.0, 0.5, 0.25}, "val_loss", 1e-3) == doctest::Approx(1e-3));
}

TEST_CASE("early stopping mirrors the same stall rule") {
  CHECK_FALSE(early_stop_check({0.1, 0.2, 0.3}, "val_acc", 2, 0.001));
  CHECK(early_stop_check({0.5, 0.5, 0.5}, "val_acc", 2, 0.001));
  CHECK_FALSE(early_stop_check({0.5, 0.5}, "val_acc", 2, 0.001));
  // pure function of the history
  CHECK(early_stop_check({0.5, 0.5, 0.5}, "val_acc", 2, 0.001) ==
        early_stop_check({0.5, 0.5, 0.5}, "val_acc", 2, 0.001));
}

TEST_CASE("history csv round trips") {
  History h;
  h.epochs.push_back({1, 0.9, 0.5, 0.8, 0.6, 1e-3});
  h.epochs.push_back({2, 0.5, 0.8, 0.7, 0.7, 5e-4});
  History back = History::from_csv(h.to_csv());
  REQUIRE(back.epochs.size() == 2);
  CHECK(back.epochs[1].train_acc == doctest::Approx(0.8));
  CHECK(back.epochs[1].lr == doctest::Approx(5e-4));
}

TEST_CASE("train loop: deterministic, complete history, best epoch rule") {
  TinyTask task;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.base_lr = 1e-3;
  cfg.seed = 5;

  ParamStore p1;
  BnStats s1;
  init_params(task.spec, cfg.seed, p1, s1);
  auto r1 = train_loop(task.spec, p1, s1, task.ds, task.pre, cfg);

  ParamStore p2;
  BnStats s2;
  init_params(task.spec, cfg.seed, p2, s2);
  auto r2 = train_loop(task.spec, p2, s2, task.ds, task.pre, cfg);

  CHECK(r1.history.to_csv() == r2.history.to_csv());
  CHECK(param_checksum(p1) == param_checksum(p2));
  CHECK(r1.history.epochs.size() == 3);

  // best epoch is the first maximum of the monitored metric
  const auto accs = r1.history.metric("val_acc");
  int expect = 1;
  for (std::size_t i = 1; i < accs.size(); ++i)
    if (accs[i] > accs[static_cast<std::size_t>(expect - 1)]) expect = static_cast<int>(i) + 1;
  CHECK(r1.best_epoch == expect);
  CHECK(r1.history.best_epoch == expect);
}

TEST_CASE("all-frozen training leaves every parameter bitwise unchanged") {
  TinyTask task;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.seed = 6;

  ParamStore params;
  BnStats stats;
  init_params(task.spec, cfg.seed, params, stats);
  set_trainable(params, {std::string()}, false);
  const auto before = param_checksum(params);
  train_loop(task.spec, params, stats, task.ds, task.pre, cfg);
  CHECK(param_checksum(params) == before);
}

TEST_CASE("lr 0 training is a no-op on parameters") {
  TinyTask task;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 8;
  cfg.base_lr = 1e-9;  // validate() requires > 0; emulate 0 via sgd at 0 below

  ParamStore params;
  BnStats stats;
  init_params(task.spec, cfg.seed, params, stats);
  const auto before = param_checksum(params);

  // direct check of the optimizer contract at lr = 0
  BatchIter iter(task.ds, Split::Train, 4, 1, task.pre, true);
  auto batch = iter.next();
  REQUIRE(batch);
  params.zero_grad();
  auto fwd = forward(task.spec, params, stats, batch->images, BnMode::Train);
  auto loss = cross_entropy(fwd.probs, batch->labels);
  backward(loss);
  sgd_step(params, 0.0f);
  CHECK(param_checksum(params) == before);
}

TEST_CASE("recorded lr equals schedule-then-plateau composition") {
  TinyTask task;
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.batch_size = 8;
  cfg.seed = 9;
  cfg.base_lr = 1e-2;
  cfg.step_halving = true;
  cfg.halving_period = 2;
  cfg.plateau.enabled = true;
  cfg.plateau.patience = 1;
  cfg.plateau.factor = 0.5;
  cfg.monitor = "val_acc";

  ParamStore params;
  BnStats stats;
  init_params(task.spec, cfg.seed, params, stats);
  auto r = train_loop(task.spec, params, stats, task.ds, task.pre, cfg);

  PlateauTracker plateau(cfg.plateau, cfg.monitor);
  for (std::size_t e = 0; e < r.history.epochs.size(); ++e) {
    const double expect =
        step_halving_lr(cfg.base_lr, static_cast<int>(e), cfg.halving_period) *
        plateau.factor_product();
    CHECK(r.history.epochs[e].lr == doctest::Approx(expect).epsilon(1e-12));
    plateau.observe(r.history.epochs[e].val_acc);
  }
}

TEST_CASE("early stopping caps the history length") {
  TinyTask task;
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 10;
  cfg.early_stop.enabled = true;
  cfg.early_stop.patience = 2;
  cfg.early_stop.min_delta = 10.0;  // nothing can improve by this much: guaranteed stall

  ParamStore params;
  BnStats stats;
  init_params(task.spec, cfg.seed, params, stats);
  auto r = train_loop(task.spec, params, stats, task.ds, task.pre, cfg);
  CHECK(r.history.epochs.size() == 3);  // best at 1, stalls at 2 and 3, stop
}

TEST_CASE("val monitor with an empty val split is an error") {
  TinyTask task;
  for (auto& s : task.ds.samples)
    if (s.split == Split::Val) s.split = Split::Test;
  TrainConfig cfg;
  cfg.epochs = 1;
  ParamStore params;
  BnStats stats;
  init_params(task.spec, 1, params, stats);
  CHECK_THROWS_AS(train_loop(task.spec, params, stats, task.ds, task.pre, cfg), ModelError);

  cfg.monitor = "train_acc";  // train-metric monitoring works without val
  cfg.stop_at_monitor = 2.0;  // unreachable, just exercises the branch
  auto r = train_loop(task.spec, params, stats, task.ds, task.pre, cfg);
  CHECK(r.history.epochs.size() == 1);
  CHECK(std::isnan(r.history.epochs[0].val_acc));
}

TEST_CASE("evaluate is pure: identical outputs across calls") {
  TinyTask task;
  ParamStore params;
  BnStats stats;
  init_params(task.spec, 12, params, stats);
  auto a = evaluate(task.spec, params, stats, task.ds, Split::Test, task.pre, 4);
  auto b = evaluate(task.spec, params, stats, task.ds, Split::Test, task.pre, 4);
  CHECK(a.loss == b.loss);
  CHECK(a.acc == b.acc);
  CHECK(std::memcmp(a.probs.data(), b.probs.data(), a.probs.size() * sizeof(float)) == 0);
  CHECK(a.preds == b.preds);
  CHECK(a.features.dim(0) == 3);
}

}  // TEST_SUITE
