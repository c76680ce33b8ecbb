#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dcnn/checkpoint.hpp"
#include "dcnn/commands.hpp"
#include "dcnn/image.hpp"
#include "dcnn/io.hpp"
#include "dcnn/metrics.hpp"
#include "dcnn/rng.hpp"
#include "dcnn/train.hpp"
#include "gradcheck.hpp"
#include "testutil.hpp"

using namespace dcnn;
namespace fs = std::filesystem;

namespace {

// 24 tiny two-class images with manifest splits 14/4/6
std::string make_tiny_dataset(const test::TempDir& tmp) {
  std::string csv = "image_path,eye,label,split\n";
  Rng64 rng(77);
  for (int i = 0; i < 24; ++i) {
    Tensor img({8, 8, 3});
    const float base = i % 2 ? 50.0f : 190.0f;
    for (std::size_t t = 0; t < img.size(); ++t)
      img[t] = std::clamp(base + static_cast<float>(rng.normal()) * 20.0f, 0.0f, 255.0f);
    const std::string name = "c" + std::to_string(i) + ".png";
    encode_png(img, tmp.str(name));
    const char* split = i < 14 ? "train" : (i < 18 ? "val" : "test");
    csv += tmp.str(name) + ",left," + (i % 2 ? "C" : "N") + "," + split + "\n";
  }
  const std::string path = tmp.str("manifest.csv");
  io::write_text_file(path, csv);
  return path;
}

std::string tiny_config_json(const std::string& manifest, const std::string& out_dir,
                             double lr = 1e-3, int epochs = 2) {
  std::ostringstream ss;
  ss << R"({
  "dataset": {
    "manifest": ")" << manifest << R"(",
    "task": {"type": "binary", "positive": ["C"], "negative": ["N"]},
    "split_source": "manifest"
  },
  "preprocess": {
    "resize": [8, 8],
    "equalize": false,
    "augment": {"rotate_deg_max": 0, "zoom": [1.0, 1.0], "hflip_prob": 0}
  },
  "model": {"preset": "diacnn", "net_width": 4, "num_classes": 2},
  "train": {"optimizer": "adam", "base_lr": )" << lr << R"(, "batch_size": 8, "epochs": )"
     << epochs << R"(, "seed": 21},
  "output": {"dir": ")" << out_dir << R"("}
})";
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run config parsing is strict and defaulted") {
  test::TempDir tmp("cfg");
  const std::string manifest = make_tiny_dataset(tmp);

  auto cfg = RunConfig::from_json_text(tiny_config_json(manifest, tmp.str("out")));
  CHECK(cfg.model.net_width == 4);
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.beta1 == 0.9);          // default
  CHECK(cfg.train.monitor == "val_acc");  // default
  CHECK(cfg.preprocess.blur_sigma == 0);  // default

  std::string bad = tiny_config_json(manifest, tmp.str("out"));
  bad.insert(bad.find("\"model\""), "\"typo_key\": 1,\n  ");
  CHECK_THROWS_AS(RunConfig::from_json_text(bad), ConfigError);

  std::string mismatch = tiny_config_json(manifest, tmp.str("out"));
  mismatch.replace(mismatch.find("\"num_classes\": 2"), 16, "\"num_classes\": 8");
  CHECK_THROWS_AS(RunConfig::from_json_text(mismatch), ConfigError);

  CHECK_THROWS_AS(RunConfig::from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text("{}"), ConfigError);
}

TEST_CASE("prepare: deterministic output, exact counts, exit 2 on bad input") {
  test::TempDir tmp("prepare");
  std::string csv = "image_path,eye,label\n";
  for (int i = 0; i < 100; ++i) csv += "x" + std::to_string(i) + ".png,left,N\n";
  io::write_text_file(tmp.str("m.csv"), csv);

  std::ostringstream err;
  CHECK(cli::cmd_prepare(tmp.str("m.csv"), {0.8, 0.1, 0.1}, 7, false, tmp.str("out.csv"), err) == 0);
  const std::string first = io::read_text_file(tmp.str("out.csv"));
  CHECK(cli::cmd_prepare(tmp.str("m.csv"), {0.8, 0.1, 0.1}, 7, false, tmp.str("out2.csv"), err) == 0);
  CHECK(io::read_text_file(tmp.str("out2.csv")) == first);

  Dataset out = load_manifest(tmp.str("out.csv"));
  CHECK(out.split_size(Split::Train) == 80);
  CHECK(out.split_size(Split::Val) == 10);
  CHECK(out.split_size(Split::Test) == 10);

  io::write_text_file(tmp.str("bad.csv"), "image_path,eye,label\nx.png,left,WHAT\n");
  std::ostringstream err2;
  CHECK(cli::cmd_prepare(tmp.str("bad.csv"), {0.8, 0.1, 0.1}, 7, false, tmp.str("o.csv"), err2) ==
        cli::kExitUsage);
  CHECK(err2.str().find("line 2") != std::string::npos);
}

TEST_CASE("train: artifacts, snapshot fidelity, byte-identical reruns") {
  test::TempDir tmp("train");
  const std::string manifest = make_tiny_dataset(tmp);
  const std::string out_dir = tmp.str("run");
  const std::string config = tiny_config_json(manifest, out_dir);
  io::write_text_file(tmp.str("cfg.json"), config);

  std::ostringstream out, err;
  REQUIRE(cli::cmd_train(tmp.str("cfg.json"), out, err) == 0);

  for (const char* name : {"config.json", "history.csv", "best.ckpt", "final.ckpt", "metrics.csv",
                           "confusion.csv", "report.csv", "roc.csv", "run.log", "manifest.json"})
    CHECK(fs::exists(fs::path(out_dir) / name));

  CHECK(io::read_text_file(out_dir + "/config.json") == config);
  const History h = History::from_csv(io::read_text_file(out_dir + "/history.csv"));
  CHECK(h.epochs.size() == 2);

  const std::string history1 = io::read_text_file(out_dir + "/history.csv");
  const std::string best1 = io::read_text_file(out_dir + "/best.ckpt");
  const std::string final1 = io::read_text_file(out_dir + "/final.ckpt");

  std::ostringstream out2, err2;
  REQUIRE(cli::cmd_train(tmp.str("cfg.json"), out2, err2) == 0);
  CHECK(io::read_text_file(out_dir + "/history.csv") == history1);
  CHECK(io::read_text_file(out_dir + "/best.ckpt") == best1);
  CHECK(io::read_text_file(out_dir + "/final.ckpt") == final1);

  CHECK(cli::cmd_train(tmp.str("nope.json"), out, err) == cli::kExitUsage);
}

TEST_CASE("train: huge lr diverges with exit 3") {
  test::TempDir tmp("diverge");
  const std::string manifest = make_tiny_dataset(tmp);
  io::write_text_file(tmp.str("cfg.json"),
                      tiny_config_json(manifest, tmp.str("run"), /*lr=*/1e3, /*epochs=*/10));
  std::ostringstream out, err;
  CHECK(cli::cmd_train(tmp.str("cfg.json"), out, err) == cli::kExitNumeric);
  CHECK(err.str().find("non-finite") != std::string::npos);
}

TEST_CASE("evaluate: writes metric files consistent with the library") {
  test::TempDir tmp("eval");
  const std::string manifest = make_tiny_dataset(tmp);
  const std::string run_dir = tmp.str("run");
  io::write_text_file(tmp.str("cfg.json"), tiny_config_json(manifest, run_dir));
  std::ostringstream out, err;
  REQUIRE(cli::cmd_train(tmp.str("cfg.json"), out, err) == 0);

  const std::string eval_dir = tmp.str("evalout");
  REQUIRE(cli::cmd_evaluate(tmp.str("cfg.json"), run_dir + "/best.ckpt", "test", eval_dir, err) == 0);
  for (const char* name : {"metrics.csv", "confusion.csv", "report.csv", "roc.csv"})
    CHECK(fs::exists(fs::path(eval_dir) / name));

  // single source of truth: recompute through the library and compare
  auto cfg = RunConfig::load(tmp.str("cfg.json"));
  auto ckpt = load_checkpoint(run_dir + "/best.ckpt");
  Dataset ds = prepare_dataset(cfg);
  auto ev = evaluate(ckpt.model, ckpt.params, ckpt.stats, ds, Split::Test, cfg.preprocess,
                     cfg.train.batch_size);
  const auto cm = confusion_matrix(ev.preds, ev.labels, 1);
  const std::string confusion = io::read_text_file(eval_dir + "/confusion.csv");
  CHECK(confusion.find("Predicted positive," + std::to_string(cm.tp) + "," +
                       std::to_string(cm.fp)) != std::string::npos);
  CHECK(confusion.find("Predicted negative," + std::to_string(cm.fn) + "," +
                       std::to_string(cm.tn)) != std::string::npos);
  CHECK(confusion.find(",Actually positive,Actually negative") == 0);

  const auto m = metrics(cm);
  const std::string metrics_csv = io::read_text_file(eval_dir + "/metrics.csv");
  if (m.acc.defined)
    CHECK(metrics_csv.find(io::fmt_g(m.acc.value)) != std::string::npos);

  // checkpoint/config mismatch: different resize
  std::string wrong = tiny_config_json(manifest, run_dir);
  wrong.replace(wrong.find("[8, 8]"), 6, "[16, 16]");
  io::write_text_file(tmp.str("wrong.json"), wrong);
  std::ostringstream err2;
  CHECK(cli::cmd_evaluate(tmp.str("wrong.json"), run_dir + "/best.ckpt", "test", eval_dir, err2) ==
        cli::kExitUsage);
}

TEST_CASE("finetune: frozen backbone stays bitwise identical") {
  test::TempDir tmp("ft");
  const std::string manifest = make_tiny_dataset(tmp);
  const std::string run_dir = tmp.str("run");
  io::write_text_file(tmp.str("cfg.json"), tiny_config_json(manifest, run_dir));
  std::ostringstream out, err;
  REQUIRE(cli::cmd_train(tmp.str("cfg.json"), out, err) == 0);

  const std::string ft_dir = tmp.str("ft_run");
  io::write_text_file(tmp.str("ft.json"), tiny_config_json(manifest, ft_dir));
  REQUIRE(cli::cmd_finetune(tmp.str("ft.json"), run_dir + "/best.ckpt", "head_only", out, err) == 0);

  auto original = load_checkpoint(run_dir + "/best.ckpt");
  auto tuned = load_checkpoint(ft_dir + "/final.ckpt");
  const std::vector<std::string> head = {"head.fc."};
  CHECK(param_checksum(original.params, head) == param_checksum(tuned.params, head));
  CHECK(tuned.params.entry("head.fc.w").trainable);
  CHECK_FALSE(tuned.params.entry("stem.conv.w").trainable);

  std::ostringstream err2;
  CHECK(cli::cmd_finetune(tmp.str("ft.json"), run_dir + "/best.ckpt", "no.such.prefix", out,
                          err2) == cli::kExitUsage);
}

TEST_CASE("report: three SVGs plus tsne.csv, exit 2 when artifacts are missing") {
  test::TempDir tmp("report");
  const std::string manifest = make_tiny_dataset(tmp);
  const std::string run_dir = tmp.str("run");
  io::write_text_file(tmp.str("cfg.json"), tiny_config_json(manifest, run_dir));
  std::ostringstream out, err;
  REQUIRE(cli::cmd_train(tmp.str("cfg.json"), out, err) == 0);
  REQUIRE(cli::cmd_report(run_dir, err) == 0);

  for (const char* name : {"training_curve.svg", "roc.svg", "tsne.svg", "tsne.csv"})
    CHECK(fs::exists(fs::path(run_dir) / name));

  // one row per evaluated test sample (six) plus the header
  const std::string tsne_csv = io::read_text_file(run_dir + "/tsne.csv");
  std::size_t rows = 0;
  for (char c : tsne_csv) rows += c == '\n';
  CHECK(rows == 7);

  fs::remove(fs::path(run_dir) / "roc.csv");
  std::ostringstream err2;
  CHECK(cli::cmd_report(run_dir, err2) == cli::kExitUsage);
  CHECK(err2.str().find("roc.csv") != std::string::npos);
}

TEST_CASE("cli binary: exit codes for help and bad usage") {
  const std::string bin = DCNN_CLI_BIN;
  CHECK(std::system((bin + " --help > /dev/null 2>&1").c_str()) == 0);
  const int bad = std::system((bin + " frobnicate > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(bad) == cli::kExitUsage);
  const int noargs = std::system((bin + " train > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(noargs) == cli::kExitUsage);
}

}  // TEST_SUITE
