#include "dcnn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "dcnn/builders.hpp"
#include "dcnn/checkpoint.hpp"
#include "dcnn/image.hpp"
#include "dcnn/io.hpp"
#include "dcnn/metrics.hpp"
#include "dcnn/roc.hpp"
#include "dcnn/svg.hpp"
#include "dcnn/train.hpp"
#include "dcnn/tsne.hpp"

namespace dcnn::cli {

namespace fs = std::filesystem;

namespace {

const char* kPalette[8] = {"#1f6fb2", "#d9541e", "#2e8540", "#8b3fae",
                           "#b2901f", "#16a0a6", "#c23b61", "#5c6670"};

std::uint64_t fnv64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_artifact_manifest(const std::string& dir) {
  nlohmann::json files = nlohmann::json::array();
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const std::string bytes = io::read_text_file((fs::path(dir) / name).string());
    files.push_back({{"name", name}, {"bytes", bytes.size()}, {"fnv64", hex64(fnv64(bytes))}});
  }
  nlohmann::json j{{"files", files}};
  io::write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

std::string metric_cell(const MetricValue& v) { return v.defined ? io::fmt_g(v.value) : ""; }

/// metrics.csv, confusion.csv, report.csv, roc.csv for one evaluation.
void write_eval_artifacts(const std::string& dir, const EvalResult& ev,
                          const std::vector<std::string>& class_names) {
  const int k = static_cast<int>(class_names.size());

  std::string metrics_csv = "scope,sen,spec,acc,preci,f1,auc\n";
  std::string roc_csv = "class,fpr,tpr,threshold\n";
  if (k == 2) {
    const auto cm = confusion_matrix(ev.preds, ev.labels, 1);
    const auto m = metrics(cm);
    const auto curve = ovr_roc(ev.probs, ev.labels, 1);
    metrics_csv += "binary," + metric_cell(m.sen) + "," + metric_cell(m.spec) + "," +
                   metric_cell(m.acc) + "," + metric_cell(m.preci) + "," + metric_cell(m.f1) +
                   "," + io::fmt_g(auc(curve)) + "\n";
    for (const auto& p : curve.points)
      roc_csv += class_names[1] + "," + io::fmt_g(p.fpr) + "," + io::fmt_g(p.tpr) + "," +
                 io::fmt_g(p.threshold) + "\n";

    std::string confusion_csv = ",Actually positive,Actually negative\n";
    confusion_csv += "Predicted positive," + std::to_string(cm.tp) + "," + std::to_string(cm.fp) + "\n";
    confusion_csv += "Predicted negative," + std::to_string(cm.fn) + "," + std::to_string(cm.tn) + "\n";
    io::write_text_file((fs::path(dir) / "confusion.csv").string(), confusion_csv);
  } else {
    // one-vs-rest per class plus a macro row over the defined values
    double sums[5] = {0, 0, 0, 0, 0};
    int defined[5] = {0, 0, 0, 0, 0};
    double auc_sum = 0;
    int auc_n = 0;
    for (int c = 0; c < k; ++c) {
      std::vector<int> p1(ev.preds.size()), l1(ev.labels.size());
      for (std::size_t i = 0; i < ev.preds.size(); ++i) {
        p1[i] = ev.preds[i] == c;
        l1[i] = ev.labels[i] == c;
      }
      const auto m = metrics(confusion_matrix(p1, l1, 1));
      const MetricValue cells[5] = {m.sen, m.spec, m.acc, m.preci, m.f1};
      metrics_csv += class_names[static_cast<std::size_t>(c)];
      for (int t = 0; t < 5; ++t) {
        metrics_csv += "," + metric_cell(cells[t]);
        if (cells[t].defined) {
          sums[t] += cells[t].value;
          defined[t]++;
        }
      }
      bool present = false;
      for (int v : ev.labels) present = present || v == c;
      if (present) {
        const auto curve = ovr_roc(ev.probs, ev.labels, c);
        metrics_csv += "," + io::fmt_g(auc(curve));
        auc_sum += auc(curve);
        ++auc_n;
        for (const auto& p : curve.points)
          roc_csv += class_names[static_cast<std::size_t>(c)] + "," + io::fmt_g(p.fpr) + "," +
                     io::fmt_g(p.tpr) + "," + io::fmt_g(p.threshold) + "\n";
      } else {
        metrics_csv += ",";
      }
      metrics_csv += "\n";
    }
    metrics_csv += "macro";
    for (int t = 0; t < 5; ++t)
      metrics_csv += "," + (defined[t] ? io::fmt_g(sums[t] / defined[t]) : std::string());
    metrics_csv += "," + (auc_n ? io::fmt_g(auc_sum / auc_n) : std::string()) + "\n";

    std::string confusion_csv = "predicted\\actual";
    for (const auto& name : class_names) confusion_csv += "," + name;
    confusion_csv += "\n";
    std::vector<std::int64_t> grid(static_cast<std::size_t>(k) * k, 0);
    for (std::size_t i = 0; i < ev.preds.size(); ++i)
      grid[static_cast<std::size_t>(ev.preds[i]) * k + ev.labels[i]]++;
    for (int p = 0; p < k; ++p) {
      confusion_csv += class_names[static_cast<std::size_t>(p)];
      for (int a = 0; a < k; ++a)
        confusion_csv += "," + std::to_string(grid[static_cast<std::size_t>(p) * k + a]);
      confusion_csv += "\n";
    }
    io::write_text_file((fs::path(dir) / "confusion.csv").string(), confusion_csv);
  }

  io::write_text_file((fs::path(dir) / "metrics.csv").string(), metrics_csv);
  io::write_text_file((fs::path(dir) / "roc.csv").string(), roc_csv);
  io::write_text_file((fs::path(dir) / "report.csv").string(),
                      classification_report(ev.preds, ev.labels, class_names).to_csv());
}

ModelSpec build_from_config(const RunConfig& cfg) {
  return build_preset(cfg.model.preset, cfg.model.net_width, cfg.model.num_classes,
                      cfg.preprocess.resize_h, cfg.preprocess.resize_w);
}

void check_model_matches(const ModelSpec& model, const RunConfig& cfg) {
  if (model.input_shape != Shape{3, cfg.preprocess.resize_h, cfg.preprocess.resize_w})
    throw ConfigError("checkpoint expects input " + shape_str(model.input_shape) +
                      " but preprocess.resize gives 3x" + std::to_string(cfg.preprocess.resize_h) +
                      "x" + std::to_string(cfg.preprocess.resize_w));
  if (model.num_classes != cfg.dataset.task.num_classes())
    throw ConfigError("checkpoint has " + std::to_string(model.num_classes) +
                      " classes but the configured task has " +
                      std::to_string(cfg.dataset.task.num_classes()));
}

int run_training(const RunConfig& cfg, const std::string& config_bytes, ModelSpec model,
                 ParamStore& params, BnStats& stats, std::ostream& out, std::ostream& err,
                 const std::string& extra_log = {}) {
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  io::write_text_file((dir / "config.json").string(), config_bytes);

  std::ofstream log((dir / "run.log").string(), std::ios::trunc);
  if (!extra_log.empty()) log << extra_log;

  Dataset ds = prepare_dataset(cfg);
  log << "dataset: " << ds.size() << " samples (train " << ds.split_size(Split::Train) << ", val "
      << ds.split_size(Split::Val) << ", test " << ds.split_size(Split::Test) << ")\n";
  log << "model: " << model.preset << ", " << model.weighted_layer_count() << " weighted layers\n";
  log.flush();

  TrainResult result;
  try {
    result = train_loop(model, params, stats, ds, cfg.preprocess, cfg.train, &log,
                        (dir / "best.ckpt").string());
  } catch (const DivergenceError& e) {
    log << "aborted: " << e.what() << "\n";
    err << e.what() << "\n";
    io::write_text_file((dir / "history.csv").string(), History{}.to_csv());
    write_artifact_manifest(dir.string());
    return kExitNumeric;
  }

  io::write_text_file((dir / "history.csv").string(), result.history.to_csv());
  save_checkpoint(model, params, stats, (dir / "final.ckpt").string());
  log << "best epoch " << result.best_epoch << " (" << cfg.train.monitor << " "
      << io::fmt_g(result.best_metric) << ")\n";

  if (ds.split_size(Split::Test) > 0) {
    auto ev = evaluate(model, result.best_params, result.best_stats, ds, Split::Test,
                       cfg.preprocess, cfg.train.batch_size);
    write_eval_artifacts(dir.string(), ev, ds.class_names);
    log << "test: loss " << io::fmt_g(ev.loss) << " acc " << io::fmt_g(ev.acc) << "\n";
    out << "test accuracy " << io::fmt_g(ev.acc) << "\n";
  }

  log.close();
  write_artifact_manifest(dir.string());
  out << "run artifacts in " << dir.string() << "\n";
  return kExitOk;
}

int usage_error(std::ostream& err, const std::string& msg) {
  err << "error: " << msg << "\n";
  return kExitUsage;
}

}  // namespace

int cmd_prepare(const std::string& manifest_path, SplitRatios ratios, std::uint64_t seed,
                bool stratify, const std::string& out_path, std::ostream& err) {
  try {
    Dataset ds = load_manifest(manifest_path);
    split_dataset(ds, ratios, seed, stratify);
    save_manifest(ds, out_path);
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(err, e.what());
  }
}

int cmd_train(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = RunConfig::load(config_path);
    ModelSpec model = build_from_config(cfg);
    ParamStore params;
    BnStats stats;
    init_params(model, cfg.train.seed, params, stats);
    return run_training(cfg, io::read_text_file(config_path), std::move(model), params, stats, out,
                        err);
  } catch (const DivergenceError& e) {
    err << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    return usage_error(err, e.what());
  }
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& split, const std::string& out_dir, std::ostream& err) {
  try {
    const RunConfig cfg = RunConfig::load(config_path);
    auto ckpt = load_checkpoint(checkpoint_path);
    check_model_matches(ckpt.model, cfg);
    Dataset ds = prepare_dataset(cfg);
    const Split which = split_from(split);
    if (ds.split_size(which) == 0)
      return usage_error(err, "split '" + split + "' is empty");
    fs::create_directories(out_dir);
    auto ev = evaluate(ckpt.model, ckpt.params, ckpt.stats, ds, which, cfg.preprocess,
                       cfg.train.batch_size);
    write_eval_artifacts(out_dir, ev, ds.class_names);
    write_artifact_manifest(out_dir);
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(err, e.what());
  }
}

int cmd_finetune(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& freeze_selector, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = RunConfig::load(config_path);
    auto ckpt = load_checkpoint(checkpoint_path);
    check_model_matches(ckpt.model, cfg);

    std::vector<std::string> trainable_prefixes;
    if (freeze_selector == "head_only" || freeze_selector == "all" ||
        freeze_selector == "last_block") {
      trainable_prefixes =
          preset_trainable_prefixes(ckpt.model, freeze_preset_from(freeze_selector));
    } else {
      for (const auto& p : io::split_line(freeze_selector))
        if (!p.empty()) trainable_prefixes.push_back(p);
      if (trainable_prefixes.empty())
        return usage_error(err, "empty freeze selector");
    }
    set_trainable(ckpt.params, {std::string()}, false);
    set_trainable(ckpt.params, trainable_prefixes, true);

    const std::uint64_t frozen_before = param_checksum(ckpt.params, trainable_prefixes);
    std::string note = "finetune from " + checkpoint_path + ", trainable prefixes:";
    for (const auto& p : trainable_prefixes) note += " " + p;
    note += "\nfrozen-parameter checksum before: " + hex64(frozen_before) + "\n";

    const int rc = run_training(cfg, io::read_text_file(config_path), ckpt.model, ckpt.params,
                                ckpt.stats, out, err, note);
    if (rc != kExitOk) return rc;

    const std::uint64_t frozen_after = param_checksum(ckpt.params, trainable_prefixes);
    std::ofstream log((fs::path(cfg.output.dir) / "run.log").string(), std::ios::app);
    log << "frozen-parameter checksum after: " << hex64(frozen_after) << "\n";
    if (frozen_before != frozen_after) {
      err << "error: frozen parameters changed during fine-tuning\n";
      return kExitNumeric;
    }
    return kExitOk;
  } catch (const DivergenceError& e) {
    err << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    return usage_error(err, e.what());
  }
}

int cmd_report(const std::string& run_dir, std::ostream& err) {
  try {
    const fs::path dir(run_dir);
    for (const char* name : {"config.json", "history.csv", "roc.csv", "best.ckpt"})
      if (!fs::exists(dir / name))
        return usage_error(err, "missing artifact file: " + (dir / name).string());

    // training curves
    const History history = History::from_csv(io::read_text_file((dir / "history.csv").string()));
    std::vector<SvgSeries> curves;
    const char* names[4] = {"train_loss", "val_loss", "train_acc", "val_acc"};
    for (int i = 0; i < 4; ++i) {
      SvgSeries s;
      s.label = names[i];
      s.color = kPalette[i];
      for (const auto& e : history.epochs) {
        const double v = i == 0   ? e.train_loss
                         : i == 1 ? e.val_loss
                         : i == 2 ? e.train_acc
                                  : e.val_acc;
        if (std::isfinite(v)) s.points.push_back({static_cast<double>(e.epoch), v});
      }
      if (!s.points.empty()) curves.push_back(std::move(s));
    }
    write_svg_chart((dir / "training_curve.svg").string(), "Training progress", "epoch", "value",
                    curves);

    // roc curves
    std::vector<SvgSeries> roc_series;
    {
      const std::string text = io::read_text_file((dir / "roc.csv").string());
      std::size_t pos = text.find('\n');
      std::map<std::string, SvgSeries> by_class;
      int color = 0;
      while (pos != std::string::npos && pos + 1 < text.size()) {
        const std::size_t end = text.find('\n', pos + 1);
        const std::string line =
            text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
        pos = end;
        if (line.empty()) continue;
        auto cols = io::split_line(line);
        if (cols.size() != 4) continue;
        auto& s = by_class[cols[0]];
        if (s.points.empty()) {
          s.label = "class " + cols[0];
          s.color = kPalette[color++ % 8];
        }
        s.points.push_back({std::strtod(cols[1].c_str(), nullptr),
                            std::strtod(cols[2].c_str(), nullptr)});
      }
      for (auto& [name, s] : by_class) roc_series.push_back(std::move(s));
      SvgSeries diag;
      diag.label = "chance";
      diag.color = "#999999";
      diag.points = {{0, 0}, {1, 1}};
      roc_series.push_back(std::move(diag));
    }
    write_svg_chart((dir / "roc.svg").string(), "ROC", "false positive rate", "true positive rate",
                    roc_series);

    // t-SNE of penultimate features on the evaluated (test) split
    const RunConfig cfg =
        RunConfig::from_json_text(io::read_text_file((dir / "config.json").string()));
    auto ckpt = load_checkpoint((dir / "best.ckpt").string());
    Dataset ds = prepare_dataset(cfg);
    auto ev = evaluate(ckpt.model, ckpt.params, ckpt.stats, ds, Split::Test, cfg.preprocess,
                       cfg.train.batch_size);
    const int n = ev.features.dim(0), d = ev.features.dim(1);
    std::vector<double> feats(ev.features.size());
    for (std::size_t i = 0; i < feats.size(); ++i) feats[i] = ev.features[i];
    TsneConfig tcfg;
    tcfg.seed = cfg.train.seed;
    if (tcfg.perplexity > (n - 1) / 3.0) tcfg.perplexity = std::max(1.0, (n - 1) / 3.0);
    const auto emb = tsne(feats, n, d, tcfg);
    io::write_text_file((dir / "tsne.csv").string(), embedding_to_csv(emb, ev.labels));

    std::map<int, SvgSeries> scatter;
    for (std::size_t i = 0; i < emb.points.size(); ++i) {
      auto& s = scatter[ev.labels[i]];
      if (s.points.empty()) {
        s.label = "class " + ds.class_names[static_cast<std::size_t>(ev.labels[i])];
        s.color = kPalette[ev.labels[i] % 8];
        s.draw_line = false;
        s.draw_points = true;
      }
      s.points.push_back({emb.points[i][0], emb.points[i][1]});
    }
    std::vector<SvgSeries> scatter_series;
    for (auto& [label, s] : scatter) scatter_series.push_back(std::move(s));
    write_svg_chart((dir / "tsne.svg").string(), "t-SNE of penultimate features", "dim 1", "dim 2",
                    scatter_series);

    write_artifact_manifest(dir.string());
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(err, e.what());
  }
}

}  // namespace dcnn::cli
