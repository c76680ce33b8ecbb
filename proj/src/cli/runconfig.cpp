#include "dcnn/runconfig.hpp"

#include <filesystem>
#include <set>

#include <json.hpp>

#include "dcnn/io.hpp"

namespace dcnn {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& ctx, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(ctx + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + ctx);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

TaskConfig parse_task(const json& j) {
  TaskConfig t;
  check_keys(j, "dataset.task", {"type", "positive", "negative"});
  const std::string type = get_or<std::string>(j, "type", "multiclass");
  if (type == "multiclass") {
    t.type = TaskConfig::Type::Multiclass;
    if (j.contains("positive") || j.contains("negative"))
      throw ConfigError("dataset.task: positive/negative only apply to the binary type");
  } else if (type == "binary") {
    t.type = TaskConfig::Type::Binary;
    t.positive = get_or<std::vector<std::string>>(j, "positive", {});
    t.negative = get_or<std::vector<std::string>>(j, "negative", {});
    if (t.positive.empty() || t.negative.empty())
      throw ConfigError("dataset.task: binary type needs positive and negative class lists");
  } else {
    throw ConfigError("dataset.task.type must be 'multiclass' or 'binary'");
  }
  return t;
}

DatasetConfig parse_dataset(const json& j) {
  DatasetConfig d;
  check_keys(j, "dataset",
             {"manifest", "task", "ratios", "seed", "stratify", "split_source"});
  if (!j.contains("manifest")) throw ConfigError("dataset.manifest is required");
  d.manifest = j.at("manifest").get<std::string>();
  if (j.contains("task")) d.task = parse_task(j.at("task"));
  if (j.contains("ratios")) {
    auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw ConfigError("dataset.ratios must have three entries");
    d.ratios = {r[0], r[1], r[2]};
  }
  d.seed = get_or<std::uint64_t>(j, "seed", d.seed);
  d.stratify = get_or<bool>(j, "stratify", d.stratify);
  const std::string src = get_or<std::string>(j, "split_source", "ratios");
  if (src == "ratios")
    d.split_source = DatasetConfig::SplitSource::Ratios;
  else if (src == "manifest")
    d.split_source = DatasetConfig::SplitSource::Manifest;
  else
    throw ConfigError("dataset.split_source must be 'ratios' or 'manifest'");
  return d;
}

PreprocessConfig parse_preprocess(const json& j) {
  PreprocessConfig p;
  check_keys(j, "preprocess", {"resize", "equalize", "blur_sigma", "normalize01", "augment", "seed"});
  if (j.contains("resize")) {
    auto r = j.at("resize").get<std::vector<int>>();
    if (r.size() != 2) throw ConfigError("preprocess.resize must be [h, w]");
    p.resize_h = r[0];
    p.resize_w = r[1];
  }
  p.equalize = get_or<bool>(j, "equalize", p.equalize);
  p.blur_sigma = get_or<double>(j, "blur_sigma", p.blur_sigma);
  p.normalize01 = get_or<bool>(j, "normalize01", p.normalize01);
  p.seed = get_or<std::uint64_t>(j, "seed", p.seed);
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    check_keys(a, "preprocess.augment", {"rotate_deg_max", "zoom", "hflip_prob"});
    p.augment.rotate_deg_max = get_or<double>(a, "rotate_deg_max", p.augment.rotate_deg_max);
    if (a.contains("zoom")) {
      auto z = a.at("zoom").get<std::vector<double>>();
      if (z.size() != 2) throw ConfigError("preprocess.augment.zoom must be [lo, hi]");
      p.augment.zoom_range = {z[0], z[1]};
    }
    p.augment.hflip_prob = get_or<double>(a, "hflip_prob", p.augment.hflip_prob);
  }
  return p;
}

ModelConfig parse_model(const json& j) {
  ModelConfig m;
  check_keys(j, "model", {"preset", "net_width", "num_classes"});
  m.preset = get_or<std::string>(j, "preset", m.preset);
  m.net_width = get_or<int>(j, "net_width", m.net_width);
  m.num_classes = get_or<int>(j, "num_classes", m.num_classes);
  return m;
}

TrainConfig parse_train(const json& j) {
  TrainConfig t;
  check_keys(j, "train",
             {"optimizer", "base_lr", "beta1", "beta2", "adam_eps", "batch_size", "epochs",
              "lr_schedule", "plateau", "early_stop", "monitor", "stop_at_monitor",
              "aux_loss_weight", "seed"});
  const std::string opt = get_or<std::string>(j, "optimizer", "adam");
  if (opt == "adam")
    t.optimizer = TrainConfig::Optimizer::Adam;
  else if (opt == "sgd")
    t.optimizer = TrainConfig::Optimizer::Sgd;
  else
    throw ConfigError("train.optimizer must be 'sgd' or 'adam'");
  t.base_lr = get_or<double>(j, "base_lr", t.base_lr);
  t.beta1 = get_or<double>(j, "beta1", t.beta1);
  t.beta2 = get_or<double>(j, "beta2", t.beta2);
  t.adam_eps = get_or<double>(j, "adam_eps", t.adam_eps);
  t.batch_size = get_or<int>(j, "batch_size", t.batch_size);
  t.epochs = get_or<int>(j, "epochs", t.epochs);
  if (j.contains("lr_schedule")) {
    const auto& s = j.at("lr_schedule");
    check_keys(s, "train.lr_schedule", {"type", "period"});
    const std::string type = get_or<std::string>(s, "type", "none");
    if (type == "step_halving") {
      t.step_halving = true;
      t.halving_period = get_or<int>(s, "period", t.halving_period);
    } else if (type != "none") {
      throw ConfigError("train.lr_schedule.type must be 'none' or 'step_halving'");
    }
  }
  if (j.contains("plateau")) {
    const auto& p = j.at("plateau");
    check_keys(p, "train.plateau", {"enabled", "factor", "patience", "min_delta"});
    t.plateau.enabled = get_or<bool>(p, "enabled", true);
    t.plateau.factor = get_or<double>(p, "factor", t.plateau.factor);
    t.plateau.patience = get_or<int>(p, "patience", t.plateau.patience);
    t.plateau.min_delta = get_or<double>(p, "min_delta", t.plateau.min_delta);
  }
  if (j.contains("early_stop")) {
    const auto& p = j.at("early_stop");
    check_keys(p, "train.early_stop", {"enabled", "patience", "min_delta"});
    t.early_stop.enabled = get_or<bool>(p, "enabled", true);
    t.early_stop.patience = get_or<int>(p, "patience", t.early_stop.patience);
    t.early_stop.min_delta = get_or<double>(p, "min_delta", t.early_stop.min_delta);
  }
  t.monitor = get_or<std::string>(j, "monitor", t.monitor);
  if (j.contains("stop_at_monitor")) t.stop_at_monitor = j.at("stop_at_monitor").get<double>();
  t.aux_loss_weight = get_or<double>(j, "aux_loss_weight", t.aux_loss_weight);
  t.seed = get_or<std::uint64_t>(j, "seed", t.seed);
  return t;
}

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  train.validate();
  if (model.num_classes != dataset.task.num_classes())
    throw ConfigError("model.num_classes (" + std::to_string(model.num_classes) +
                      ") does not match the task's class count (" +
                      std::to_string(dataset.task.num_classes()) + ")");
  if (output.dir.empty()) throw ConfigError("output.dir is required");
  if (model.preset != "diacnn" && model.preset != "baseline_cnn" &&
      model.preset != "mini_inception")
    throw ConfigError("model.preset must be diacnn, baseline_cnn or mini_inception");
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"dataset", "preprocess", "model", "train", "output"});
  RunConfig cfg;
  if (!j.contains("dataset")) throw ConfigError("config needs a dataset section");
  cfg.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("preprocess")) cfg.preprocess = parse_preprocess(j.at("preprocess"));
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("train")) cfg.train = parse_train(j.at("train"));
  if (!j.contains("output") || !j.at("output").contains("dir"))
    throw ConfigError("config needs output.dir");
  check_keys(j.at("output"), "output", {"dir"});
  cfg.output.dir = j.at("output").at("dir").get<std::string>();
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const io::IoError& e) {
    throw ConfigError(e.what());
  }
  RunConfig cfg = from_json_text(text);
  if (!std::filesystem::exists(cfg.dataset.manifest))
    throw ConfigError("dataset.manifest does not exist: " + cfg.dataset.manifest);
  return cfg;
}

Dataset prepare_dataset(const RunConfig& cfg) {
  Dataset ds = load_manifest(cfg.dataset.manifest);
  if (cfg.dataset.task.type == TaskConfig::Type::Binary)
    ds = binary_task_filter(ds, cfg.dataset.task.positive, cfg.dataset.task.negative);
  if (cfg.dataset.split_source == DatasetConfig::SplitSource::Ratios) {
    split_dataset(ds, cfg.dataset.ratios, cfg.dataset.seed, cfg.dataset.stratify);
  } else {
    for (const auto& s : ds.samples)
      if (s.split == Split::Unassigned)
        throw ConfigError("split_source=manifest but sample " + s.image_path +
                          " has no split assigned");
  }
  return ds;
}

}  // namespace dcnn
