#include "dcnn/train.hpp"

#include <cmath>
#include <cstring>

#include "dcnn/checkpoint.hpp"
#include "dcnn/io.hpp"
#include "dcnn/ops.hpp"
#include "dcnn/rng.hpp"

namespace dcnn {

void TrainConfig::validate() const {
  if (base_lr <= 0) throw ModelError("train: base_lr must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ModelError("train: momentum coefficients must be in [0, 1)");
  if (batch_size < 1) throw ModelError("train: batch_size must be >= 1");
  if (epochs < 1) throw ModelError("train: epochs must be >= 1");
  if (halving_period < 1) throw ModelError("train: halving_period must be >= 1");
  if (plateau.patience < 1 || early_stop.patience < 1)
    throw ModelError("train: patience must be >= 1");
  if (monitor != "val_acc" && monitor != "val_loss" && monitor != "train_acc" &&
      monitor != "train_loss")
    throw ModelError("train: unknown monitor metric '" + monitor + "'");
}

std::vector<double> History::metric(const std::string& name) const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) {
    if (name == "train_loss")
      out.push_back(e.train_loss);
    else if (name == "train_acc")
      out.push_back(e.train_acc);
    else if (name == "val_loss")
      out.push_back(e.val_loss);
    else if (name == "val_acc")
      out.push_back(e.val_acc);
    else
      throw ModelError("unknown metric '" + name + "'");
  }
  return out;
}

std::string History::to_csv() const {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.train_loss, e.train_acc, e.val_loss, e.val_acc, e.lr}) {
      out += ',';
      out += io::fmt_g(v);
    }
    out += '\n';
  }
  return out;
}

History History::from_csv(const std::string& text) {
  History h;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != "epoch,train_loss,train_acc,val_loss,val_acc,lr")
        throw ModelError("bad history header: " + line);
      continue;
    }
    if (line.empty()) continue;
    auto cols = io::split_line(line);
    if (cols.size() != 6) throw ModelError("bad history row: " + line);
    EpochRecord e;
    e.epoch = std::stoi(cols[0]);
    e.train_loss = std::strtod(cols[1].c_str(), nullptr);
    e.train_acc = std::strtod(cols[2].c_str(), nullptr);
    e.val_loss = std::strtod(cols[3].c_str(), nullptr);
    e.val_acc = std::strtod(cols[4].c_str(), nullptr);
    e.lr = std::strtod(cols[5].c_str(), nullptr);
    h.epochs.push_back(e);
  }
  return h;
}

namespace {

int argmax_row(const Tensor& probs, int row) {
  const int k = probs.dim(1);
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (probs.at2(row, j) > probs.at2(row, best)) best = j;
  return best;
}

double monitored_value(const EpochRecord& e, const std::string& monitor) {
  if (monitor == "val_acc") return e.val_acc;
  if (monitor == "val_loss") return e.val_loss;
  if (monitor == "train_acc") return e.train_acc;
  return e.train_loss;
}

}  // namespace

EvalResult evaluate(const ModelSpec& spec, ParamStore& params, BnStats& stats, const Dataset& ds,
                    Split split, const PreprocessConfig& pre, int batch_size) {
  BatchIter iter(ds, split, batch_size, 0, pre, /*train_mode=*/false, /*shuffle=*/false);
  EvalResult r;
  const auto total = static_cast<int>(iter.sample_count());
  double loss_sum = 0;
  std::int64_t correct = 0;
  int row = 0;
  while (auto batch = iter.next()) {
    const int n = batch->images.dim(0);
    auto fwd = forward(spec, params, stats, batch->images, BnMode::Infer);
    auto loss = cross_entropy(fwd.probs, batch->labels);
    loss_sum += static_cast<double>(loss->value[0]) * n;

    const Tensor& probs = fwd.probs->value;
    const Tensor& feats = fwd.features->value;
    if (r.probs.empty()) {
      r.probs = Tensor({total, probs.dim(1)});
      r.features = Tensor({total, feats.dim(1)});
    }
    std::memcpy(r.probs.data() + static_cast<std::size_t>(row) * probs.dim(1), probs.data(),
                probs.size() * sizeof(float));
    std::memcpy(r.features.data() + static_cast<std::size_t>(row) * feats.dim(1), feats.data(),
                feats.size() * sizeof(float));
    for (int i = 0; i < n; ++i) {
      const int pred = argmax_row(probs, i);
      r.preds.push_back(pred);
      r.labels.push_back(batch->labels[static_cast<std::size_t>(i)]);
      r.sample_indices.push_back(batch->indices[static_cast<std::size_t>(i)]);
      if (pred == batch->labels[static_cast<std::size_t>(i)]) ++correct;
    }
    row += n;
  }
  r.loss = loss_sum / total;
  r.acc = static_cast<double>(correct) / total;
  return r;
}

TrainResult train_loop(const ModelSpec& spec, ParamStore& params, BnStats& stats,
                       const Dataset& ds, const PreprocessConfig& pre, const TrainConfig& cfg,
                       std::ostream* log, const std::string& best_ckpt_path) {
  cfg.validate();
  const bool has_val = ds.split_size(Split::Val) > 0;
  if (!has_val && (cfg.monitor == "val_acc" || cfg.monitor == "val_loss"))
    throw ModelError("train: monitor '" + cfg.monitor + "' requires a nonempty val split");

  TrainResult result;
  result.history.monitor = cfg.monitor;
  PlateauTracker plateau(cfg.plateau, cfg.monitor);
  StallTracker early(cfg.monitor, cfg.early_stop.patience, cfg.early_stop.min_delta);
  AdamState adam;
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.base_lr;
    if (cfg.step_halving) lr = step_halving_lr(cfg.base_lr, epoch - 1, cfg.halving_period);
    lr *= plateau.factor_product();

    const std::uint64_t shuffle_seed = splitmix64(splitmix64(cfg.seed) + static_cast<std::uint64_t>(epoch));
    BatchIter iter(ds, Split::Train, cfg.batch_size, shuffle_seed, pre, /*train_mode=*/true);

    double loss_sum = 0;
    std::int64_t correct = 0, seen = 0;
    int batch_idx = 0;
    while (true) {
      std::optional<Batch> batch;
      try {
        batch = iter.next();
        if (!batch) break;
        params.zero_grad();
        auto fwd = forward(spec, params, stats, batch->images, BnMode::Train);
        auto loss = cross_entropy(fwd.probs, batch->labels);
        if (fwd.aux_logits) {
          auto aux_loss = cross_entropy(softmax(fwd.aux_logits), batch->labels);
          loss = add(loss, scale(aux_loss, static_cast<float>(cfg.aux_loss_weight)));
        }
        const double loss_value = loss->value[0];
        if (!std::isfinite(loss_value))
          throw DivergenceError(epoch, batch_idx,
                                "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batch_idx));
        backward(loss);
        if (cfg.optimizer == TrainConfig::Optimizer::Sgd)
          sgd_step(params, static_cast<float>(lr));
        else
          adam_step(params, adam, static_cast<float>(lr), static_cast<float>(cfg.beta1),
                    static_cast<float>(cfg.beta2), static_cast<float>(cfg.adam_eps));

        const int n = batch->images.dim(0);
        loss_sum += loss_value * n;
        for (int i = 0; i < n; ++i)
          if (argmax_row(fwd.probs->value, i) == batch->labels[static_cast<std::size_t>(i)])
            ++correct;
        seen += n;
        ++batch_idx;
      } catch (const NonFiniteError& e) {
        throw DivergenceError(epoch, batch_idx,
                              std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                  " batch " + std::to_string(batch_idx));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.lr = lr;
    if (has_val) {
      auto val = evaluate(spec, params, stats, ds, Split::Val, pre, cfg.batch_size);
      rec.val_loss = val.loss;
      rec.val_acc = val.acc;
    }
    result.history.epochs.push_back(rec);

    const double monitored = monitored_value(rec, cfg.monitor);
    if (!std::isfinite(monitored))
      throw DivergenceError(epoch, -1, "non-finite monitored metric at epoch " + std::to_string(epoch));

    const bool better =
        !have_best || (monitor_is_loss(cfg.monitor) ? monitored < result.best_metric
                                                    : monitored > result.best_metric);
    if (better) {
      have_best = true;
      result.best_metric = monitored;
      result.best_epoch = epoch;
      result.best_params = params.clone();
      result.best_stats = stats;
      if (!best_ckpt_path.empty()) save_checkpoint(spec, params, stats, best_ckpt_path);
    }
    result.history.best_epoch = result.best_epoch;

    if (log)
      (*log) << "epoch " << epoch << " lr " << io::fmt_g(lr) << " train_loss "
             << io::fmt_g(rec.train_loss) << " train_acc " << io::fmt_g(rec.train_acc)
             << " val_loss " << io::fmt_g(rec.val_loss) << " val_acc " << io::fmt_g(rec.val_acc)
             << (result.best_epoch == epoch ? "  (best)" : "") << "\n";

    if (!std::isnan(cfg.stop_at_monitor)) {
      const bool reached = monitor_is_loss(cfg.monitor) ? monitored <= cfg.stop_at_monitor
                                                        : monitored >= cfg.stop_at_monitor;
      if (reached) break;
    }
    plateau.observe(monitored);
    if (cfg.early_stop.enabled && early.observe(monitored)) break;
  }
  return result;
}

}  // namespace dcnn
