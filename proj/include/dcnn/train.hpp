#pragma once

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "dcnn/batch.hpp"
#include "dcnn/dataset.hpp"
#include "dcnn/optim.hpp"
#include "dcnn/params.hpp"
#include "dcnn/schedule.hpp"

namespace dcnn {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, int batch, const std::string& msg)
      : std::runtime_error(msg), epoch_(epoch), batch_(batch) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_, batch_;
};

struct TrainConfig {
  enum class Optimizer { Sgd, Adam };
  Optimizer optimizer = Optimizer::Adam;
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 64;
  int epochs = 50;
  bool step_halving = false;
  int halving_period = 5;
  PlateauConfig plateau;
  EarlyStopConfig early_stop;
  std::string monitor = "val_acc";
  /// Optional stop target on the monitored metric (>= for accuracy-like,
  /// <= for loss-like). NaN disables it.
  double stop_at_monitor = std::numeric_limits<double>::quiet_NaN();
  double aux_loss_weight = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double lr = 0;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based, 0 = none
  std::string monitor = "val_acc";

  std::vector<double> metric(const std::string& name) const;
  std::string to_csv() const;
  static History from_csv(const std::string& text);
};

struct EvalResult {
  double loss = 0;
  double acc = 0;
  std::vector<int> preds;
  std::vector<int> labels;
  std::vector<int> sample_indices;
  Tensor probs;     // N x K
  Tensor features;  // N x F
};

/// Infer-mode pass over a split in dataset order: no shuffling, no
/// augmentation, running statistics untouched.
EvalResult evaluate(const ModelSpec& spec, ParamStore& params, BnStats& stats, const Dataset& ds,
                    Split split, const PreprocessConfig& pre, int batch_size);

struct TrainResult {
  History history;
  ParamStore best_params;
  BnStats best_stats;
  int best_epoch = 0;
  double best_metric = 0;
};

/// The deterministic training loop. Per epoch: seeded shuffle, train-mode
/// forward, loss (+ weighted auxiliary-head loss when present), backward,
/// optimizer step per batch with gradients zeroed at every batch start;
/// then a val-split evaluation in infer mode. The in-memory best snapshot
/// (and best_ckpt_path, when given) is refreshed only when the monitored
/// metric strictly beats the previous best. Non-finite losses abort with
/// DivergenceError carrying the epoch/batch index.
TrainResult train_loop(const ModelSpec& spec, ParamStore& params, BnStats& stats,
                       const Dataset& ds, const PreprocessConfig& pre, const TrainConfig& cfg,
                       std::ostream* log = nullptr, const std::string& best_ckpt_path = {});

}  // namespace dcnn
