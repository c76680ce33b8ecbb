#pragma once

#include <string>
#include <vector>

namespace dcnn {

/// base_lr * 0.5^floor(epoch / period), epoch counted from 0.
double step_halving_lr(double base_lr, int epoch, int period = 5);

/// Metrics named *_loss improve downward, everything else upward.
bool monitor_is_loss(const std::string& monitor);

/// Strict improvement: beyond best by more than min_delta in the
/// monitor's direction.
bool metric_improves(const std::string& monitor, double value, double best, double min_delta);

struct PlateauConfig {
  bool enabled = false;
  double factor = 0.3;
  int patience = 2;
  double min_delta = 0.001;
};

struct EarlyStopConfig {
  bool enabled = false;
  int patience = 2;
  double min_delta = 0.001;
};

/// Stall counting shared by plateau reduction and early stopping: the
/// first observation sets the best; afterwards any epoch that fails to
/// improve on the best by more than min_delta increments the stall, and
/// `patience` consecutive stalled epochs fire the action (which resets
/// the stall counter but keeps the best).
class StallTracker {
 public:
  StallTracker(std::string monitor, int patience, double min_delta);
  bool observe(double value);  // true = fire

 private:
  std::string monitor_;
  int patience_;
  double min_delta_;
  double best_ = 0;
  int stall_ = 0;
  bool seen_ = false;
};

class PlateauTracker {
 public:
  PlateauTracker(PlateauConfig cfg, std::string monitor);
  void observe(double value);
  double factor_product() const { return product_; }
  int reductions() const { return reductions_; }

 private:
  PlateauConfig cfg_;
  StallTracker stall_;
  double product_ = 1.0;
  int reductions_ = 0;
};

/// Replays the stall rule over a full metric history and returns the lr
/// after any reductions it fires along the way.
double plateau_reduce(const std::vector<double>& metric_history, const std::string& monitor,
                      double lr, double factor = 0.3, int patience = 2, double min_delta = 0.001);

/// True when training should stop after the last epoch in the history.
bool early_stop_check(const std::vector<double>& metric_history, const std::string& monitor,
                      int patience = 2, double min_delta = 0.001);

}  // namespace dcnn
