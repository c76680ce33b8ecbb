#include "dcnn/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace dcnn {

double step_halving_lr(double base_lr, int epoch, int period) {
  if (epoch < 0) throw std::invalid_argument("step_halving_lr: epoch must be >= 0");
  if (period < 1) throw std::invalid_argument("step_halving_lr: period must be >= 1");
  return base_lr * std::pow(0.5, epoch / period);
}

bool monitor_is_loss(const std::string& monitor) {
  return monitor.size() >= 5 && monitor.rfind("_loss") == monitor.size() - 5;
}

bool metric_improves(const std::string& monitor, double value, double best, double min_delta) {
  if (monitor_is_loss(monitor)) return value < best - min_delta;
  return value > best + min_delta;
}

StallTracker::StallTracker(std::string monitor, int patience, double min_delta)
    : monitor_(std::move(monitor)), patience_(patience), min_delta_(min_delta) {
  if (patience_ < 1) throw std::invalid_argument("patience must be >= 1");
}

bool StallTracker::observe(double value) {
  if (!seen_) {
    seen_ = true;
    best_ = value;
    return false;
  }
  if (metric_improves(monitor_, value, best_, min_delta_)) {
    best_ = value;
    stall_ = 0;
    return false;
  }
  if (++stall_ >= patience_) {
    stall_ = 0;
    return true;
  }
  return false;
}

PlateauTracker::PlateauTracker(PlateauConfig cfg, std::string monitor)
    : cfg_(cfg), stall_(std::move(monitor), cfg.patience, cfg.min_delta) {}

void PlateauTracker::observe(double value) {
  if (!cfg_.enabled) return;
  if (stall_.observe(value)) {
    product_ *= cfg_.factor;
    ++reductions_;
  }
}

double plateau_reduce(const std::vector<double>& metric_history, const std::string& monitor,
                      double lr, double factor, int patience, double min_delta) {
  if (metric_history.empty()) throw std::invalid_argument("plateau_reduce: empty history");
  PlateauConfig cfg{true, factor, patience, min_delta};
  PlateauTracker tracker(cfg, monitor);
  for (double v : metric_history) tracker.observe(v);
  return lr * tracker.factor_product();
}

bool early_stop_check(const std::vector<double>& metric_history, const std::string& monitor,
                      int patience, double min_delta) {
  if (metric_history.empty()) throw std::invalid_argument("early_stop_check: empty history");
  StallTracker tracker(monitor, patience, min_delta);
  bool stop = false;
  for (double v : metric_history) stop = tracker.observe(v);
  return stop;
}

}  // namespace dcnn
