#pragma once

#include <limits>
#include <vector>

#include "dcnn/metrics.hpp"
#include "dcnn/tensor.hpp"

namespace dcnn {

struct RocPoint {
  double fpr = 0, tpr = 0;
  double threshold = std::numeric_limits<double>::infinity();
};

/// Starts at (0,0) with a +inf threshold sentinel and ends at (1,1);
/// one point per distinct score (ties collapsed), both coordinates
/// non-decreasing along the sweep.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

/// Trapezoidal area; equals the Mann-Whitney pair statistic with ties
/// credited one half.
double auc(const RocCurve& curve);

/// One-vs-rest reduction: class_k as positive with probs[:,k] as score.
RocCurve ovr_roc(const Tensor& probs, const std::vector<int>& labels, int class_k);

std::string roc_to_csv(const RocCurve& curve);

}  // namespace dcnn
