#include "dcnn/roc.hpp"

#include <algorithm>
#include <numeric>

#include "dcnn/io.hpp"

namespace dcnn {

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw MetricError("roc_curve: score/label length mismatch");
  std::int64_t pos = 0, neg = 0;
  for (int v : labels) (v ? pos : neg)++;
  if (pos == 0 || neg == 0) throw MetricError("roc_curve: both classes must be present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve curve;
  curve.points.push_back({0, 0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), s});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

RocCurve ovr_roc(const Tensor& probs, const std::vector<int>& labels, int class_k) {
  if (probs.rank() != 2) throw MetricError("ovr_roc: probs must be NxK");
  const int n = probs.dim(0), k = probs.dim(1);
  if (class_k < 0 || class_k >= k) throw MetricError("ovr_roc: class index out of range");
  if (static_cast<int>(labels.size()) != n) throw MetricError("ovr_roc: label length mismatch");
  bool present = false;
  for (int v : labels) present = present || v == class_k;
  if (!present) throw MetricError("ovr_roc: class absent from labels");
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> binary(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] = probs.at2(i, class_k);
    binary[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == class_k ? 1 : 0;
  }
  return roc_curve(scores, binary);
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : curve.points)
    out += io::fmt_g(p.fpr) + "," + io::fmt_g(p.tpr) + "," + io::fmt_g(p.threshold) + "\n";
  return out;
}

}  // namespace dcnn
