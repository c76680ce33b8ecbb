#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcnn {

class MetricError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binary counts, oriented rows-predicted / columns-actual.
struct ConfusionMatrix {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int positive_class = 1);

/// A metric with a zero denominator is reported as undefined rather than
/// 0, NaN, or a thrown error.
struct MetricValue {
  double value = 0;
  bool defined = false;
};

/// Percentages: sen = 100*tp/(tp+fn), spec = 100*tn/(tn+fp),
/// acc = 100*(tp+tn)/total, preci = 100*tp/(tp+fp),
/// f1 = 100*tp/(tp + (fp+fn)/2).
struct BinaryMetrics {
  MetricValue sen, spec, acc, preci, f1;
};

BinaryMetrics metrics(const ConfusionMatrix& cm);

struct ReportRow {
  double recall = 0, precision = 0, f1 = 0;
  std::int64_t support = 0;
};

/// Per-class one-vs-rest report in 0-1 fractions, with unweighted macro
/// and support-weighted averages. Zero-denominator cells fall back to 0.
struct ClassificationReport {
  std::vector<std::string> class_names;
  std::vector<ReportRow> per_class;
  double accuracy = 0;
  ReportRow macro, weighted;
  std::int64_t total = 0;

  /// Columns Recall, Precision, F1 score, Support; rows per class then
  /// Accuracy, Macro avg., Weighted avg.
  std::string to_csv() const;
};

ClassificationReport classification_report(const std::vector<int>& preds,
                                           const std::vector<int>& labels,
                                           const std::vector<std::string>& class_names);

}  // namespace dcnn
