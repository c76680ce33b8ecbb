#include "dcnn/metrics.hpp"

#include "dcnn/io.hpp"

namespace dcnn {

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int positive_class) {
  if (preds.size() != labels.size())
    throw MetricError("confusion_matrix: " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(labels.size()) + " labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive_class;
    const bool a = labels[i] == positive_class;
    if (p && a)
      ++cm.tp;
    else if (p && !a)
      ++cm.fp;
    else if (!p && a)
      ++cm.fn;
    else
      ++cm.tn;
  }
  return cm;
}

namespace {

MetricValue ratio_pct(std::int64_t num, std::int64_t den) {
  if (den == 0) return {0, false};
  return {100.0 * static_cast<double>(num) / static_cast<double>(den), true};
}

}  // namespace

BinaryMetrics metrics(const ConfusionMatrix& cm) {
  BinaryMetrics m;
  m.sen = ratio_pct(cm.tp, cm.tp + cm.fn);
  m.spec = ratio_pct(cm.tn, cm.tn + cm.fp);
  m.acc = ratio_pct(cm.tp + cm.tn, cm.total());
  m.preci = ratio_pct(cm.tp, cm.tp + cm.fp);
  if (cm.tp + cm.fp + cm.fn == 0) {
    m.f1 = {0, false};
  } else {
    m.f1 = {100.0 * static_cast<double>(cm.tp) /
                (static_cast<double>(cm.tp) + 0.5 * static_cast<double>(cm.fp + cm.fn)),
            true};
  }
  return m;
}

ClassificationReport classification_report(const std::vector<int>& preds,
                                           const std::vector<int>& labels,
                                           const std::vector<std::string>& class_names) {
  if (preds.empty()) throw MetricError("classification_report: empty input");
  if (preds.size() != labels.size())
    throw MetricError("classification_report: prediction/label length mismatch");
  const int k = static_cast<int>(class_names.size());
  for (int v : labels)
    if (v < 0 || v >= k) throw MetricError("classification_report: label out of class range");

  ClassificationReport r;
  r.class_names = class_names;
  r.total = static_cast<std::int64_t>(preds.size());
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);

  for (int c = 0; c < k; ++c) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == c, a = labels[i] == c;
      if (p && a)
        ++tp;
      else if (p)
        ++fp;
      else if (a)
        ++fn;
    }
    ReportRow row;
    row.support = tp + fn;
    row.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    row.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    row.f1 = (2 * tp + fp + fn)
                 ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn)
                 : 0.0;
    r.per_class.push_back(row);
  }

  for (const auto& row : r.per_class) {
    r.macro.recall += row.recall / k;
    r.macro.precision += row.precision / k;
    r.macro.f1 += row.f1 / k;
    const double w = static_cast<double>(row.support) / static_cast<double>(r.total);
    r.weighted.recall += row.recall * w;
    r.weighted.precision += row.precision * w;
    r.weighted.f1 += row.f1 * w;
  }
  r.macro.support = r.weighted.support = r.total;
  return r;
}

std::string ClassificationReport::to_csv() const {
  std::string out = ",Recall,Precision,F1 score,Support\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& row = per_class[c];
    out += class_names[c] + "," + io::fmt_g(row.recall) + "," + io::fmt_g(row.precision) + "," +
           io::fmt_g(row.f1) + "," + std::to_string(row.support) + "\n";
  }
  out += "Accuracy,,," + io::fmt_g(accuracy) + "," + std::to_string(total) + "\n";
  out += "Macro avg.," + io::fmt_g(macro.recall) + "," + io::fmt_g(macro.precision) + "," +
         io::fmt_g(macro.f1) + "," + std::to_string(total) + "\n";
  out += "Weighted avg.," + io::fmt_g(weighted.recall) + "," + io::fmt_g(weighted.precision) +
         "," + io::fmt_g(weighted.f1) + "," + std::to_string(total) + "\n";
  return out;
}

}  // namespace dcnn
