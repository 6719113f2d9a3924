#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/error.hpp"
#include "scorefuse/matrix.hpp"

namespace scorefuse {

/// counts(i, j) = samples of true class i predicted as j. In the two-class
/// case class 1 (disease present) is the positive class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k = 2) : k_(k), counts_(k * k, 0) {}

  static ConfusionMatrix from_labels(std::span<const int> truth, std::span<const int> pred,
                                     std::size_t k) {
    if (truth.size() != pred.size()) throw MetricError("confusion: truth and prediction lengths differ");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= k ||
          static_cast<std::size_t>(pred[i]) >= k) {
        throw MetricError("confusion: label out of range at sample " + std::to_string(i));
      }
      ++cm.at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
    }
    return cm;
  }

  static ConfusionMatrix from_binary_cells(long tp, long fp, long fn, long tn) {
    ConfusionMatrix cm(2);
    cm.at(1, 1) = tp;
    cm.at(0, 1) = fp;
    cm.at(1, 0) = fn;
    cm.at(0, 0) = tn;
    return cm;
  }

  std::size_t classes() const noexcept { return k_; }
  long& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
  long at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }

  long total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }
  long trace() const {
    long t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
    return t;
  }
  long support(std::size_t c) const {
    long s = 0;
    for (std::size_t j = 0; j < k_; ++j) s += at(c, j);
    return s;
  }
  long predicted(std::size_t c) const {
    long s = 0;
    for (std::size_t i = 0; i < k_; ++i) s += at(i, c);
    return s;
  }

  long tp() const { return at(1, 1); }
  long fp() const { return at(0, 1); }
  long fn() const { return at(1, 0); }
  long tn() const { return at(0, 0); }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < k_; ++i) {
      rows.push_back(std::vector<long>(counts_.begin() + static_cast<std::ptrdiff_t>(i * k_),
                                       counts_.begin() + static_cast<std::ptrdiff_t>((i + 1) * k_)));
    }
    return rows;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<long> counts_;
};

enum class Averaging { macro, weighted };

inline std::string to_string(Averaging a) { return a == Averaging::macro ? "macro" : "weighted"; }

/// Percentages in [0, 100].
struct ScalarMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class precision/recall/F1 with each class in turn as positive, then
/// averaged; any zero denominator yields 0 for that class.
inline ScalarMetrics scalar_metrics(const ConfusionMatrix& cm, Averaging mode) {
  const long total = cm.total();
  if (total <= 0) throw MetricError("scalar_metrics: empty confusion matrix");
  ScalarMetrics m;
  m.accuracy = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
  const std::size_t k = cm.classes();
  double wsum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double pred = static_cast<double>(cm.predicted(c));
    const double sup = static_cast<double>(cm.support(c));
    const double p = pred > 0 ? tp / pred : 0.0;
    const double r = sup > 0 ? tp / sup : 0.0;
    const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    const double w = mode == Averaging::macro ? 1.0 : sup;
    m.precision += w * p;
    m.recall += w * r;
    m.f1 += w * f;
    wsum += w;
  }
  if (wsum > 0) {
    m.precision *= 100.0 / wsum;
    m.recall *= 100.0 / wsum;
    m.f1 *= 100.0 / wsum;
  }
  return m;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  int positive_class = 1;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Exact ROC of `score` for the positive mask, walking thresholds from high to
/// low with tied scores stepped together; AUC by the trapezoid rule. The first
/// point is (0, 0) at threshold +inf.
inline RocCurve roc_curve(std::span<const double> score, std::span<const char> positive) {
  const std::size_t n = score.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  double P = 0, N = 0;
  for (char p : positive) (p ? P : N) += 1;
  RocCurve c;
  c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double s = score[order[i]];
    while (i < n && score[order[i]] == s) {
      (positive[order[i]] ? tp : fp) += 1;
      ++i;
    }
    c.points.push_back({N > 0 ? fp / N : 0.0, P > 0 ? tp / P : 0.0, s});
  }
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& a = c.points[i - 1];
    const auto& b = c.points[i];
    c.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return c;
}

struct RocResult {
  double auc = 0.0;
  std::vector<RocCurve> curves;  // one per evaluated class
  std::vector<std::string> warnings;
};

/// Two classes: the class-1 column. More classes: one-vs-rest per class,
/// macro-averaged over the classes that have both positives and negatives.
inline RocResult roc_auc(std::span<const int> truth, const ScoreMatrix& scores) {
  if (truth.size() != scores.rows()) throw MetricError("roc_auc: truth length differs from score rows");
  RocResult out;
  const std::size_t k = scores.cols();
  std::vector<std::size_t> classes;
  if (k == 2) classes = {1};
  else for (std::size_t c = 0; c < k; ++c) classes.push_back(c);

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c : classes) {
    std::vector<char> pos(truth.size());
    std::vector<double> col = scores.column(c);
    std::size_t npos = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      pos[i] = static_cast<std::size_t>(truth[i]) == c;
      npos += pos[i] ? 1 : 0;
    }
    if (npos == 0 || npos == truth.size()) {
      out.warnings.push_back("ROC-AUC undefined for class " + std::to_string(c) +
                             (npos == 0 ? " (absent from truth)" : " (no negatives)") +
                             "; excluded from the average");
      continue;
    }
    RocCurve curve = roc_curve(col, pos);
    curve.positive_class = static_cast<int>(c);
    sum += curve.auc;
    ++used;
    out.curves.push_back(std::move(curve));
  }
  out.auc = used > 0 ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct EvaluationReport {
  ConfusionMatrix confusion;
  ScalarMetrics metrics;
  Averaging averaging = Averaging::macro;
  RocResult roc;
};

/// Macro averaging for two classes, support-weighted otherwise.
inline Averaging default_averaging(std::size_t class_count) {
  return class_count == 2 ? Averaging::macro : Averaging::weighted;
}

inline EvaluationReport evaluate(std::span<const int> truth, const ScoreMatrix& scores,
                                 std::span<const int> pred) {
  EvaluationReport r;
  r.confusion = ConfusionMatrix::from_labels(truth, pred, scores.cols());
  r.averaging = default_averaging(scores.cols());
  r.metrics = scalar_metrics(r.confusion, r.averaging);
  r.roc = roc_auc(truth, scores);
  return r;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j = {{"confusion", r.confusion.to_json()},
                      {"averaging", to_string(r.averaging)},
                      {"accuracy", round2(r.metrics.accuracy)},
                      {"precision", round2(r.metrics.precision)},
                      {"recall", round2(r.metrics.recall)},
                      {"f1", round2(r.metrics.f1)},
                      {"roc_auc", std::isfinite(r.roc.auc) ? nlohmann::json(r.roc.auc) : nlohmann::json()},
                      {"roc_warnings", r.roc.warnings}};
  if (r.confusion.classes() == 2) {
    j["tp"] = r.confusion.tp();
    j["fp"] = r.confusion.fp();
    j["fn"] = r.confusion.fn();
    j["tn"] = r.confusion.tn();
  }
  return j;
}

}  // namespace scorefuse
