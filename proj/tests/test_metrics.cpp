#include <cmath>

#include <gtest/gtest.h>

#include "scorefuse/metrics.hpp"
#include "support.hpp"

using namespace scorefuse;

namespace {

struct PrintedMatrix {
  const char* name;
  long tp, fp, fn, tn;
  double accuracy;
};

// Reference binary confusion matrices with their
// printed accuracies. The SVM+LR 70:30 entry is printed as 89.90; its cells give
// 81/91 = 89.01, which is what is listed here.
const PrintedMatrix kPrinted[] = {
    {"ANN 70:30", 48, 2, 11, 30, 85.71},   {"RF 70:30", 47, 3, 5, 36, 91.21},
    {"ANN+RF 70:30", 48, 2, 4, 37, 93.41}, {"ANN 80:20", 35, 2, 3, 21, 91.80},
    {"RF 80:20", 34, 3, 1, 23, 93.44},     {"ANN+RF 80:20", 35, 2, 1, 23, 95.08},
    {"SVM 70:30", 50, 4, 7, 30, 87.91},    {"LR 70:30", 48, 6, 7, 30, 85.71},
    {"SVM+LR 70:30", 50, 4, 6, 31, 89.01}, {"SVM 80:20", 34, 1, 4, 22, 91.80},
    {"LR 80:20", 32, 3, 3, 23, 90.16},     {"SVM+LR 80:20", 33, 2, 2, 24, 93.44},
    {"ADA 70:30", 51, 6, 3, 31, 90.11},    {"DT 70:30", 56, 1, 8, 26, 90.11},
    {"ADA+DT 70:30", 53, 4, 3, 31, 92.31}, {"ADA 80:20", 36, 1, 5, 19, 90.16},
    {"DT 80:20", 33, 4, 2, 22, 90.16},     {"ADA+DT 80:20", 36, 1, 2, 22, 95.08},
};

/// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half.
double pair_auc(const std::vector<double>& s, const std::vector<char>& pos) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return good / pairs;
}

}  // namespace

TEST(Confusion, HandExample) {
  const Labels truth = {1, 1, 0}, pred = {1, 0, 0};
  const auto cm = ConfusionMatrix::from_labels(truth, pred, 2);
  EXPECT_EQ(cm.tp(), 1);
  EXPECT_EQ(cm.fn(), 1);
  EXPECT_EQ(cm.tn(), 1);
  EXPECT_EQ(cm.fp(), 0);
  EXPECT_EQ(cm.total(), 3);
}

TEST(Confusion, PerfectIsDiagonal) {
  const Labels y = {0, 1, 2, 3, 4, 2, 2};
  const auto cm = ConfusionMatrix::from_labels(y, y, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j) EXPECT_EQ(cm.at(i, j), 0);
    }
  }
  EXPECT_EQ(cm.trace(), 7);
  const auto m = scalar_metrics(cm, Averaging::macro);
  EXPECT_DOUBLE_EQ(m.accuracy, 100.0);
  EXPECT_DOUBLE_EQ(m.f1, 100.0);
}

TEST(Confusion, Errors) {
  EXPECT_THROW(ConfusionMatrix::from_labels(Labels{0, 2}, Labels{0, 1}, 2), MetricError);
  EXPECT_THROW(ConfusionMatrix::from_labels(Labels{0}, Labels{0, 1}, 2), MetricError);
  EXPECT_THROW(scalar_metrics(ConfusionMatrix(2), Averaging::macro), MetricError);
}

TEST(ScalarMetrics, PrintedAccuracies) {
  for (const auto& p : kPrinted) {
    const auto cm = ConfusionMatrix::from_binary_cells(p.tp, p.fp, p.fn, p.tn);
    EXPECT_DOUBLE_EQ(round2(scalar_metrics(cm, Averaging::macro).accuracy), p.accuracy) << p.name;
  }
  EXPECT_EQ(ConfusionMatrix::from_binary_cells(35, 2, 1, 23).total(), 61);
}

TEST(ScalarMetrics, HandComputedBinary) {
  // tp 3, fp 1, fn 2, tn 4. Class 1: P 3/4 R 3/5; class 0: P 4/6 R 4/5.
  const auto cm = ConfusionMatrix::from_binary_cells(3, 1, 2, 4);
  const auto macro = scalar_metrics(cm, Averaging::macro);
  const double p1 = 0.75, r1 = 0.6, p0 = 4.0 / 6, r0 = 0.8;
  const double f1 = 2 * p1 * r1 / (p1 + r1), f0 = 2 * p0 * r0 / (p0 + r0);
  EXPECT_NEAR(macro.accuracy, 70.0, 1e-12);
  EXPECT_NEAR(macro.precision, 50 * (p1 + p0), 1e-12);
  EXPECT_NEAR(macro.recall, 50 * (r1 + r0), 1e-12);
  EXPECT_NEAR(macro.f1, 50 * (f1 + f0), 1e-12);
  const auto w = scalar_metrics(cm, Averaging::weighted);
  EXPECT_NEAR(w.precision, 100 * (5 * p1 + 5 * p0) / 10, 1e-12);
  EXPECT_NEAR(w.recall, 70.0, 1e-12);  // weighted recall is accuracy
}

TEST(ScalarMetrics, ZeroDenominatorGivesZero) {
  // Class 2 never predicted and never present.
  const auto cm = ConfusionMatrix::from_labels(Labels{0, 1, 1}, Labels{0, 1, 0}, 3);
  const auto m = scalar_metrics(cm, Averaging::macro);
  EXPECT_TRUE(std::isfinite(m.precision));
  EXPECT_NEAR(m.precision, 100.0 * (0.5 + 1.0 + 0.0) / 3, 1e-12);
}

TEST(ScalarMetrics, AccuracyMatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + uniform_index(rng, 4);
    const std::size_t n = 1 + uniform_index(rng, 80);
    Labels t(n), p(n);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(uniform_index(rng, k));
      p[i] = static_cast<int>(uniform_index(rng, k));
      hit += t[i] == p[i];
    }
    const auto cm = ConfusionMatrix::from_labels(t, p, k);
    EXPECT_EQ(cm.total(), static_cast<long>(n));
    EXPECT_NEAR(scalar_metrics(cm, Averaging::weighted).accuracy,
                100.0 * static_cast<double>(hit) / static_cast<double>(n), 1e-12);
  }
}

TEST(ScalarMetrics, MacroEqualsWeightedUnderEqualSupport) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + uniform_index(rng, 4);
    Labels t, p;
    for (std::size_t c = 0; c < k; ++c) {
      for (int i = 0; i < 7; ++i) {
        t.push_back(static_cast<int>(c));
        p.push_back(static_cast<int>(uniform_index(rng, k)));
      }
    }
    const auto cm = ConfusionMatrix::from_labels(t, p, k);
    const auto a = scalar_metrics(cm, Averaging::macro);
    const auto b = scalar_metrics(cm, Averaging::weighted);
    EXPECT_NEAR(a.precision, b.precision, 1e-12);
    EXPECT_NEAR(a.recall, b.recall, 1e-12);
    EXPECT_NEAR(a.f1, b.f1, 1e-12);
  }
}

TEST(Roc, Examples) {
  const std::vector<double> s = {0.9, 0.8, 0.7, 0.1};
  const std::vector<char> pos = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(roc_curve(s, pos).auc, 0.75);
  EXPECT_DOUBLE_EQ(roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<char>{1, 1, 0, 0}).auc, 1.0);
  const auto flat = roc_curve(std::vector<double>(6, 0.4), std::vector<char>{1, 0, 1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(flat.auc, 0.5);
  ASSERT_EQ(flat.points.size(), 2u);
}

TEST(Roc, MatchesPairCountingAndIsMonotone) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 99);
    std::vector<double> s(n);
    std::vector<char> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_index(rng, 20)) / 20.0;  // coarse grid forces ties
      pos[i] = uniform01(rng) < 0.4;
    }
    pos[0] = 1;
    pos[1] = 0;
    const auto c = roc_curve(s, pos);
    EXPECT_NEAR(c.auc, pair_auc(s, pos), 1e-9);
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_DOUBLE_EQ(c.points.back().fpr, 1.0);
    EXPECT_DOUBLE_EQ(c.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
      EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
    }
  }
}

TEST(RocAuc, BinaryUsesClassOneColumn) {
  const auto scores = Matrix::from_rows({{0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.9, 0.1}});
  const auto r = roc_auc(Labels{1, 0, 1, 0}, scores);
  EXPECT_DOUBLE_EQ(r.auc, 0.75);
  ASSERT_EQ(r.curves.size(), 1u);
  EXPECT_EQ(r.curves[0].positive_class, 1);
}

TEST(RocAuc, MulticlassAbsentClassExcludedWithWarning) {
  Rng rng(4);
  const auto scores = testsupport::random_scores(rng, 9, 5);
  const Labels truth = {0, 1, 2, 3, 0, 1, 2, 3, 0};  // class 4 absent
  const auto r = roc_auc(truth, scores);
  EXPECT_EQ(r.curves.size(), 4u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("class 4"), std::string::npos);
  double mean = 0;
  for (const auto& c : r.curves) mean += c.auc;
  EXPECT_NEAR(r.auc, mean / 4, 1e-12);
}

TEST(Evaluate, ReportFields) {
  const auto scores = Matrix::from_rows({{0.1, 0.9}, {0.6, 0.4}, {0.3, 0.7}, {0.9, 0.1}});
  const Labels truth = {1, 0, 1, 1};
  const Labels pred = {1, 0, 1, 0};
  const auto e = evaluate(truth, scores, pred);
  EXPECT_EQ(e.averaging, Averaging::macro);
  EXPECT_DOUBLE_EQ(e.metrics.accuracy, 75.0);
  const auto j = to_json(e);
  EXPECT_EQ(j["tp"], 2);
  EXPECT_EQ(j["fn"], 1);
  EXPECT_EQ(j["accuracy"], 75.0);
  EXPECT_EQ(default_averaging(5), Averaging::weighted);
}
