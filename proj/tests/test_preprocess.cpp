#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "scorefuse/dataset.hpp"
#include "scorefuse/preprocess.hpp"
#include "support.hpp"

using namespace scorefuse;

namespace {

DataTable one_column(const std::vector<double>& v, AttributeKind kind = AttributeKind::continuous,
                     std::vector<double> codes = {}) {
  DataTable t;
  t.schema = {{"x", kind, std::move(codes), ""}};
  t.features = Matrix(0, 1);
  for (double x : v) {
    t.features.append_row(std::vector<double>{x});
    t.missing.push_back(std::isnan(x) ? 1 : 0);
    t.labels.push_back(0);
  }
  return t;
}

DataTable labelled(const std::vector<int>& labels) {
  DataTable t;
  t.schema = {{"x", AttributeKind::continuous, {}, ""}};
  t.features = Matrix(0, 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.features.append_row(std::vector<double>{static_cast<double>(i)});
    t.missing.push_back(0);
    t.labels.push_back(labels[i]);
  }
  return t;
}

DataTable cleveland() { return load_csv(testsupport::cleveland_data(), cleveland_schema()); }

}  // namespace

TEST(Impute, MostFrequentValue) {
  const auto t = impute_most_frequent(one_column({3, 3, kMissing, 7}));
  EXPECT_EQ(t.features(2, 0), 3.0);
  EXPECT_EQ(t.missing_count(), 0u);
}

TEST(Impute, TieGoesToSmallestValue) {
  const auto t = impute_most_frequent(one_column({2, 2, 1, 1, kMissing}));
  EXPECT_EQ(t.features(4, 0), 1.0);
}

TEST(Impute, ObservedCellsUntouched) {
  const auto raw = cleveland();
  const auto t = impute_most_frequent(raw);
  EXPECT_EQ(t.missing_count(), 0u);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      if (!raw.is_missing(r, c)) EXPECT_EQ(t.features(r, c), raw.features(r, c));
    }
  }
}

TEST(Impute, AllMissingColumnFails) {
  EXPECT_THROW(impute_most_frequent(one_column({kMissing, kMissing})), ImputationError);
}

TEST(Encode, ThalAndChestPainCodes) {
  const auto enc = encode_labels(impute_most_frequent(cleveland()));
  const auto& t = enc.table;
  const auto thal = t.column_index("Thal");
  const auto cpt = t.column_index("Cpt");
  std::set<double> thal_codes, cpt_codes;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    thal_codes.insert(t.features(r, thal));
    cpt_codes.insert(t.features(r, cpt));
  }
  EXPECT_EQ(thal_codes, (std::set<double>{0, 1, 2}));
  EXPECT_EQ(cpt_codes, (std::set<double>{0, 1, 2, 3}));

  const auto raw = impute_most_frequent(cleveland());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double orig = raw.features(r, thal);
    const double expect = orig == 3 ? 0 : orig == 6 ? 1 : 2;
    EXPECT_EQ(t.features(r, thal), expect);
    EXPECT_EQ(t.features(r, cpt), raw.features(r, cpt) - 1);
  }
}

TEST(Encode, CodeMapsDecode) {
  const auto enc = encode_labels(impute_most_frequent(cleveland()));
  const auto it = std::find_if(enc.code_maps.begin(), enc.code_maps.end(),
                               [](const CodeMap& m) { return m.column == "Thal"; });
  ASSERT_NE(it, enc.code_maps.end());
  EXPECT_EQ(it->original, (std::vector<double>{3, 6, 7}));
  EXPECT_EQ(it->decode(2), 7.0);
}

TEST(Encode, RejectsMissingCells) { EXPECT_THROW(encode_labels(cleveland()), UsageError); }

TEST(Scaler, ZscoreTrainingColumnsHaveZeroMeanUnitStd) {
  Rng rng(7);
  Matrix x(50, 4);
  for (auto& v : x.data()) v = uniform(rng, -10, 30);
  const auto z = apply_scaler(fit_scaler(x, ScalerKind::zscore), x);
  for (std::size_t c = 0; c < 4; ++c) {
    const auto col = z.column(c);
    double m = 0, s = 0;
    for (double v : col) m += v;
    m /= 50;
    for (double v : col) s += (v - m) * (v - m);
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(s / 50), 1.0, 1e-9);
  }
}

TEST(Scaler, MinmaxTrainingColumnsSpanUnitInterval) {
  Rng rng(8);
  Matrix x(40, 3);
  for (auto& v : x.data()) v = uniform(rng, -5, 5);
  const auto m = apply_scaler(fit_scaler(x, ScalerKind::minmax), x);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto col = m.column(c);
    EXPECT_NEAR(*std::min_element(col.begin(), col.end()), 0.0, 1e-9);
    EXPECT_NEAR(*std::max_element(col.begin(), col.end()), 1.0, 1e-9);
  }
}

TEST(Scaler, Examples) {
  const auto x = Matrix::from_rows({{1}, {2}, {3}});
  const auto z = apply_scaler(fit_scaler(x, ScalerKind::zscore), x);
  const double s = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(z(0, 0), -1 / s, 1e-12);
  EXPECT_NEAR(z(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(z(2, 0), 1 / s, 1e-12);
  const auto m = apply_scaler(fit_scaler(x, ScalerKind::minmax), Matrix::from_rows({{2}, {5}}));
  EXPECT_DOUBLE_EQ(m(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 0), 2.0);  // unseen values are not clipped
}

TEST(Scaler, DegenerateColumnMapsToZero) {
  const auto x = Matrix::from_rows({{4, 1}, {4, 2}});
  for (auto kind : {ScalerKind::zscore, ScalerKind::minmax}) {
    const auto p = fit_scaler(x, kind);
    EXPECT_TRUE(p.degenerate[0]);
    const auto y = apply_scaler(p, Matrix::from_rows({{4, 1}, {9, 1}}));
    EXPECT_EQ(y(0, 0), 0.0);
    EXPECT_EQ(y(1, 0), 0.0);
  }
}

TEST(Scaler, UnfittedOrWrongWidthFails) {
  EXPECT_THROW(apply_scaler(ScalerParams{}, Matrix::from_rows({{1}})), UsageError);
  const auto p = fit_scaler(Matrix::from_rows({{1, 2}, {3, 4}}), ScalerKind::zscore);
  EXPECT_THROW(apply_scaler(p, Matrix::from_rows({{1}})), ShapeError);
}

TEST(Scaler, FitSeesOnlyTrainingRows) {
  // Changing a test row must not move the parameters fitted on the training rows.
  const auto t = encode_labels(impute_most_frequent(cleveland())).table;
  const auto s = split(t, {0.2, 11, true});
  auto test_changed = s.test;
  test_changed.features(0, 0) += 1000;
  const auto a = fit_scaler(s.train.features, ScalerKind::zscore);
  const auto x1 = apply_scaler(a, s.test.features);
  const auto x2 = apply_scaler(a, test_changed.features);
  for (std::size_t r = 1; r < x1.rows(); ++r) {
    for (std::size_t c = 0; c < x1.cols(); ++c) EXPECT_EQ(x1(r, c), x2(r, c));
  }
}

TEST(Task, BinaryCollapse) {
  const auto t = derive_task(labelled({0, 1, 2, 3, 4}), TaskKind::binary);
  EXPECT_EQ(t.labels, (Labels{0, 1, 1, 1, 1}));
  const auto m = derive_task(labelled({0, 1, 2, 3, 4}), TaskKind::multiclass);
  EXPECT_EQ(m.labels, (Labels{0, 1, 2, 3, 4}));
}

TEST(Task, BinaryCountsAddUpOnClevelandLabels) {
  const auto raw = cleveland();
  const auto b = derive_task(raw, TaskKind::binary);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    EXPECT_EQ(b.labels[i], raw.labels[i] > 0 ? 1 : 0);
    positive += static_cast<std::size_t>(b.labels[i]);
  }
  EXPECT_EQ(positive, 139u);
}

TEST(Task, ParseAndCounts) {
  EXPECT_EQ(parse_task("binary"), TaskKind::binary);
  EXPECT_THROW(parse_task("ternary"), ConfigError);
  EXPECT_EQ(class_counts(Labels{0, 1, 1}, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(class_counts(Labels{0, 3}, 2), DataError);
}

TEST(Split, Sizes) {
  const auto t = cleveland();
  EXPECT_EQ(split(t, {0.2, 1, true}).test.rows(), 61u);
  EXPECT_EQ(split(t, {0.3, 1, true}).test.rows(), 91u);
  EXPECT_EQ(split(t, {0.2, 1, false}).test.rows(), 61u);
}

TEST(Split, DisjointAndCovering) {
  const auto t = derive_task(cleveland(), TaskKind::binary);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = split(t, {0.3, seed, true});
    std::vector<std::size_t> all = s.train_index;
    all.insert(all.end(), s.test_index.begin(), s.test_index.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), t.rows());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_EQ(s.train.rows() + s.test.rows(), t.rows());
  }
}

TEST(Split, Deterministic) {
  const auto t = cleveland();
  const auto a = split(t, {0.2, 42, true});
  const auto b = split(t, {0.2, 42, true});
  EXPECT_EQ(a.test_index, b.test_index);
  EXPECT_TRUE(a.test == b.test);
  const auto c = split(t, {0.2, 43, true});
  EXPECT_NE(a.test_index, c.test_index);
}

TEST(Split, StratifiedWithinOneOfProportion) {
  const auto t = cleveland();  // five severity levels when available
  for (double f : {0.2, 0.3}) {
    const auto s = split(t, {f, 5, true});
    ASSERT_TRUE(s.stratified);
    const int k = *std::max_element(t.labels.begin(), t.labels.end()) + 1;
    const auto all = class_counts(t.labels, k);
    const auto test = class_counts(s.test.labels, k);
    for (int c = 0; c < k; ++c) {
      const double expect = static_cast<double>(all[c]) * static_cast<double>(s.test.rows()) /
                            static_cast<double>(t.rows());
      EXPECT_LE(std::abs(static_cast<double>(test[c]) - expect), 1.0) << "class " << c;
    }
  }
}

TEST(Split, SingletonClassFallsBack) {
  const auto s = split(labelled({0, 0, 0, 0, 1, 1, 1, 2}), {0.25, 1, true});
  EXPECT_FALSE(s.stratified);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_EQ(s.test.rows(), 2u);
}

TEST(Split, InvalidFraction) {
  EXPECT_THROW(split(labelled({0, 1}), {0.0, 1, true}), ConfigError);
  EXPECT_THROW(split(labelled({0, 1}), {1.0, 1, true}), ConfigError);
}

TEST(Oversample, BalancesToMajority) {
  std::vector<int> labels;
  const std::vector<int> counts = {100, 40, 25, 25, 10};
  for (int c = 0; c < 5; ++c) labels.insert(labels.end(), counts[c], c);
  const auto t = labelled(labels);
  const auto o = random_oversample(t, 9, 5);
  EXPECT_EQ(o.rows(), 500u);
  EXPECT_EQ(class_counts(o.labels, 5), (std::vector<std::size_t>(5, 100)));
  // Originals kept as a prefix; every copy duplicates an original row of its class.
  for (std::size_t i = 0; i < t.rows(); ++i) {
    EXPECT_EQ(o.features(i, 0), t.features(i, 0));
    EXPECT_EQ(o.labels[i], t.labels[i]);
  }
  for (std::size_t i = t.rows(); i < o.rows(); ++i) {
    const auto src = static_cast<std::size_t>(o.features(i, 0));
    ASSERT_LT(src, t.rows());
    EXPECT_EQ(t.labels[src], o.labels[i]);
  }
}

TEST(Oversample, BalancedInputUnchanged) {
  const auto t = labelled({0, 1, 2, 0, 1, 2});
  EXPECT_TRUE(random_oversample(t, 1, 3) == t);
}

TEST(Oversample, Deterministic) {
  const auto t = labelled({0, 0, 0, 0, 1, 2});
  EXPECT_TRUE(random_oversample(t, 5, 3) == random_oversample(t, 5, 3));
}

TEST(Oversample, EmptyClassFails) {
  EXPECT_THROW(random_oversample(labelled({0, 0, 1, 1}), 1, 3), ResampleError);
}
