#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "scorefuse/models/classifier.hpp"
#include "scorefuse/random.hpp"

namespace scorefuse {

/// Gini impurity 1 - sum p_c^2 of a class-count vector.
inline double gini(std::span<const double> counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

/// Shannon entropy in bits of a class-count vector.
inline double entropy(std::span<const double> counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n <= 0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0) h -= (c / n) * std::log2(c / n);
  }
  return h;
}

inline double impurity(Criterion c, std::span<const double> counts) {
  return c == Criterion::gini ? gini(counts) : entropy(counts);
}

/// Internal nodes route x[feature] <= threshold to `left`. Leaves have
/// feature == -1 and carry the class-frequency vector of their samples.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

inline const std::vector<double>& tree_leaf(const std::vector<TreeNode>& nodes,
                                            std::span<const double> x) {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes[i].distribution;
}

namespace detail {

struct GrowParams {
  Criterion criterion = Criterion::gini;
  int max_depth = 0;     // 0 = unlimited
  int max_features = 0;  // 0 = all
  int min_samples_leaf = 1;
  Splitter splitter = Splitter::best;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, int k, GrowParams p, Rng& rng)
      : x_(x), y_(y), k_(static_cast<std::size_t>(k)), p_(p), rng_(rng) {}

  /// `rows` may repeat indices (bootstrap samples).
  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
  };

  std::vector<double> counts_of(const std::vector<std::size_t>& rows) const {
    std::vector<double> c(k_, 0.0);
    for (std::size_t r : rows) c[static_cast<std::size_t>(y_[r])] += 1.0;
    return c;
  }

  int grow(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto counts = counts_of(rows);
    const double n = static_cast<double>(rows.size());

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool too_deep = p_.max_depth > 0 && depth >= p_.max_depth;
    const bool too_small = rows.size() < 2 * static_cast<std::size_t>(p_.min_samples_leaf);
    Split best;
    if (!pure && !too_deep && !too_small) best = find_split(rows);
    if (best.feature < 0) {
      auto& leaf = nodes_[static_cast<std::size_t>(id)];
      leaf.distribution.resize(k_);
      for (std::size_t c = 0; c < k_; ++c) leaf.distribution[c] = counts[c] / n;
      return id;
    }
    std::vector<std::size_t> lo, hi;
    for (std::size_t r : rows) {
      (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? lo : hi).push_back(r);
    }
    const int l = grow(lo, depth + 1);
    const int h = grow(hi, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = h;
    return id;
  }

  /// Weighted child impurity of splitting `rows` at (feature, threshold), or
  /// +inf when either side is below min_samples_leaf.
  double evaluate(const std::vector<std::size_t>& rows, std::size_t f, double threshold) const {
    std::vector<double> lc(k_, 0.0), rc(k_, 0.0);
    for (std::size_t r : rows) {
      (x_(r, f) <= threshold ? lc : rc)[static_cast<std::size_t>(y_[r])] += 1.0;
    }
    const double nl = std::accumulate(lc.begin(), lc.end(), 0.0);
    const double nr = std::accumulate(rc.begin(), rc.end(), 0.0);
    if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf) {
      return std::numeric_limits<double>::infinity();
    }
    return (nl * impurity(p_.criterion, lc) + nr * impurity(p_.criterion, rc)) / (nl + nr);
  }

  Split find_split(const std::vector<std::size_t>& rows) {
    const std::size_t d = x_.cols();
    const std::size_t m =
        p_.max_features <= 0 ? d : std::min(d, static_cast<std::size_t>(p_.max_features));
    const auto features = sample_without_replacement(d, m, rng_);
    Split best;
    for (std::size_t f : features) {
      if (p_.splitter == Splitter::random) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r : rows) {
          lo = std::min(lo, x_(r, f));
          hi = std::max(hi, x_(r, f));
        }
        if (!(hi > lo)) continue;
        double t = uniform(rng_, lo, hi);
        const double s = evaluate(rows, f, t);
        if (s < best.score) best = {static_cast<int>(f), t, s};
      } else {
        best_split_on(rows, f, best);
      }
    }
    return best;
  }

  /// Exhaustive scan over midpoints between consecutive distinct values.
  void best_split_on(const std::vector<std::size_t>& rows, std::size_t f, Split& best) const {
    std::vector<std::pair<double, int>> v;
    v.reserve(rows.size());
    for (std::size_t r : rows) v.emplace_back(x_(r, f), y_[r]);
    std::sort(v.begin(), v.end());
    std::vector<double> lc(k_, 0.0), rc(k_, 0.0);
    for (const auto& e : v) rc[static_cast<std::size_t>(e.second)] += 1.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      lc[static_cast<std::size_t>(v[i].second)] += 1.0;
      rc[static_cast<std::size_t>(v[i].second)] -= 1.0;
      if (!(v[i + 1].first > v[i].first)) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf) continue;
      const double s = (nl * impurity(p_.criterion, lc) + nr * impurity(p_.criterion, rc)) / n;
      if (s < best.score) {
        double t = v[i].first + (v[i + 1].first - v[i].first) / 2.0;
        if (!(t < v[i + 1].first)) t = v[i].first;  // adjacent doubles
        best = {static_cast<int>(f), t, s};
      }
    }
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t k_;
  GrowParams p_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

inline nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& n : nodes) {
    if (n.is_leaf()) {
      out.push_back({{"leaf", n.distribution}});
    } else {
      out.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right}});
    }
  }
  return out;
}

inline std::vector<TreeNode> nodes_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& e : j) {
    TreeNode n;
    if (e.contains("leaf")) {
      n.distribution = e.at("leaf").get<std::vector<double>>();
    } else {
      n.feature = e.at("feature").get<int>();
      n.threshold = e.at("threshold").get<double>();
      n.left = e.at("left").get<int>();
      n.right = e.at("right").get<int>();
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

inline std::string criterion_name(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

}  // namespace detail

class DecisionTree final : public Classifier {
 public:
  DecisionTree(int class_count, std::size_t feature_count, std::vector<TreeNode> nodes,
               TreeParams hp)
      : Classifier(class_count, feature_count), nodes_(std::move(nodes)), hp_(hp) {}

  ModelKind kind() const noexcept override { return ModelKind::DT; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  int depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].is_leaf()) continue;
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
      best = std::max(best, d[i] + 1);
    }
    return best;
  }

  nlohmann::json hyperparams_json() const override {
    return {{"criterion", detail::criterion_name(hp_.criterion)},
            {"max_depth", hp_.max_depth},
            {"max_features", hp_.max_features},
            {"min_samples_leaf", hp_.min_samples_leaf},
            {"splitter", hp_.splitter == Splitter::random ? "random" : "best"}};
  }
  nlohmann::json params_json() const override { return {{"nodes", detail::nodes_to_json(nodes_)}}; }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    ScoreMatrix p(rows.rows(), static_cast<std::size_t>(class_count()));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto& dist = tree_leaf(nodes_, rows.row(r));
      std::copy(dist.begin(), dist.end(), p.row(r).begin());
    }
    return p;
  }

 private:
  std::vector<TreeNode> nodes_;
  TreeParams hp_;
};

inline DecisionTree train_tree(const Matrix& x, std::span<const int> y, int class_count,
                               const TreeParams& hp, std::uint64_t seed) {
  detail::check_training_input(x, y, class_count, "train_tree");
  Rng rng(seed);
  detail::GrowParams g{hp.criterion, hp.max_depth, hp.max_features, hp.min_samples_leaf,
                       hp.splitter};
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto nodes = detail::TreeBuilder(x, y, class_count, g, rng).build(std::move(rows));
  return DecisionTree(class_count, x.cols(), std::move(nodes), hp);
}

}  // namespace scorefuse
