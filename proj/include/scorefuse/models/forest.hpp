#pragma once

#include <algorithm>
#include <numeric>
#include <thread>
#include <vector>

#include "scorefuse/models/tree.hpp"

namespace scorefuse {

/// Per-tree seed; tree t never depends on how many trees precede or follow it.
inline std::uint64_t forest_tree_seed(std::uint64_t seed, std::size_t t) {
  return derive_seed(seed, "forest-tree", static_cast<std::uint64_t>(t));
}

/// Bagged trees with per-split feature subsampling, scored by averaging leaf
/// class frequencies.
class RandomForest final : public Classifier {
 public:
  RandomForest(int class_count, std::size_t feature_count,
               std::vector<std::vector<TreeNode>> trees, ForestParams hp)
      : Classifier(class_count, feature_count), trees_(std::move(trees)), hp_(hp) {}

  ModelKind kind() const noexcept override { return ModelKind::RF; }
  const std::vector<std::vector<TreeNode>>& trees() const noexcept { return trees_; }

  nlohmann::json hyperparams_json() const override {
    return {{"n_estimators", hp_.n_estimators},
            {"max_features", hp_.max_features},
            {"bootstrap", hp_.bootstrap},
            {"max_depth", hp_.max_depth},
            {"min_samples_leaf", hp_.min_samples_leaf},
            {"criterion", detail::criterion_name(hp_.criterion)}};
  }
  nlohmann::json params_json() const override {
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : trees_) ts.push_back(detail::nodes_to_json(t));
    return {{"trees", std::move(ts)}};
  }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    ScoreMatrix p(rows.rows(), static_cast<std::size_t>(class_count()));
    const double inv = 1.0 / static_cast<double>(trees_.size());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      auto out = p.row(r);
      for (const auto& t : trees_) {
        const auto& dist = tree_leaf(t, rows.row(r));
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += dist[c];
      }
      for (double& v : out) v *= inv;
    }
    return p;
  }

 private:
  std::vector<std::vector<TreeNode>> trees_;
  ForestParams hp_;
};

/// Equivalent single-tree settings for tree t of a forest; exposed so tests
/// can rebuild one member with train_tree.
inline TreeParams forest_member_params(const ForestParams& hp) {
  return {hp.criterion, hp.max_depth, hp.max_features, hp.min_samples_leaf, Splitter::best};
}

inline RandomForest train_forest(const Matrix& x, std::span<const int> y, int class_count,
                                 const ForestParams& hp, std::uint64_t seed) {
  detail::check_training_input(x, y, class_count, "train_forest");
  const std::size_t n = x.rows();
  const std::size_t count = static_cast<std::size_t>(hp.n_estimators);
  const detail::GrowParams g{hp.criterion, hp.max_depth, hp.max_features, hp.min_samples_leaf,
                             Splitter::best};
  std::vector<std::vector<TreeNode>> trees(count);

  auto build = [&](std::size_t t) {
    Rng rng(forest_tree_seed(seed, t));
    std::vector<std::size_t> rows(n);
    if (hp.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, n);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = detail::TreeBuilder(x, y, class_count, g, rng).build(std::move(rows));
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(hp.threads, 1)), 1, count);
  if (workers == 1) {
    for (std::size_t t = 0; t < count; ++t) build(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < count; t += workers) build(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return RandomForest(class_count, x.cols(), std::move(trees), hp);
}

}  // namespace scorefuse
