#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/error.hpp"
#include "scorefuse/matrix.hpp"

namespace scorefuse {

struct FusionWeights {
  double w1 = 0.5;
  double w2 = 0.5;

  /// w2 is derived so the pair sums to one exactly.
  static FusionWeights from_w1(double w1) { return {w1, 1.0 - w1}; }
  bool operator==(const FusionWeights&) const = default;
};

using WeightGrid = std::vector<FusionWeights>;

/// 0.95/0.05, 0.90/0.10, ..., 0.05/0.95.
inline WeightGrid default_weight_grid() {
  WeightGrid g;
  for (int i = 0; i < 19; ++i) g.push_back(FusionWeights::from_w1((19 - i) / 20.0));
  return g;
}

/// D_f = w1 * D1 + w2 * D2, elementwise.
inline ScoreMatrix fuse(const ScoreMatrix& d1, const ScoreMatrix& d2, FusionWeights w) {
  if (d1.rows() != d2.rows() || d1.cols() != d2.cols()) {
    throw FusionError("fuse: score shapes differ (" + std::to_string(d1.rows()) + "x" +
                      std::to_string(d1.cols()) + " vs " + std::to_string(d2.rows()) + "x" +
                      std::to_string(d2.cols()) + ")");
  }
  ScoreMatrix out(d1.rows(), d1.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = w.w1 * d1.data()[i] + w.w2 * d2.data()[i];
  }
  return out;
}

/// Row-wise argmax; ties go to the lowest class index.
inline Labels decide(const ScoreMatrix& scores) {
  Labels out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

inline double accuracy_of(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw ShapeError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

struct GridPoint {
  FusionWeights weights;
  double accuracy = 0.0;  // fraction in [0,1]
};

struct GridSearchResult {
  FusionWeights best;
  double best_accuracy = 0.0;
  ScoreMatrix fused;
  std::vector<GridPoint> sweep;  // one entry per grid point, in grid order
};

/// Evaluates every grid point by the accuracy of decide(fuse(...)) against
/// `truth` and keeps the best; the earliest grid entry wins ties.
inline GridSearchResult grid_search(const ScoreMatrix& d1, const ScoreMatrix& d2,
                                    std::span<const int> truth,
                                    const WeightGrid& grid = default_weight_grid()) {
  if (truth.size() != d1.rows()) throw FusionError("grid_search: truth length differs from score rows");
  if (grid.empty()) throw FusionError("grid_search: empty weight grid");
  GridSearchResult res;
  res.best_accuracy = -1.0;
  for (const auto& w : grid) {
    auto fused = fuse(d1, d2, w);
    const double acc = accuracy_of(truth, decide(fused));
    res.sweep.push_back({w, acc});
    if (acc > res.best_accuracy) {
      res.best_accuracy = acc;
      res.best = w;
      res.fused = std::move(fused);
    }
  }
  return res;
}

inline nlohmann::json to_json(const GridSearchResult& r) {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& p : r.sweep) sweep.push_back({{"w1", p.weights.w1}, {"w2", p.weights.w2}, {"accuracy", p.accuracy}});
  return {{"w1", r.best.w1}, {"w2", r.best.w2}, {"accuracy", r.best_accuracy}, {"sweep", sweep}};
}

}  // namespace scorefuse
