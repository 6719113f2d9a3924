#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "scorefuse/models/classifier.hpp"

namespace scorefuse {

/// Depth-one tree: x[feature] <= threshold votes `left_class`, otherwise the
/// other class.
struct Stump {
  int feature = 0;
  double threshold = 0.0;
  int left_class = 0;
  double alpha = 0.0;

  int predict(std::span<const double> x) const {
    return x[static_cast<std::size_t>(feature)] <= threshold ? left_class : 1 - left_class;
  }
  bool operator==(const Stump&) const = default;
};

/// Binary boosted stumps. Scores are the softmax of each class's summed stump
/// weights.
class AdaBoost final : public Classifier {
 public:
  AdaBoost(std::size_t feature_count, std::vector<Stump> stumps, AdaBoostParams hp,
           std::vector<double> round_errors = {})
      : Classifier(2, feature_count),
        stumps_(std::move(stumps)),
        hp_(hp),
        round_errors_(std::move(round_errors)) {}

  ModelKind kind() const noexcept override { return ModelKind::ADA; }
  const std::vector<Stump>& stumps() const noexcept { return stumps_; }
  /// Weighted error of each accepted round's stump.
  const std::vector<double>& round_errors() const noexcept { return round_errors_; }

  /// Class vote totals using only the first `rounds` stumps.
  std::array<double, 2> votes(std::span<const double> x, std::size_t rounds) const {
    std::array<double, 2> v{0.0, 0.0};
    rounds = std::min(rounds, stumps_.size());
    for (std::size_t i = 0; i < rounds; ++i) v[static_cast<std::size_t>(stumps_[i].predict(x))] += stumps_[i].alpha;
    return v;
  }

  /// Hard predictions of the first `rounds` stumps.
  Labels predict_rounds(const Matrix& rows, std::size_t rounds) const {
    Labels out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto v = votes(rows.row(r), rounds);
      out[r] = v[1] > v[0] ? 1 : 0;
    }
    return out;
  }

  nlohmann::json hyperparams_json() const override {
    return {{"n_estimators", hp_.n_estimators}, {"learning_rate", hp_.learning_rate}};
  }
  nlohmann::json params_json() const override {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& st : stumps_) {
      s.push_back({{"feature", st.feature},
                   {"threshold", st.threshold},
                   {"left_class", st.left_class},
                   {"alpha", st.alpha}});
    }
    return {{"stumps", std::move(s)}, {"round_errors", round_errors_}};
  }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    ScoreMatrix p(rows.rows(), 2);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto v = votes(rows.row(r), stumps_.size());
      auto out = p.row(r);
      out[0] = v[0];
      out[1] = v[1];
      detail::softmax(out);
    }
    return p;
  }

 private:
  std::vector<Stump> stumps_;
  AdaBoostParams hp_;
  std::vector<double> round_errors_;
};

namespace detail {

struct StumpFit {
  Stump stump;
  double error = 1.0;
  bool found = false;
};

/// Minimum weighted-error stump over every midpoint of every feature. Ties go
/// to the lowest feature, then the lowest threshold, then left_class 0.
inline StumpFit best_stump(const Matrix& x, std::span<const int> y, std::span<const double> w) {
  StumpFit best;
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    // err(left -> 0) = weight of class 1 on the left + weight of class 0 on the right
    double right0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 0) right0 += w[i];
    }
    double left1 = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      const std::size_t i = order[p];
      (y[i] == 1 ? left1 : right0) += y[i] == 1 ? w[i] : -w[i];
      const double lo = x(i, f);
      const double hi = x(order[p + 1], f);
      if (!(hi > lo)) continue;
      const double e0 = left1 + right0;
      const double e1 = 1.0 - e0;
      const double t = lo + (hi - lo) / 2.0;
      if (e0 < best.error) best = {{static_cast<int>(f), t, 0, 0.0}, e0, true};
      if (e1 < best.error) best = {{static_cast<int>(f), t, 1, 0.0}, e1, true};
    }
  }
  return best;
}

}  // namespace detail

/// Discrete boosting with alpha = lr * 0.5 * ln((1 - err) / err). Stops early
/// when no stump beats chance or when a stump is perfect.
/// `on_round`, when set, sees the renormalized sample weights after each round.
inline AdaBoost train_adaboost(
    const Matrix& x, std::span<const int> y, int class_count, const AdaBoostParams& hp,
    const std::function<void(std::span<const double>)>& on_round = {}) {
  detail::check_training_input(x, y, class_count, "train_adaboost");
  if (class_count != 2) throw UsageError("train_adaboost: only two-class tasks are supported");
  const std::size_t n = x.rows();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<Stump> stumps;
  std::vector<double> errors;
  const double cap = hp.learning_rate * 0.5 * std::log(1e10);
  for (int round = 0; round < hp.n_estimators; ++round) {
    const auto fit = detail::best_stump(x, y, w);
    if (!fit.found) break;
    // The running sums leave ~1e-17 residue on a perfect stump.
    const double err = fit.error < 1e-12 ? 0.0 : fit.error;
    if (err >= 0.5) break;
    Stump s = fit.stump;
    s.alpha = err <= 0 ? cap : hp.learning_rate * 0.5 * std::log((1.0 - err) / err);
    stumps.push_back(s);
    errors.push_back(err);
    if (err <= 0) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yh = (y[i] == 1 ? 1.0 : -1.0) * (s.predict(x.row(i)) == 1 ? 1.0 : -1.0);
      w[i] *= std::exp(-s.alpha * yh);
      total += w[i];
    }
    for (double& v : w) v /= total;
    if (on_round) on_round(w);
  }
  return AdaBoost(x.cols(), std::move(stumps), hp, std::move(errors));
}

}  // namespace scorefuse
