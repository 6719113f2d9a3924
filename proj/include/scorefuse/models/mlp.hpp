#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "scorefuse/models/classifier.hpp"
#include "scorefuse/random.hpp"

namespace scorefuse {

/// d -> h (sigmoid) -> k (softmax) network parameters.
struct MlpWeights {
  Matrix w1;  // h x d
  std::vector<double> b1;
  Matrix w2;  // k x h
  std::vector<double> b2;

  std::size_t size() const { return w1.data().size() + b1.size() + w2.data().size() + b2.size(); }

  /// Flat view in the order w1, b1, w2, b2.
  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(size());
    v.insert(v.end(), w1.data().begin(), w1.data().end());
    v.insert(v.end(), b1.begin(), b1.end());
    v.insert(v.end(), w2.data().begin(), w2.data().end());
    v.insert(v.end(), b2.begin(), b2.end());
    return v;
  }

  void assign(std::span<const double> v) {
    auto it = v.begin();
    for (auto* part : {&w1.data(), &b1, &w2.data(), &b2}) {
      std::copy(it, it + static_cast<std::ptrdiff_t>(part->size()), part->begin());
      it += static_cast<std::ptrdiff_t>(part->size());
    }
  }

  bool operator==(const MlpWeights&) const = default;
};

namespace detail {

inline void mlp_forward(const MlpWeights& w, std::span<const double> x, std::vector<double>& hidden,
                        std::vector<double>& out) {
  hidden.resize(w.w1.rows());
  for (std::size_t j = 0; j < hidden.size(); ++j) hidden[j] = sigmoid(dot(w.w1.row(j), x) + w.b1[j]);
  out.resize(w.w2.rows());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = dot(w.w2.row(c), hidden) + w.b2[c];
  softmax(out);
}

}  // namespace detail

/// Mean cross-entropy over `rows` of x plus l2 * (||W1||^2 + ||W2||^2). When
/// `grad` is non-null it receives the gradient, laid out like MlpWeights.
inline double mlp_loss(const MlpWeights& w, const Matrix& x, std::span<const int> y,
                       std::span<const std::size_t> rows, double l2, MlpWeights* grad = nullptr) {
  if (grad) {
    *grad = w;
    std::fill(grad->w1.data().begin(), grad->w1.data().end(), 0.0);
    std::fill(grad->b1.begin(), grad->b1.end(), 0.0);
    std::fill(grad->w2.data().begin(), grad->w2.data().end(), 0.0);
    std::fill(grad->b2.begin(), grad->b2.end(), 0.0);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  const std::size_t h = w.w1.rows();
  const std::size_t k = w.w2.rows();
  std::vector<double> hidden, out, dh(h);
  double loss = 0.0;
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    detail::mlp_forward(w, xr, hidden, out);
    const auto target = static_cast<std::size_t>(y[r]);
    loss -= std::log(std::max(out[target], 1e-300));
    if (!grad) continue;
    out[target] -= 1.0;  // dL/dz for softmax + cross-entropy
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double g = out[c] * inv;
      auto gw = grad->w2.row(c);
      for (std::size_t j = 0; j < h; ++j) {
        gw[j] += g * hidden[j];
        dh[j] += g * w.w2(c, j);
      }
      grad->b2[c] += g;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double g = dh[j] * hidden[j] * (1.0 - hidden[j]);
      auto gw = grad->w1.row(j);
      for (std::size_t f = 0; f < xr.size(); ++f) gw[f] += g * xr[f];
      grad->b1[j] += g;
    }
  }
  double sq = 0.0;
  for (double v : w.w1.data()) sq += v * v;
  for (double v : w.w2.data()) sq += v * v;
  if (grad) {
    for (std::size_t i = 0; i < w.w1.data().size(); ++i) grad->w1.data()[i] += 2.0 * l2 * w.w1.data()[i];
    for (std::size_t i = 0; i < w.w2.data().size(); ++i) grad->w2.data()[i] += 2.0 * l2 * w.w2.data()[i];
  }
  return loss * inv + l2 * sq;
}

/// Seeded initialization: weights uniform(-0.5, 0.5) / sqrt(fan_in), zero biases.
inline MlpWeights mlp_init(std::size_t d, std::size_t h, std::size_t k, Rng& rng) {
  MlpWeights w{Matrix(h, d), std::vector<double>(h, 0.0), Matrix(k, h), std::vector<double>(k, 0.0)};
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (double& v : w.w1.data()) v = (uniform01(rng) - 0.5) * s1;
  for (double& v : w.w2.data()) v = (uniform01(rng) - 0.5) * s2;
  return w;
}

class MultilayerPerceptron final : public Classifier {
 public:
  MultilayerPerceptron(int class_count, MlpWeights weights, MlpParams hp,
                       std::vector<double> loss_history = {})
      : Classifier(class_count, weights.w1.cols()),
        w_(std::move(weights)),
        hp_(std::move(hp)),
        loss_history_(std::move(loss_history)) {}

  ModelKind kind() const noexcept override { return ModelKind::ANN; }
  const MlpWeights& weights() const noexcept { return w_; }
  /// Mean training loss after each epoch.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  nlohmann::json hyperparams_json() const override {
    return {{"learning_rate", hp_.learning_rate}, {"optimizer", hp_.optimizer},
            {"batch_size", hp_.batch_size},       {"epochs", hp_.epochs},
            {"hidden_units", hp_.hidden_units},   {"l2", hp_.l2}};
  }
  nlohmann::json params_json() const override {
    return {{"w1", w_.w1.data()}, {"b1", w_.b1}, {"w2", w_.w2.data()}, {"b2", w_.b2},
            {"loss_history", loss_history_}};
  }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    ScoreMatrix p(rows.rows(), static_cast<std::size_t>(class_count()));
    std::vector<double> hidden, out;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      detail::mlp_forward(w_, rows.row(r), hidden, out);
      std::copy(out.begin(), out.end(), p.row(r).begin());
    }
    return p;
  }

 private:
  MlpWeights w_;
  MlpParams hp_;
  std::vector<double> loss_history_;
};

/// Mini-batch SGD; each epoch visits the rows in a freshly shuffled order.
inline MultilayerPerceptron train_mlp(const Matrix& x, std::span<const int> y, int class_count,
                                      const MlpParams& hp, std::uint64_t seed) {
  detail::check_training_input(x, y, class_count, "train_mlp");
  Rng rng(seed);
  MlpWeights w = mlp_init(x.cols(), static_cast<std::size_t>(hp.hidden_units),
                          static_cast<std::size_t>(class_count), rng);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  std::vector<double> history;
  MlpWeights g;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      const double loss = mlp_loss(w, x, y, rows, hp.l2, &g);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "train_mlp: non-finite loss in epoch " << epoch << " (learning rate "
            << hp.learning_rate << ")";
        throw DivergenceError(msg.str());
      }
      total += loss * static_cast<double>(len);
      auto step = [&](std::vector<double>& p, const std::vector<double>& d) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= hp.learning_rate * d[i];
      };
      step(w.w1.data(), g.w1.data());
      step(w.b1, g.b1);
      step(w.w2.data(), g.w2.data());
      step(w.b2, g.b2);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
  return MultilayerPerceptron(class_count, std::move(w), hp, std::move(history));
}

}  // namespace scorefuse
