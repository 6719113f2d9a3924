#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "scorefuse/models/classifier.hpp"

namespace scorefuse {

/// L2-regularized maximum-likelihood logistic regression. Two classes use a
/// single sigmoid unit; more classes use one multinomial softmax layer.
class LogisticRegression final : public Classifier {
 public:
  /// `weights` is (units x features), `bias` has one entry per unit; units is
  /// 1 for binary models and class_count otherwise.
  LogisticRegression(int class_count, Matrix weights, std::vector<double> bias, LogisticParams hp,
                     int iterations = 0)
      : Classifier(class_count, weights.cols()),
        weights_(std::move(weights)),
        bias_(std::move(bias)),
        hp_(hp),
        iterations_(iterations) {}

  ModelKind kind() const noexcept override { return ModelKind::LR; }
  const Matrix& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  int iterations() const noexcept { return iterations_; }

  double weight_norm() const {
    double s = 0.0;
    for (double w : weights_.data()) s += w * w;
    return std::sqrt(s);
  }

  /// Linear scores w.x + b, one column per unit.
  Matrix decision_function(const Matrix& rows) const {
    Matrix z(rows.rows(), weights_.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      for (std::size_t u = 0; u < weights_.rows(); ++u) {
        z(r, u) = detail::dot(weights_.row(u), rows.row(r)) + bias_[u];
      }
    }
    return z;
  }

  nlohmann::json hyperparams_json() const override {
    return {{"C", hp_.C}, {"max_iter", hp_.max_iter}, {"tol", hp_.tol},
            {"learning_rate", hp_.learning_rate}};
  }
  nlohmann::json params_json() const override {
    return {{"units", weights_.rows()},
            {"weights", weights_.data()},
            {"bias", bias_},
            {"iterations", iterations_}};
  }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    const Matrix z = decision_function(rows);
    ScoreMatrix p(rows.rows(), static_cast<std::size_t>(class_count()));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      if (weights_.rows() == 1) {
        const double p1 = detail::sigmoid(z(r, 0));
        p(r, 0) = 1.0 - p1;
        p(r, 1) = p1;
      } else {
        auto out = p.row(r);
        for (std::size_t u = 0; u < out.size(); ++u) out[u] = z(r, u);
        detail::softmax(out);
      }
    }
    return p;
  }

 private:
  Matrix weights_;
  std::vector<double> bias_;
  LogisticParams hp_;
  int iterations_ = 0;
};

namespace detail {

/// Largest eigenvalue of X~'X~/n (X~ = X with a ones column) by power iteration.
inline double gram_spectral_norm(const Matrix& x) {
  const std::size_t d = x.cols() + 1;
  const double n = static_cast<double>(x.rows());
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<double> xv(x.rows());
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      xv[r] = dot(x.row(r), std::span<const double>(v.data(), d - 1)) + v[d - 1];
    }
    std::vector<double> w(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c + 1 < d; ++c) w[c] += x(r, c) * xv[r];
      w[d - 1] += xv[r];
    }
    double norm = 0.0;
    for (double& e : w) {
      e /= n;
      norm += e * e;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0)) return 0.0;
    for (std::size_t c = 0; c < d; ++c) v[c] = w[c] / norm;
    if (std::abs(norm - lambda) <= 1e-10 * norm) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  return lambda;
}

}  // namespace detail

/// Mean negative log-likelihood plus ||W||^2 / (2 C n); the bias is not
/// penalized. Exposed for tests.
inline double logistic_objective(const Matrix& x, std::span<const int> y, const Matrix& w,
                                 std::span<const double> b, double C) {
  const double n = static_cast<double>(x.rows());
  double nll = 0.0;
  std::vector<double> z(w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t u = 0; u < w.rows(); ++u) z[u] = detail::dot(w.row(u), x.row(r)) + b[u];
    if (w.rows() == 1) {
      // log(1 + e^z) - y z, stably
      const double t = z[0];
      const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
      nll += softplus - (y[r] == 1 ? t : 0.0);
    } else {
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (double v : z) s += std::exp(v - m);
      nll += m + std::log(s) - z[static_cast<std::size_t>(y[r])];
    }
  }
  double sq = 0.0;
  for (double v : w.data()) sq += v * v;
  return nll / n + sq / (2.0 * C * n);
}

/// Gradient descent on the regularized mean negative log-likelihood until the
/// gradient norm drops below `tol` or `max_iter` steps have run.
inline LogisticRegression train_logistic(const Matrix& x, std::span<const int> y, int class_count,
                                         const LogisticParams& hp) {
  detail::check_training_input(x, y, class_count, "train_logistic");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t units = class_count == 2 ? 1 : static_cast<std::size_t>(class_count);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double reg = 1.0 / (hp.C * static_cast<double>(n));

  double step = hp.learning_rate;
  if (step <= 0) {
    // Hessian of the loss is bounded by c * X~'X~/n + reg, c = 1/4 (sigmoid) or 1/2 (softmax).
    const double curvature = (units == 1 ? 0.25 : 0.5) * detail::gram_spectral_norm(x) + reg;
    step = 1.0 / (1.05 * curvature);
  }

  Matrix w(units, d, 0.0);
  std::vector<double> b(units, 0.0);
  Matrix gw(units, d);
  std::vector<double> gb(units);
  std::vector<double> z(units);
  int it = 0;
  for (; it < hp.max_iter; ++it) {
    std::fill(gw.data().begin(), gw.data().end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = x.row(r);
      for (std::size_t u = 0; u < units; ++u) z[u] = detail::dot(w.row(u), row) + b[u];
      if (units == 1) {
        z[0] = detail::sigmoid(z[0]) - (y[r] == 1 ? 1.0 : 0.0);
      } else {
        detail::softmax(z);
        z[static_cast<std::size_t>(y[r])] -= 1.0;
      }
      for (std::size_t u = 0; u < units; ++u) {
        auto g = gw.row(u);
        for (std::size_t c = 0; c < d; ++c) g[c] += z[u] * row[c];
        gb[u] += z[u];
      }
    }
    double gnorm2 = 0.0;
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t c = 0; c < d; ++c) {
        double& g = gw(u, c);
        g = g * inv_n + reg * w(u, c);
        gnorm2 += g * g;
      }
      gb[u] *= inv_n;
      gnorm2 += gb[u] * gb[u];
    }
    if (!std::isfinite(gnorm2)) {
      std::ostringstream msg;
      msg << "train_logistic: non-finite gradient at iteration " << it << " (learning rate " << step
          << ")";
      throw DivergenceError(msg.str());
    }
    if (std::sqrt(gnorm2) < hp.tol) break;
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t c = 0; c < d; ++c) w(u, c) -= step * gw(u, c);
      b[u] -= step * gb[u];
    }
  }
  const double loss = logistic_objective(x, y, w, b, hp.C);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "train_logistic: non-finite loss (learning rate " << step << ")";
    throw DivergenceError(msg.str());
  }
  LogisticRegression model(class_count, std::move(w), std::move(b), hp, it);
  return model;
}

}  // namespace scorefuse
