#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "scorefuse/models/classifier.hpp"

namespace scorefuse {

inline double kernel_value(KernelKind kind, double gamma, std::span<const double> a,
                           std::span<const double> b) {
  if (kind == KernelKind::linear) return detail::dot(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

/// One two-class machine: f(x) = sum_i coef_i K(sv_i, x) - rho, mapped to
/// P(positive | f) = 1 / (1 + exp(A f + B)).
struct BinaryMachine {
  Matrix support_vectors;
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;
  /// Set when training saw a single class; the machine then ignores its input.
  std::optional<double> constant_probability;

  double decision(KernelKind kind, double gamma, std::span<const double> x) const {
    double f = -rho;
    for (std::size_t i = 0; i < coef.size(); ++i) {
      f += coef[i] * kernel_value(kind, gamma, support_vectors.row(i), x);
    }
    return f;
  }

  double probability(KernelKind kind, double gamma, std::span<const double> x) const {
    if (constant_probability) return *constant_probability;
    const double t = platt_a * decision(kind, gamma, x) + platt_b;
    // 1 / (1 + e^t)
    return t >= 0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
  }
};

/// Kernel SVM with Platt-calibrated outputs. Two classes use a single machine
/// whose positive side is class 1; more classes use one machine per class
/// against the rest, with probabilities renormalized across machines.
class SupportVectorMachine final : public Classifier {
 public:
  SupportVectorMachine(int class_count, std::size_t feature_count,
                       std::vector<BinaryMachine> machines, SvmParams hp,
                       std::vector<std::string> warnings = {})
      : Classifier(class_count, feature_count), machines_(std::move(machines)), hp_(hp) {
    warnings_ = std::move(warnings);
  }

  ModelKind kind() const noexcept override { return ModelKind::SVM; }
  const std::vector<BinaryMachine>& machines() const noexcept { return machines_; }
  const SvmParams& params() const noexcept { return hp_; }

  /// Raw decision values, one column per machine.
  Matrix decision_function(const Matrix& rows) const {
    Matrix f(rows.rows(), machines_.size());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      for (std::size_t m = 0; m < machines_.size(); ++m) {
        f(r, m) = machines_[m].decision(hp_.kernel, hp_.gamma, rows.row(r));
      }
    }
    return f;
  }

  nlohmann::json hyperparams_json() const override {
    return {{"C", hp_.C},
            {"gamma", hp_.gamma},
            {"kernel", hp_.kernel == KernelKind::rbf ? "rbf" : "linear"},
            {"tol", hp_.tol},
            {"max_iter", hp_.max_iter}};
  }

  nlohmann::json params_json() const override {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : machines_) {
      nlohmann::json j = {{"support_vectors", m.support_vectors.data()},
                          {"coef", m.coef},
                          {"rho", m.rho},
                          {"platt_a", m.platt_a},
                          {"platt_b", m.platt_b}};
      j["constant_probability"] =
          m.constant_probability ? nlohmann::json(*m.constant_probability) : nlohmann::json();
      ms.push_back(std::move(j));
    }
    return {{"machines", std::move(ms)}};
  }

 protected:
  ScoreMatrix score(const Matrix& rows) const override {
    ScoreMatrix p(rows.rows(), static_cast<std::size_t>(class_count()));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto x = rows.row(r);
      if (machines_.size() == 1) {
        const double p1 = machines_[0].probability(hp_.kernel, hp_.gamma, x);
        p(r, 0) = 1.0 - p1;
        p(r, 1) = p1;
        continue;
      }
      double total = 0.0;
      for (std::size_t m = 0; m < machines_.size(); ++m) {
        p(r, m) = machines_[m].probability(hp_.kernel, hp_.gamma, x);
        total += p(r, m);
      }
      for (std::size_t m = 0; m < machines_.size(); ++m) {
        p(r, m) = total > 0 ? p(r, m) / total : 1.0 / static_cast<double>(machines_.size());
      }
    }
    return p;
  }

 private:
  std::vector<BinaryMachine> machines_;
  SvmParams hp_;
};

namespace detail {

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  long iterations = 0;
  bool converged = true;
};

/// Dual soft-margin problem min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0, solved by
/// sequential minimal optimization with second-order working-set selection.
/// `kernel` is the full n x n Gram matrix; y entries are +1/-1.
inline SmoResult solve_smo(const Matrix& kernel, std::span<const int> y, double C, double tol,
                           long max_iter) {
  constexpr double kTau = 1e-12;
  const std::size_t n = y.size();
  SmoResult out;
  out.alpha.assign(n, 0.0);
  auto& a = out.alpha;
  std::vector<double> grad(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) {
    return static_cast<double>(y[i] * y[j]) * kernel(i, j);
  };
  auto is_up = [&](std::size_t t) { return (y[t] == 1 && a[t] < C) || (y[t] == -1 && a[t] > 0); };
  auto is_low = [&](std::size_t t) { return (y[t] == 1 && a[t] > 0) || (y[t] == -1 && a[t] < C); };

  long it = 0;
  for (;; ++it) {
    if (it >= max_iter) {
      out.converged = false;
      break;
    }
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (is_up(t) && -y[t] * grad[t] >= gmax) {
        if (-y[t] * grad[t] > gmax || i == n) i = t;
        gmax = -y[t] * grad[t];
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!is_low(t)) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      if (i == n) continue;
      const double b = gmax + yg;
      if (b > 0) {
        double quad = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -(b * b) / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < tol) break;

    const double old_ai = a[i];
    const double old_aj = a[j];
    if (y[i] != y[j]) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }
    const double dai = a[i] - old_ai;
    const double daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * dai + q(j, t) * daj;
  }
  out.iterations = it;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  out.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return out;
}

/// Sigmoid fit P(y=1|f) = 1/(1+exp(A f + B)) by Newton's method with
/// backtracking on the regularized-target log loss.
inline std::pair<double, double> platt_fit(std::span<const double> f, std::span<const int> y) {
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v == 1 ? prior1 : prior0) += 1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] == 1 ? hi : lo;

  auto loss = [&](double A, double B) {
    double v = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * A + B;
      v += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
    }
    return v;
  };

  double A = 0.0;
  double B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = loss(A, B);
  for (int it = 0; it < 100; ++it) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * A + B;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= 1e-10) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = loss(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step /= 2;
    }
    if (step < 1e-10) break;
  }
  return {A, B};
}

inline BinaryMachine train_machine(const Matrix& x, const Matrix& gram, std::span<const int> y,
                                   const SvmParams& hp, std::vector<std::string>& warnings,
                                   std::string_view label) {
  BinaryMachine m;
  const bool any_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool any_neg = std::find(y.begin(), y.end(), -1) != y.end();
  if (!any_pos || !any_neg) {
    m.constant_probability = any_pos ? 1.0 : 0.0;
    return m;
  }
  const SmoResult sol = solve_smo(gram, y, hp.C, hp.tol, hp.max_iter);
  if (!sol.converged) {
    warnings.push_back("SVM " + std::string(label) + ": KKT tolerance not reached within " +
                       std::to_string(hp.max_iter) + " iterations; returning last iterate");
  }
  m.rho = sol.rho;
  std::vector<double> f(y.size(), -sol.rho);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (sol.alpha[i] <= 0) continue;
    m.support_vectors.append_row(x.row(i));
    m.coef.push_back(sol.alpha[i] * y[i]);
    for (std::size_t t = 0; t < y.size(); ++t) f[t] += sol.alpha[i] * y[i] * gram(i, t);
  }
  std::tie(m.platt_a, m.platt_b) = platt_fit(f, y);
  return m;
}

}  // namespace detail

inline SupportVectorMachine train_svm(const Matrix& x, std::span<const int> y, int class_count,
                                      const SvmParams& hp) {
  detail::check_training_input(x, y, class_count, "train_svm");
  const std::size_t n = x.rows();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      gram(i, j) = gram(j, i) = kernel_value(hp.kernel, hp.gamma, x.row(i), x.row(j));
    }
  }
  std::vector<std::string> warnings;
  std::vector<BinaryMachine> machines;
  std::vector<int> signs(n);
  if (class_count == 2) {
    for (std::size_t i = 0; i < n; ++i) signs[i] = y[i] == 1 ? 1 : -1;
    machines.push_back(detail::train_machine(x, gram, signs, hp, warnings, "1-vs-0"));
  } else {
    for (int c = 0; c < class_count; ++c) {
      for (std::size_t i = 0; i < n; ++i) signs[i] = y[i] == c ? 1 : -1;
      machines.push_back(detail::train_machine(x, gram, signs, hp, warnings,
                                               std::to_string(c) + "-vs-rest"));
    }
  }
  return SupportVectorMachine(class_count, x.cols(), std::move(machines), hp, std::move(warnings));
}

}  // namespace scorefuse
