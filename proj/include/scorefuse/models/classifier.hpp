#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/error.hpp"
#include "scorefuse/matrix.hpp"
#include "scorefuse/preprocess.hpp"

namespace scorefuse {

enum class ModelKind { LR, SVM, DT, RF, ANN, ADA };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::LR, ModelKind::SVM, ModelKind::DT, ModelKind::RF, ModelKind::ANN, ModelKind::ADA};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LR: return "LR";
    case ModelKind::SVM: return "SVM";
    case ModelKind::DT: return "DT";
    case ModelKind::RF: return "RF";
    case ModelKind::ANN: return "ANN";
    case ModelKind::ADA: return "ADA";
  }
  return "?";
}

/// Case-insensitive: "lr", "Svm", "ADA", ...
inline ModelKind parse_model_kind(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == up) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Hyperparameters

struct LogisticParams {
  double C = 1.0;            // inverse L2 strength
  int max_iter = 5000;
  double tol = 1e-6;         // gradient-norm stop
  double learning_rate = 0;  // 0 selects 1/L from a curvature bound
};

enum class KernelKind { linear, rbf };

struct SvmParams {
  double C = 1.0;
  double gamma = 0.1;
  KernelKind kernel = KernelKind::rbf;
  double tol = 1e-3;  // KKT violation tolerance
  long max_iter = 1'000'000;
};

enum class Criterion { gini, entropy };
enum class Splitter { best, random };

struct TreeParams {
  Criterion criterion = Criterion::gini;
  int max_depth = 8;         // 0 = unlimited
  int max_features = 8;      // 0 = all
  int min_samples_leaf = 7;
  Splitter splitter = Splitter::random;
};

struct ForestParams {
  int n_estimators = 100;
  int max_features = 4;  // round(sqrt(13))
  bool bootstrap = true;
  int max_depth = 0;
  int min_samples_leaf = 1;
  Criterion criterion = Criterion::gini;
  int threads = 1;
};

struct MlpParams {
  double learning_rate = 0.01;
  std::string optimizer = "sgd";
  int batch_size = 10;
  int epochs = 15;
  int hidden_units = 8;
  double l2 = 0.01;
};

struct AdaBoostParams {
  int n_estimators = 250;
  double learning_rate = 0.01;
};

struct Hyperparams {
  LogisticParams lr;
  SvmParams svm;
  TreeParams dt;
  ForestParams rf;
  MlpParams ann;
  AdaBoostParams ada;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("invalid hyperparameter: ") + what);
    };
    require(lr.C > 0, "LR C must be > 0");
    require(lr.max_iter >= 0, "LR max_iter must be >= 0");
    require(lr.learning_rate >= 0, "LR learning_rate must be >= 0");
    require(svm.C > 0, "SVM C must be > 0");
    require(svm.gamma > 0, "SVM gamma must be > 0");
    require(svm.tol > 0, "SVM tol must be > 0");
    require(dt.max_depth >= 1, "DT max_depth must be >= 1");
    require(dt.max_features >= 0, "DT max_features must be >= 0");
    require(dt.min_samples_leaf >= 1, "DT min_samples_leaf must be >= 1");
    require(rf.n_estimators >= 1, "RF n_estimators must be >= 1");
    require(rf.max_depth >= 0, "RF max_depth must be >= 0");
    require(rf.min_samples_leaf >= 1, "RF min_samples_leaf must be >= 1");
    require(ann.learning_rate > 0, "ANN learning_rate must be > 0");
    require(ann.optimizer == "sgd", "ANN optimizer must be sgd");
    require(ann.batch_size >= 1, "ANN batch_size must be >= 1");
    require(ann.epochs >= 0, "ANN epochs must be >= 0");
    require(ann.hidden_units >= 1, "ANN hidden_units must be >= 1");
    require(ann.l2 >= 0, "ANN l2 must be >= 0");
    require(ada.n_estimators >= 1, "ADA n_estimators must be >= 1");
    require(ada.learning_rate > 0, "ADA learning_rate must be > 0");
  }
};

/// Tuned settings per (task, split). Fractions other than 0.2/0.3
/// use the nearer of the two columns. DT and ADA have no multiclass column; the
/// binary settings are returned for experimentation.
inline Hyperparams default_hyperparams(TaskKind task, double test_fraction) {
  const bool eighty_twenty = test_fraction <= 0.25;
  Hyperparams hp;
  if (task == TaskKind::binary) {
    hp.lr.C = 1.0;
    hp.svm = {.C = 1.0, .gamma = eighty_twenty ? 0.01 : 0.1, .kernel = KernelKind::rbf};
    hp.rf.n_estimators = 100;
    hp.ann.batch_size = 10;
    hp.ann.epochs = 15;
    hp.ada.n_estimators = eighty_twenty ? 200 : 250;
  } else {
    hp.lr.C = eighty_twenty ? 0.001 : 0.1;
    hp.svm = {.C = eighty_twenty ? 100.0 : 0.01, .gamma = 0.1, .kernel = KernelKind::linear};
    hp.rf.n_estimators = eighty_twenty ? 200 : 100;
    hp.ann.batch_size = 5;
    hp.ann.epochs = 20;
  }
  hp.ann.learning_rate = 0.01;
  hp.ada.learning_rate = 0.01;
  return hp;
}

// ---------------------------------------------------------------------------
// Common scoring contract

/// A fitted probabilistic classifier. Instances only exist in the fitted state:
/// they are produced by a trainer or by deserialization.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const noexcept = 0;
  int class_count() const noexcept { return class_count_; }
  std::size_t feature_count() const noexcept { return feature_count_; }

  /// One probability row per input row.
  ScoreMatrix predict_proba(const Matrix& rows) const {
    if (!rows.empty() && rows.cols() != feature_count_) {
      throw ShapeError(std::string(to_string(kind())) + ": expected " +
                       std::to_string(feature_count_) + " features, got " +
                       std::to_string(rows.cols()));
    }
    return score(rows);
  }

  Labels predict(const Matrix& rows) const {
    const auto p = predict_proba(rows);
    Labels out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) {
      const auto row = p.row(r);
      out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
  }

  /// Hyperparameters and fitted parameters, for the model document.
  virtual nlohmann::json hyperparams_json() const = 0;
  virtual nlohmann::json params_json() const = 0;

  /// Non-fatal training diagnostics (e.g. optimizer hit its iteration cap).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 protected:
  Classifier(int class_count, std::size_t feature_count)
      : class_count_(class_count), feature_count_(feature_count) {}

  virtual ScoreMatrix score(const Matrix& rows) const = 0;

  std::vector<std::string> warnings_;

 private:
  int class_count_;
  std::size_t feature_count_;
};

namespace detail {

inline void check_training_input(const Matrix& x, std::span<const int> y, int class_count,
                                 std::string_view who) {
  if (x.empty()) throw UsageError(std::string(who) + ": empty training set");
  if (x.rows() != y.size()) throw ShapeError(std::string(who) + ": label count differs from row count");
  if (class_count < 2) throw UsageError(std::string(who) + ": need at least 2 classes");
  for (int v : y) {
    if (v < 0 || v >= class_count) {
      throw UsageError(std::string(who) + ": label " + std::to_string(v) + " outside 0.." +
                       std::to_string(class_count - 1));
    }
  }
}

/// In-place numerically stable softmax.
inline void softmax(std::span<double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : z) v /= s;
}

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

}  // namespace scorefuse
