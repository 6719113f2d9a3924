#pragma once

#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "scorefuse/models/adaboost.hpp"
#include "scorefuse/models/classifier.hpp"
#include "scorefuse/models/forest.hpp"
#include "scorefuse/models/logistic.hpp"
#include "scorefuse/models/mlp.hpp"
#include "scorefuse/models/svm.hpp"
#include "scorefuse/models/tree.hpp"
#include "scorefuse/random.hpp"

namespace scorefuse {

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// Hyperparameter overrides. Each reader updates only the keys present.

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hyperparameter '") + key + "': " + e.what());
  }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                       std::string_view section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

inline Criterion parse_criterion(const std::string& s) {
  if (s == "gini") return Criterion::gini;
  if (s == "entropy") return Criterion::entropy;
  throw ConfigError("unknown criterion '" + s + "'");
}

}  // namespace detail

inline void apply_json(LogisticParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"C", "max_iter", "tol", "learning_rate"}, "LR");
  detail::read_opt(j, "C", p.C);
  detail::read_opt(j, "max_iter", p.max_iter);
  detail::read_opt(j, "tol", p.tol);
  detail::read_opt(j, "learning_rate", p.learning_rate);
}

inline void apply_json(SvmParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"C", "gamma", "kernel", "tol", "max_iter"}, "SVM");
  detail::read_opt(j, "C", p.C);
  detail::read_opt(j, "gamma", p.gamma);
  detail::read_opt(j, "tol", p.tol);
  detail::read_opt(j, "max_iter", p.max_iter);
  if (j.contains("kernel")) {
    const auto k = j.at("kernel").get<std::string>();
    if (k == "rbf") p.kernel = KernelKind::rbf;
    else if (k == "linear") p.kernel = KernelKind::linear;
    else throw ConfigError("SVM: unknown kernel '" + k + "'");
  }
}

inline void apply_json(TreeParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"criterion", "max_depth", "max_features", "min_samples_leaf", "splitter"},
                     "DT");
  if (j.contains("criterion")) p.criterion = detail::parse_criterion(j.at("criterion").get<std::string>());
  detail::read_opt(j, "max_depth", p.max_depth);
  detail::read_opt(j, "max_features", p.max_features);
  detail::read_opt(j, "min_samples_leaf", p.min_samples_leaf);
  if (j.contains("splitter")) {
    const auto s = j.at("splitter").get<std::string>();
    if (s == "random") p.splitter = Splitter::random;
    else if (s == "best") p.splitter = Splitter::best;
    else throw ConfigError("DT: unknown splitter '" + s + "'");
  }
}

inline void apply_json(ForestParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"n_estimators", "max_features", "bootstrap", "max_depth",
                         "min_samples_leaf", "criterion", "threads"},
                     "RF");
  detail::read_opt(j, "n_estimators", p.n_estimators);
  detail::read_opt(j, "max_features", p.max_features);
  detail::read_opt(j, "bootstrap", p.bootstrap);
  detail::read_opt(j, "max_depth", p.max_depth);
  detail::read_opt(j, "min_samples_leaf", p.min_samples_leaf);
  detail::read_opt(j, "threads", p.threads);
  if (j.contains("criterion")) p.criterion = detail::parse_criterion(j.at("criterion").get<std::string>());
}

inline void apply_json(MlpParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"learning_rate", "optimizer", "batch_size", "epochs", "hidden_units", "l2"},
                     "ANN");
  detail::read_opt(j, "learning_rate", p.learning_rate);
  detail::read_opt(j, "optimizer", p.optimizer);
  detail::read_opt(j, "batch_size", p.batch_size);
  detail::read_opt(j, "epochs", p.epochs);
  detail::read_opt(j, "hidden_units", p.hidden_units);
  detail::read_opt(j, "l2", p.l2);
}

inline void apply_json(AdaBoostParams& p, const nlohmann::json& j) {
  detail::check_keys(j, {"n_estimators", "learning_rate"}, "ADA");
  detail::read_opt(j, "n_estimators", p.n_estimators);
  detail::read_opt(j, "learning_rate", p.learning_rate);
}

/// Overrides keyed by model kind, e.g. {"SVM": {"C": 10}, "RF": {"n_estimators": 50}}.
inline void apply_json(Hyperparams& hp, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("hyperparams: expected an object");
  for (const auto& [key, value] : j.items()) {
    switch (parse_model_kind(key)) {
      case ModelKind::LR: apply_json(hp.lr, value); break;
      case ModelKind::SVM: apply_json(hp.svm, value); break;
      case ModelKind::DT: apply_json(hp.dt, value); break;
      case ModelKind::RF: apply_json(hp.rf, value); break;
      case ModelKind::ANN: apply_json(hp.ann, value); break;
      case ModelKind::ADA: apply_json(hp.ada, value); break;
    }
  }
  hp.validate();
}

inline nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  nlohmann::json j;
  j["LR"] = {{"C", hp.lr.C}, {"max_iter", hp.lr.max_iter}, {"tol", hp.lr.tol},
             {"learning_rate", hp.lr.learning_rate}};
  j["SVM"] = SupportVectorMachine(2, 0, {}, hp.svm).hyperparams_json();
  j["DT"] = DecisionTree(2, 0, {}, hp.dt).hyperparams_json();
  j["RF"] = RandomForest(2, 0, {}, hp.rf).hyperparams_json();
  j["ANN"] = MultilayerPerceptron(2, MlpWeights{}, hp.ann).hyperparams_json();
  j["ADA"] = AdaBoost(0, {}, hp.ada).hyperparams_json();
  return j;
}

// ---------------------------------------------------------------------------
// Training dispatch

/// Trains one model. `seed` drives every random choice of the stochastic
/// learners (DT, RF, ANN); LR, SVM and ADA are deterministic and ignore it.
inline std::unique_ptr<Classifier> train_model(ModelKind kind, const Matrix& x,
                                               std::span<const int> y, int class_count,
                                               const Hyperparams& hp, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::LR: return std::make_unique<LogisticRegression>(train_logistic(x, y, class_count, hp.lr));
    case ModelKind::SVM: return std::make_unique<SupportVectorMachine>(train_svm(x, y, class_count, hp.svm));
    case ModelKind::DT: return std::make_unique<DecisionTree>(train_tree(x, y, class_count, hp.dt, seed));
    case ModelKind::RF: return std::make_unique<RandomForest>(train_forest(x, y, class_count, hp.rf, seed));
    case ModelKind::ANN: return std::make_unique<MultilayerPerceptron>(train_mlp(x, y, class_count, hp.ann, seed));
    case ModelKind::ADA: return std::make_unique<AdaBoost>(train_adaboost(x, y, class_count, hp.ada));
  }
  throw ConfigError("unknown model kind");
}

// ---------------------------------------------------------------------------
// Model documents

inline nlohmann::json model_document(const Classifier& m) {
  return {{"format", "scorefuse-model"},
          {"version", kModelFormatVersion},
          {"kind", std::string(to_string(m.kind()))},
          {"class_count", m.class_count()},
          {"feature_count", m.feature_count()},
          {"hyperparams", m.hyperparams_json()},
          {"params", m.params_json()},
          {"warnings", m.warnings()}};
}

namespace detail {

inline Matrix matrix_from_flat(const nlohmann::json& j, std::size_t cols) {
  const auto flat = j.get<std::vector<double>>();
  if (cols == 0 || flat.size() % cols != 0) throw IoError("model document: bad matrix size");
  Matrix m(flat.size() / cols, cols);
  std::copy(flat.begin(), flat.end(), m.data().begin());
  return m;
}

}  // namespace detail

inline std::unique_ptr<Classifier> model_from_document(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "scorefuse-model") throw IoError("not a model document");
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw IoError("unsupported model document version " + doc.at("version").dump());
    }
    const ModelKind kind = parse_model_kind(doc.at("kind").get<std::string>());
    const int k = doc.at("class_count").get<int>();
    const auto d = doc.at("feature_count").get<std::size_t>();
    const auto& hj = doc.at("hyperparams");
    const auto& pj = doc.at("params");
    switch (kind) {
      case ModelKind::LR: {
        LogisticParams hp;
        apply_json(hp, hj);
        return std::make_unique<LogisticRegression>(
            k, detail::matrix_from_flat(pj.at("weights"), d), pj.at("bias").get<std::vector<double>>(),
            hp, pj.at("iterations").get<int>());
      }
      case ModelKind::SVM: {
        SvmParams hp;
        apply_json(hp, hj);
        std::vector<BinaryMachine> ms;
        for (const auto& mj : pj.at("machines")) {
          BinaryMachine m;
          m.coef = mj.at("coef").get<std::vector<double>>();
          if (!m.coef.empty()) m.support_vectors = detail::matrix_from_flat(mj.at("support_vectors"), d);
          m.rho = mj.at("rho").get<double>();
          m.platt_a = mj.at("platt_a").get<double>();
          m.platt_b = mj.at("platt_b").get<double>();
          if (!mj.at("constant_probability").is_null()) {
            m.constant_probability = mj.at("constant_probability").get<double>();
          }
          ms.push_back(std::move(m));
        }
        return std::make_unique<SupportVectorMachine>(k, d, std::move(ms), hp,
                                                      doc.value("warnings", std::vector<std::string>{}));
      }
      case ModelKind::DT: {
        TreeParams hp;
        apply_json(hp, hj);
        return std::make_unique<DecisionTree>(k, d, detail::nodes_from_json(pj.at("nodes")), hp);
      }
      case ModelKind::RF: {
        ForestParams hp;
        apply_json(hp, hj);
        std::vector<std::vector<TreeNode>> trees;
        for (const auto& t : pj.at("trees")) trees.push_back(detail::nodes_from_json(t));
        return std::make_unique<RandomForest>(k, d, std::move(trees), hp);
      }
      case ModelKind::ANN: {
        MlpParams hp;
        apply_json(hp, hj);
        MlpWeights w{detail::matrix_from_flat(pj.at("w1"), d), pj.at("b1").get<std::vector<double>>(),
                     {}, pj.at("b2").get<std::vector<double>>()};
        w.w2 = detail::matrix_from_flat(pj.at("w2"), w.b1.size());
        return std::make_unique<MultilayerPerceptron>(k, std::move(w), hp,
                                                      pj.at("loss_history").get<std::vector<double>>());
      }
      case ModelKind::ADA: {
        AdaBoostParams hp;
        apply_json(hp, hj);
        std::vector<Stump> stumps;
        for (const auto& s : pj.at("stumps")) {
          stumps.push_back({s.at("feature").get<int>(), s.at("threshold").get<double>(),
                            s.at("left_class").get<int>(), s.at("alpha").get<double>()});
        }
        return std::make_unique<AdaBoost>(d, std::move(stumps), hp,
                                          pj.at("round_errors").get<std::vector<double>>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model document: ") + e.what());
  }
  throw IoError("model document: unknown kind");
}

inline void save_model(const Classifier& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << model_document(m).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline std::unique_ptr<Classifier> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return model_from_document(doc);
}

}  // namespace scorefuse
