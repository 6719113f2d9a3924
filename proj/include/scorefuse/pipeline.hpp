#pragma once

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/dataset.hpp"
#include "scorefuse/error.hpp"
#include "scorefuse/fusion.hpp"
#include "scorefuse/metrics.hpp"
#include "scorefuse/models.hpp"
#include "scorefuse/preprocess.hpp"
#include "scorefuse/random.hpp"

namespace scorefuse {

// ---------------------------------------------------------------------------
// Configuration

struct FusionPair {
  ModelKind first;
  ModelKind second;

  std::string name() const { return std::string(to_string(first)) + "+" + std::string(to_string(second)); }
  bool operator==(const FusionPair&) const = default;
};

/// "ann+rf" -> {ANN, RF}.
inline FusionPair parse_pair(std::string_view s) {
  const auto plus = s.find('+');
  if (plus == std::string_view::npos || s.find('+', plus + 1) != std::string_view::npos) {
    throw ConfigError("fusion pair '" + std::string(s) + "' must look like a+b");
  }
  return {parse_model_kind(detail::trim(s.substr(0, plus))), parse_model_kind(detail::trim(s.substr(plus + 1)))};
}

/// Comma-separated list; an empty string gives an empty list.
inline std::vector<FusionPair> parse_pairs(std::string_view s) {
  std::vector<FusionPair> out;
  while (!detail::trim(s).empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_pair(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline std::vector<FusionPair> default_pairs(TaskKind task) {
  using K = ModelKind;
  if (task == TaskKind::binary) return {{K::ANN, K::RF}, {K::SVM, K::LR}, {K::ADA, K::DT}};
  return {{K::LR, K::RF}, {K::SVM, K::ANN}, {K::ANN, K::LR}};
}

/// Models offered for each task; DT and ADA have no multiclass settings.
inline bool allowed_in(TaskKind task, ModelKind k) {
  return task == TaskKind::binary || (k != ModelKind::DT && k != ModelKind::ADA);
}

enum class WeightEval { test, validation };

inline std::string_view to_string(WeightEval w) { return w == WeightEval::test ? "test" : "validation"; }

inline WeightEval parse_weight_eval(std::string_view s) {
  if (s == "test") return WeightEval::test;
  if (s == "validation") return WeightEval::validation;
  throw ConfigError("unknown weight-eval mode '" + std::string(s) + "' (expected test|validation)");
}

/// Scaling applied to each learner's inputs.
inline ScalerKind scaler_for(ModelKind k) {
  switch (k) {
    case ModelKind::LR:
    case ModelKind::SVM:
    case ModelKind::ADA: return ScalerKind::zscore;
    case ModelKind::ANN: return ScalerKind::minmax;
    case ModelKind::DT:
    case ModelKind::RF: return ScalerKind::none;
  }
  return ScalerKind::none;
}

struct RunConfig {
  std::string data_path;
  TaskKind task = TaskKind::binary;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::optional<std::vector<FusionPair>> pairs;  // unset: the task's default menu
  std::vector<ModelKind> extra_models;           // trained and reported even if unpaired
  nlohmann::json hyperparams = nlohmann::json::object();  // overrides on the defaults
  std::string report_dir;
  WeightEval weight_eval = WeightEval::test;
  double validation_fraction = 0.2;
  bool stratified = true;
  bool has_header = false;
  std::string schema_path;  // empty: built-in Cleveland schema

  std::vector<FusionPair> fusion_pairs() const { return pairs ? *pairs : default_pairs(task); }

  /// Members of every pair in first-seen order, then the extra models; with no
  /// pairs and no extras, every model allowed for the task.
  std::vector<ModelKind> member_kinds() const {
    std::vector<ModelKind> out;
    auto add = [&](ModelKind k) {
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    };
    for (const auto& p : fusion_pairs()) {
      add(p.first);
      add(p.second);
    }
    for (ModelKind k : extra_models) add(k);
    if (out.empty()) {
      for (ModelKind k : kAllModelKinds) {
        if (allowed_in(task, k)) add(k);
      }
    }
    return out;
  }

  Hyperparams resolved_hyperparams() const {
    Hyperparams hp = default_hyperparams(task, test_fraction);
    apply_json(hp, hyperparams);
    return hp;
  }

  void validate() const {
    if (data_path.empty()) throw ConfigError("no data path given");
    if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("test fraction must lie in (0, 1)");
    if (!(validation_fraction > 0 && validation_fraction < 1)) {
      throw ConfigError("validation fraction must lie in (0, 1)");
    }
    for (const auto& p : fusion_pairs()) {
      if (p.first == p.second) throw ConfigError("fusion pair " + p.name() + " repeats a model");
      for (ModelKind k : {p.first, p.second}) {
        if (!allowed_in(task, k)) {
          throw ConfigError(std::string(to_string(k)) + " is not available for the multiclass task");
        }
      }
    }
    for (ModelKind k : extra_models) {
      if (!allowed_in(task, k)) {
        throw ConfigError(std::string(to_string(k)) + " is not available for the multiclass task");
      }
    }
    resolved_hyperparams().validate();
  }
};

/// Everything that determines a run's results. The report directory is left
/// out so the same run written to two places hashes the same.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : c.fusion_pairs()) pairs.push_back(p.name());
  nlohmann::json extra = nlohmann::json::array();
  for (ModelKind k : c.extra_models) extra.push_back(std::string(to_string(k)));
  return {{"data", c.data_path},
          {"task", std::string(to_string(c.task))},
          {"test_fraction", c.test_fraction},
          {"seed", c.seed},
          {"pairs", pairs},
          {"models", extra},
          {"hyperparams", c.hyperparams},
          {"weight_eval", std::string(to_string(c.weight_eval))},
          {"validation_fraction", c.validation_fraction},
          {"stratified", c.stratified},
          {"has_header", c.has_header},
          {"schema", c.schema_path}};
}

/// Reads a JSON config; keys mirror to_json(RunConfig) plus "report_dir".
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::vector<std::string> known = {
      "data",   "task",        "test_fraction",       "seed",       "pairs",      "models",
      "hyperparams", "report_dir", "weight_eval", "validation_fraction", "stratified", "has_header",
      "schema"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  try {
    if (j.contains("data")) base.data_path = j.at("data").get<std::string>();
    if (j.contains("task")) base.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("test_fraction")) base.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("pairs")) {
      std::vector<FusionPair> pairs;
      for (const auto& p : j.at("pairs")) pairs.push_back(parse_pair(p.get<std::string>()));
      base.pairs = pairs;
    }
    if (j.contains("models")) {
      base.extra_models.clear();
      for (const auto& m : j.at("models")) base.extra_models.push_back(parse_model_kind(m.get<std::string>()));
    }
    if (j.contains("hyperparams")) base.hyperparams = j.at("hyperparams");
    if (j.contains("report_dir")) base.report_dir = j.at("report_dir").get<std::string>();
    if (j.contains("weight_eval")) base.weight_eval = parse_weight_eval(j.at("weight_eval").get<std::string>());
    if (j.contains("validation_fraction")) base.validation_fraction = j.at("validation_fraction").get<double>();
    if (j.contains("stratified")) base.stratified = j.at("stratified").get<bool>();
    if (j.contains("has_header")) base.has_header = j.at("has_header").get<bool>();
    if (j.contains("schema")) base.schema_path = j.at("schema").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Results

struct ModelResult {
  ModelKind kind = ModelKind::LR;
  std::uint64_t seed = 0;
  ScalerParams scaler;
  std::shared_ptr<const Classifier> model;
  ScoreMatrix test_scores;
  Labels test_pred;
  EvaluationReport eval;
  ScoreMatrix validation_scores;  // validation weight-eval mode only
};

struct FusionResult {
  FusionPair pair;
  GridSearchResult search;  // the sweep is scored on the selection split
  std::string selected_on;  // "test" or "validation"
  ScoreMatrix test_scores;
  Labels test_pred;
  EvaluationReport eval;
  double best_member_accuracy = 0.0;  // percent, on test
};

struct PipelineAudit {
  std::size_t rows_loaded = 0;
  std::size_t cells_imputed = 0;
  std::uint64_t test_hash_before_resample = 0;
  std::uint64_t test_hash_after_resample = 0;
  bool oversampled = false;
  std::vector<std::size_t> train_counts_before;
  std::vector<std::size_t> train_counts_after;
  std::vector<std::size_t> test_counts;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
  std::vector<std::size_t> validation_index;  // into the training partition
  std::vector<std::string> stages;            // in execution order
};

struct RunReport {
  RunConfig config;
  Hyperparams hyperparams;
  std::vector<CodeMap> code_maps;
  std::vector<ModelResult> models;
  std::vector<FusionResult> fusions;
  Labels test_truth;
  Labels validation_truth;
  PipelineAudit audit;
  std::vector<std::string> warnings;
  std::string config_hash;
  std::string timestamp;

  const ModelResult& model(ModelKind k) const {
    for (const auto& m : models) {
      if (m.kind == k) return m;
    }
    throw UsageError("no model " + std::string(to_string(k)) + " in report");
  }
};

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

/// SOURCE_DATE_EPOCH when set, else "unrecorded": wall-clock time would make
/// two identical runs differ.
inline std::string run_timestamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch || !*epoch) return "unrecorded";
  char* end = nullptr;
  const long long secs = std::strtoll(epoch, &end, 10);
  if (end == epoch || *end != '\0') return "unrecorded";
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace detail {

template <typename F>
auto stage(PipelineAudit& audit, const std::string& name, F&& f) {
  audit.stages.push_back(name);
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

struct Partition {
  Matrix x;
  Labels y;
};

}  // namespace detail

/// load -> impute -> encode -> derive task -> split -> (multiclass) oversample
/// -> scale per model -> train -> score -> fuse with grid search -> evaluate.
inline RunReport run_experiment(const RunConfig& config) {
  RunReport rep;
  rep.config = config;
  auto& audit = rep.audit;
  detail::stage(audit, "config", [&] {
    config.validate();
    return 0;
  });
  rep.hyperparams = config.resolved_hyperparams();
  rep.config_hash = hex64(fnv1a(to_json(config).dump()));
  rep.timestamp = run_timestamp();
  const int k = class_count(config.task);

  DataTable table = detail::stage(audit, "load", [&] {
    const Schema schema = config.schema_path.empty() ? cleveland_schema() : load_schema(config.schema_path);
    LoadOptions opts;
    opts.has_header = config.has_header;
    return load_csv(config.data_path, schema, opts);
  });
  audit.rows_loaded = table.rows();
  audit.cells_imputed = table.missing_count();

  table = detail::stage(audit, "impute", [&] { return impute_most_frequent(table); });
  table = detail::stage(audit, "encode", [&] {
    auto enc = encode_labels(table);
    rep.code_maps = std::move(enc.code_maps);
    return std::move(enc.table);
  });
  table = detail::stage(audit, "derive-task", [&] {
    auto t = derive_task(table, config.task);
    class_counts(t.labels, k);  // range check
    return t;
  });

  SplitResult parts = detail::stage(audit, "split", [&] {
    return split(table, {config.test_fraction, derive_seed(config.seed, "split"), config.stratified});
  });
  for (auto& w : parts.warnings) rep.warnings.push_back("split: " + w);
  audit.train_index = parts.train_index;
  audit.test_index = parts.test_index;
  audit.test_counts = class_counts(parts.test.labels, k);

  DataTable fit_part = parts.train;
  std::optional<DataTable> validation_part;
  if (config.weight_eval == WeightEval::validation) {
    SplitResult inner = detail::stage(audit, "validation-split", [&] {
      return split(parts.train,
                   {config.validation_fraction, derive_seed(config.seed, "validation-split"), config.stratified});
    });
    for (auto& w : inner.warnings) rep.warnings.push_back("validation split: " + w);
    audit.validation_index = inner.test_index;
    fit_part = std::move(inner.train);
    validation_part = std::move(inner.test);
    rep.validation_truth = validation_part->labels;
  }

  audit.train_counts_before = class_counts(fit_part.labels, k);
  audit.test_hash_before_resample = content_hash(parts.test);
  if (config.task == TaskKind::multiclass) {
    fit_part = detail::stage(audit, "oversample", [&] {
      return random_oversample(fit_part, derive_seed(config.seed, "oversample"), k);
    });
    audit.oversampled = true;
  }
  audit.test_hash_after_resample = content_hash(parts.test);
  audit.train_counts_after = class_counts(fit_part.labels, k);
  rep.test_truth = parts.test.labels;

  for (ModelKind kind : config.member_kinds()) {
    const std::string name(to_string(kind));
    ModelResult m;
    m.kind = kind;
    m.seed = derive_seed(config.seed, "train", name);
    m.scaler = detail::stage(audit, "scale:" + name, [&] { return fit_scaler(fit_part.features, scaler_for(kind)); });
    const Matrix x_fit = apply_scaler(m.scaler, fit_part.features);
    m.model = detail::stage(audit, "train:" + name, [&] {
      return std::shared_ptr<const Classifier>(train_model(kind, x_fit, fit_part.labels, k, rep.hyperparams, m.seed));
    });
    detail::stage(audit, "score:" + name, [&] {
      m.test_scores = m.model->predict_proba(apply_scaler(m.scaler, parts.test.features));
      if (validation_part) m.validation_scores = m.model->predict_proba(apply_scaler(m.scaler, validation_part->features));
      m.test_pred = decide(m.test_scores);
      m.eval = evaluate(rep.test_truth, m.test_scores, m.test_pred);
      return 0;
    });
    for (const auto& w : m.model->warnings()) rep.warnings.push_back(name + ": " + w);
    rep.models.push_back(std::move(m));
  }

  for (const auto& pair : config.fusion_pairs()) {
    detail::stage(audit, "fuse:" + pair.name(), [&] {
      const auto& a = rep.model(pair.first);
      const auto& b = rep.model(pair.second);
      FusionResult f;
      f.pair = pair;
      if (validation_part) {
        f.search = grid_search(a.validation_scores, b.validation_scores, rep.validation_truth);
        f.selected_on = "validation";
        f.test_scores = fuse(a.test_scores, b.test_scores, f.search.best);
      } else {
        f.search = grid_search(a.test_scores, b.test_scores, rep.test_truth);
        f.selected_on = "test";
        f.test_scores = f.search.fused;
      }
      f.test_pred = decide(f.test_scores);
      f.eval = evaluate(rep.test_truth, f.test_scores, f.test_pred);
      f.best_member_accuracy = std::max(a.eval.metrics.accuracy, b.eval.metrics.accuracy);
      rep.fusions.push_back(std::move(f));
      return 0;
    });
  }
  return rep;
}

}  // namespace scorefuse
