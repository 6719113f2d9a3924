#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/pipeline.hpp"

namespace scorefuse {

inline constexpr int kReportFormatVersion = 1;

inline const char* kLeakageNote =
    "Missing cells are imputed on the full table before the split, so test rows influence the "
    "imputed values. In test weight-eval mode the fusion weights are chosen on the test split.";

/// "80:20" for a test fraction of 0.2.
inline std::string split_label(double test_fraction) {
  const long test = std::lround(test_fraction * 100.0);
  return std::to_string(100 - test) + ":" + std::to_string(test);
}

inline std::string fixed2(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

namespace detail {

inline nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

inline Matrix matrix_from_rows(const nlohmann::json& j) {
  Matrix m;
  for (const auto& row : j) m.append_row(row.get<std::vector<double>>());
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string roc_csv(const RocCurve& c) {
  std::ostringstream s;
  s.precision(17);
  s << "fpr,tpr,threshold\n";
  for (const auto& p : c.points) {
    s << p.fpr << ',' << p.tpr << ',';
    if (std::isinf(p.threshold)) s << "inf"; else s << p.threshold;
    s << '\n';
  }
  return s.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON form of a run

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : r.models) {
    models.push_back({{"kind", std::string(to_string(m.kind))},
                      {"seed", m.seed},
                      {"scaler", std::string(to_string(m.scaler.kind))},
                      {"evaluation", to_json(m.eval)},
                      {"warnings", m.model->warnings()},
                      {"test_scores", detail::matrix_rows(m.test_scores)}});
  }
  nlohmann::json fusions = nlohmann::json::array();
  for (const auto& f : r.fusions) {
    nlohmann::json s = to_json(f.search);
    fusions.push_back({{"pair", f.pair.name()},
                       {"members", {std::string(to_string(f.pair.first)), std::string(to_string(f.pair.second))}},
                       {"selected_on", f.selected_on},
                       {"w1", f.search.best.w1},
                       {"w2", f.search.best.w2},
                       {"selection_accuracy", f.search.best_accuracy},
                       {"sweep", s["sweep"]},
                       {"evaluation", to_json(f.eval)},
                       {"best_member_accuracy", round2(f.best_member_accuracy)},
                       {"improved", f.eval.metrics.accuracy > f.best_member_accuracy}});
  }
  const auto& a = r.audit;
  nlohmann::json audit = {{"rows_loaded", a.rows_loaded},
                          {"cells_imputed", a.cells_imputed},
                          {"stages", a.stages},
                          {"oversampled", a.oversampled},
                          {"test_hash_before_resample", hex64(a.test_hash_before_resample)},
                          {"test_hash_after_resample", hex64(a.test_hash_after_resample)},
                          {"train_class_counts_before", a.train_counts_before},
                          {"train_class_counts_after", a.train_counts_after},
                          {"test_class_counts", a.test_counts},
                          {"leakage_note", kLeakageNote}};
  return {{"format", "scorefuse-report"},
          {"version", kReportFormatVersion},
          {"config", to_json(r.config)},
          {"config_hash", r.config_hash},
          {"timestamp", r.timestamp},
          {"task", std::string(to_string(r.config.task))},
          {"class_count", class_count(r.config.task)},
          {"test_fraction", r.config.test_fraction},
          {"split", split_label(r.config.test_fraction)},
          {"seed", r.config.seed},
          {"hyperparams", hyperparams_to_json(r.hyperparams)},
          {"audit", audit},
          {"warnings", r.warnings},
          {"test_truth", r.test_truth},
          {"models", models},
          {"fusions", fusions}};
}

inline nlohmann::json preprocess_to_json(const RunReport& r) {
  nlohmann::json maps = nlohmann::json::array();
  for (const auto& m : r.code_maps) maps.push_back(to_json(m));
  nlohmann::json scalers = nlohmann::json::object();
  for (const auto& m : r.models) scalers[std::string(to_string(m.kind))] = to_json(m.scaler);
  return {{"code_maps", maps},
          {"scalers", scalers},
          {"split_seed", derive_seed(r.config.seed, "split")},
          {"train_index", r.audit.train_index},
          {"test_index", r.audit.test_index},
          {"validation_index", r.audit.validation_index}};
}

// ---------------------------------------------------------------------------
// Tables

namespace detail {

inline std::string table_header(bool binary) {
  if (binary) {
    return "| Model | Tp | Fp | Fn | Tn | Acc | Prc | Recall | F1-score | Roc-Auc score | Weights |\n"
           "|---|---|---|---|---|---|---|---|---|---|---|\n";
  }
  return "| Model | Acc | Prc | Recall | F1-score | Roc-Auc score | Weights |\n"
         "|---|---|---|---|---|---|---|\n";
}

inline std::string table_row(const std::string& name, const EvaluationReport& e, const std::string& weights) {
  std::ostringstream s;
  s << "| " << name << " | ";
  if (e.confusion.classes() == 2) {
    s << e.confusion.tp() << " | " << e.confusion.fp() << " | " << e.confusion.fn() << " | "
      << e.confusion.tn() << " | ";
  }
  s << fixed2(e.metrics.accuracy) << " | " << fixed2(e.metrics.precision) << " | "
    << fixed2(e.metrics.recall) << " | " << fixed2(e.metrics.f1) << " | "
    << fixed2(e.roc.auc * 100.0) << " | " << weights << " |\n";
  return s.str();
}

}  // namespace detail

inline std::string summary_markdown(const RunReport& r) {
  const bool binary = r.config.task == TaskKind::binary;
  std::ostringstream s;
  s << "# " << (binary ? "Binary" : "Multiclass") << " classification, split "
    << split_label(r.config.test_fraction) << "\n\n";
  s << "- seed: " << r.config.seed << "\n- config hash: " << r.config_hash
    << "\n- timestamp: " << r.timestamp << "\n- averaging: "
    << to_string(default_averaging(static_cast<std::size_t>(class_count(r.config.task))))
    << "\n- fusion weights chosen on: " << to_string(r.config.weight_eval) << " split\n\n";
  s << "## Members\n\n" << detail::table_header(binary);
  for (const auto& m : r.models) s << detail::table_row(std::string(to_string(m.kind)), m.eval, "");
  if (!r.fusions.empty()) {
    s << "\n## Fusions\n\n" << detail::table_header(binary);
    for (const auto& f : r.fusions) {
      s << detail::table_row(f.pair.name(), f.eval,
                             fixed2(f.search.best.w1) + "/" + fixed2(f.search.best.w2));
    }
  }
  s << "\nAccuracy, precision, recall and F1 are percentages; ROC-AUC is scaled by 100.\n";
  if (!r.warnings.empty()) {
    s << "\n## Warnings\n\n";
    for (const auto& w : r.warnings) s << "- " << w << "\n";
  }
  s << "\n## Audit\n\n- " << kLeakageNote << "\n";
  return s.str();
}

/// One row per model or fusion.
inline std::string summary_csv(const RunReport& r) {
  std::ostringstream s;
  s << "name,type,task,split,tp,fp,fn,tn,accuracy,precision,recall,f1,roc_auc,w1,w2\n";
  const std::string task(to_string(r.config.task));
  const std::string sp = split_label(r.config.test_fraction);
  auto row = [&](const std::string& name, const char* type, const EvaluationReport& e,
                 const std::string& w1, const std::string& w2) {
    s << name << ',' << type << ',' << task << ',' << sp << ',';
    if (e.confusion.classes() == 2) {
      s << e.confusion.tp() << ',' << e.confusion.fp() << ',' << e.confusion.fn() << ',' << e.confusion.tn();
    } else {
      s << ",,,";
    }
    s << ',' << fixed2(e.metrics.accuracy) << ',' << fixed2(e.metrics.precision) << ','
      << fixed2(e.metrics.recall) << ',' << fixed2(e.metrics.f1) << ','
      << (std::isfinite(e.roc.auc) ? fixed2(e.roc.auc * 100.0) : std::string()) << ',' << w1 << ','
      << w2 << '\n';
  };
  for (const auto& m : r.models) row(std::string(to_string(m.kind)), "model", m.eval, "", "");
  for (const auto& f : r.fusions) {
    row(f.pair.name(), "fusion", f.eval, fixed2(f.search.best.w1), fixed2(f.search.best.w2));
  }
  return s.str();
}

/// Writes report.json, summary.md, summary.csv, preprocess.json, models/*.json
/// and roc/*.csv into `dir`, creating it if needed.
inline void emit_report(const RunReport& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "models", ec);
  if (!ec) fs::create_directories(dir / "roc", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  detail::write_text(dir / "report.json", report_to_json(r).dump(2) + "\n");
  detail::write_text(dir / "preprocess.json", preprocess_to_json(r).dump(2) + "\n");
  detail::write_text(dir / "summary.md", summary_markdown(r));
  detail::write_text(dir / "summary.csv", summary_csv(r));
  for (const auto& m : r.models) {
    const std::string name(to_string(m.kind));
    detail::write_text(dir / "models" / (name + ".json"), model_document(*m.model).dump(2) + "\n");
    for (const auto& c : m.eval.roc.curves) {
      detail::write_text(dir / "roc" / (name + "_class" + std::to_string(c.positive_class) + ".csv"),
                         detail::roc_csv(c));
    }
  }
  for (const auto& f : r.fusions) {
    for (const auto& c : f.eval.roc.curves) {
      detail::write_text(dir / "roc" / (f.pair.name() + "_class" + std::to_string(c.positive_class) + ".csv"),
                         detail::roc_csv(c));
    }
  }
}

inline nlohmann::json read_report(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "report.json" : dir;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "scorefuse-report") throw IoError(path.string() + ": not a run report");
  return j;
}

// ---------------------------------------------------------------------------
// Comparison against reference fusion results

struct ReferenceFusion {
  TaskKind task;
  double test_fraction;
  ModelKind a;
  ModelKind b;
  double accuracy;  // percent
  double floor;     // percent; a run passes at or above this
};

/// Fusion accuracies reported for the Cleveland data. The binary 70:30 SVM+LR
/// entry uses 89.01, the value its printed confusion matrix (50,4,6,31)
/// implies; the table prints 89.90.
inline const std::vector<ReferenceFusion>& reference_fusions() {
  using K = ModelKind;
  constexpr auto B = TaskKind::binary;
  constexpr auto M = TaskKind::multiclass;
  static const std::vector<ReferenceFusion> v = {
      {B, 0.2, K::ANN, K::RF, 95.08, 90.0},  {B, 0.2, K::SVM, K::LR, 93.44, 88.0},
      {B, 0.2, K::ADA, K::DT, 95.08, 88.0},  {B, 0.3, K::ANN, K::RF, 93.41, 88.41},
      {B, 0.3, K::SVM, K::LR, 89.01, 84.01}, {B, 0.3, K::ADA, K::DT, 92.31, 87.31},
      {M, 0.2, K::LR, K::RF, 75.41, 60.0},   {M, 0.2, K::SVM, K::ANN, 72.13, 57.0},
      {M, 0.2, K::ANN, K::LR, 75.41, 60.41}, {M, 0.3, K::LR, K::RF, 65.93, 50.93},
      {M, 0.3, K::SVM, K::ANN, 67.03, 52.03}, {M, 0.3, K::ANN, K::LR, 67.03, 52.03},
  };
  return v;
}

inline const ReferenceFusion* find_reference(TaskKind task, double test_fraction, ModelKind a,
                                                ModelKind b) {
  for (const auto& p : reference_fusions()) {
    if (p.task == task && std::abs(p.test_fraction - test_fraction) < 1e-9 &&
        ((p.a == a && p.b == b) || (p.a == b && p.b == a))) {
      return &p;
    }
  }
  return nullptr;
}

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationResult {
  std::vector<ValidationCheck> checks;
  std::vector<std::string> notes;  // informational, never failures

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

/// Compares each fusion against its reference accuracy and re-derives every
/// fusion accuracy from the recorded member scores and weights.
inline ValidationResult validate_report(const nlohmann::json& report) {
  ValidationResult out;
  try {
    const TaskKind task = parse_task(report.at("task").get<std::string>());
    const double frac = report.at("test_fraction").get<double>();
    const auto truth = report.at("test_truth").get<Labels>();
    std::map<std::string, ScoreMatrix> member_scores;
    for (const auto& m : report.at("models")) {
      member_scores[m.at("kind").get<std::string>()] = detail::matrix_from_rows(m.at("test_scores"));
    }
    for (const auto& f : report.at("fusions")) {
      const std::string name = f.at("pair").get<std::string>();
      const auto members = f.at("members").get<std::vector<std::string>>();
      const double acc = f.at("evaluation").at("accuracy").get<double>();

      const FusionWeights w{f.at("w1").get<double>(), f.at("w2").get<double>()};
      const auto fused = fuse(member_scores.at(members[0]), member_scores.at(members[1]), w);
      const double recomputed = round2(100.0 * accuracy_of(truth, decide(fused)));
      out.checks.push_back({name + " self-consistency", recomputed == acc,
                            "recorded " + fixed2(acc) + ", recomputed " + fixed2(recomputed)});

      const auto* p = find_reference(task, frac, parse_model_kind(members[0]), parse_model_kind(members[1]));
      if (!p) {
        out.notes.push_back(name + ": no reference value for " + std::string(to_string(task)) + " " +
                            split_label(frac));
      } else {
        std::ostringstream d;
        d << "accuracy " << fixed2(acc) << " vs floor " << fixed2(p->floor) << " (reference "
          << fixed2(p->accuracy) << ", margin " << (acc >= p->floor ? "+" : "") << fixed2(acc - p->floor)
          << ")";
        out.checks.push_back({name + " " + split_label(frac) + " vs reference", acc >= p->floor, d.str()});
      }
      if (!f.at("improved").get<bool>()) {
        out.notes.push_back(name + ": no-improvement (fused " + fixed2(acc) + " <= best member " +
                            fixed2(f.at("best_member_accuracy").get<double>()) + ")");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("report: ") + e.what());
  } catch (const std::out_of_range&) {
    throw IoError("report: fusion refers to a model without recorded scores");
  }
  return out;
}

inline ValidationResult validate_report(const RunReport& r) {
  return validate_report(report_to_json(r));
}

inline std::string format_validation(const ValidationResult& v) {
  std::ostringstream s;
  for (const auto& c : v.checks) s << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  for (const auto& n : v.notes) s << "NOTE " << n << "\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Repeated runs

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

/// Runs seeds seed, seed+1, ..., seed+n-1 and aggregates each model's and
/// fusion's test metrics.
inline nlohmann::json repeat_summary(const std::vector<RunReport>& runs) {
  std::map<std::string, std::map<std::string, std::vector<double>>> acc;
  std::vector<std::string> order;
  auto add = [&](const std::string& name, const EvaluationReport& e) {
    if (!acc.count(name)) order.push_back(name);
    auto& m = acc[name];
    m["accuracy"].push_back(e.metrics.accuracy);
    m["precision"].push_back(e.metrics.precision);
    m["recall"].push_back(e.metrics.recall);
    m["f1"].push_back(e.metrics.f1);
    m["roc_auc"].push_back(e.roc.auc * 100.0);
  };
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : runs) {
    seeds.push_back(r.config.seed);
    for (const auto& m : r.models) add(std::string(to_string(m.kind)), m.eval);
    for (const auto& f : r.fusions) add(f.pair.name(), f.eval);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& name : order) {
    nlohmann::json row = {{"name", name}};
    for (const auto& [metric, values] : acc[name]) {
      const auto ms = mean_std(values);
      row[metric] = {{"mean", round2(ms.mean)}, {"std", round2(ms.std)}};
    }
    rows.push_back(row);
  }
  return {{"seeds", seeds}, {"rows", rows}};
}

inline std::string repeat_markdown(const nlohmann::json& summary) {
  std::ostringstream s;
  s << "# Repeated runs\n\nseeds: " << summary.at("seeds").dump() << "\n\n"
    << "| Model | Acc | Prc | Recall | F1-score | Roc-Auc score |\n|---|---|---|---|---|---|\n";
  for (const auto& row : summary.at("rows")) {
    s << "| " << row.at("name").get<std::string>();
    for (const char* m : {"accuracy", "precision", "recall", "f1", "roc_auc"}) {
      s << " | " << fixed2(row.at(m).at("mean").get<double>()) << " ± " << fixed2(row.at(m).at("std").get<double>());
    }
    s << " |\n";
  }
  return s.str();
}

}  // namespace scorefuse
