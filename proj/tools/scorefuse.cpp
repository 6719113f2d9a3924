// scorefuse: run, validate and summarize weighted score-fusion experiments.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scorefuse/dataset.hpp"
#include "scorefuse/pipeline.hpp"
#include "scorefuse/report.hpp"

namespace sf = scorefuse;

namespace {

struct RunArgs {
  std::string config_path;
  std::string data;
  std::string task;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  std::string pairs;
  std::string report_dir;
  std::string weight_eval;
  bool unstratified = false;
  bool has_header = false;
  std::string schema;
  int repeat = 1;
};

int do_run(const RunArgs& a, const CLI::App& cmd) {
  sf::RunConfig cfg;
  if (!a.config_path.empty()) cfg = sf::load_config(a.config_path);
  if (cmd.count("--data")) cfg.data_path = a.data;
  if (cmd.count("--task")) cfg.task = sf::parse_task(a.task);
  if (cmd.count("--test-fraction")) cfg.test_fraction = a.test_fraction;
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--pairs")) cfg.pairs = sf::parse_pairs(a.pairs);
  if (cmd.count("--report-dir")) cfg.report_dir = a.report_dir;
  if (cmd.count("--weight-eval")) cfg.weight_eval = sf::parse_weight_eval(a.weight_eval);
  if (a.unstratified) cfg.stratified = false;
  if (a.has_header) cfg.has_header = true;
  if (cmd.count("--schema")) cfg.schema_path = a.schema;
  if (cfg.report_dir.empty()) throw sf::ConfigError("no report directory given (--report-dir)");
  if (a.repeat < 1) throw sf::ConfigError("--repeat must be >= 1");

  if (a.repeat == 1) {
    const auto report = sf::run_experiment(cfg);
    sf::emit_report(report, cfg.report_dir);
    std::cout << sf::summary_markdown(report);
    return 0;
  }
  std::vector<sf::RunReport> runs;
  for (int i = 0; i < a.repeat; ++i) {
    sf::RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    runs.push_back(sf::run_experiment(c));
  }
  const std::filesystem::path root(cfg.report_dir);
  for (const auto& r : runs) sf::emit_report(r, root / ("seed-" + std::to_string(r.config.seed)));
  const auto summary = sf::repeat_summary(runs);
  sf::detail::write_text(root / "repeat_summary.json", summary.dump(2) + "\n");
  const auto md = sf::repeat_markdown(summary);
  sf::detail::write_text(root / "repeat_summary.md", md);
  std::cout << md;
  return 0;
}

int do_validate(const std::string& dir, bool strict) {
  const auto result = sf::validate_report(sf::read_report(dir));
  std::cout << sf::format_validation(result);
  const bool ok = result.all_passed();
  std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
  return strict && !ok ? 1 : 0;
}

int do_summarize(const std::string& data, bool has_header, const std::string& schema_path) {
  const auto schema = schema_path.empty() ? sf::cleveland_schema() : sf::load_schema(schema_path);
  sf::LoadOptions opts;
  opts.has_header = has_header;
  const auto table = sf::load_csv(data, schema, opts);
  std::cout << "rows: " << table.rows() << ", missing cells: " << table.missing_count() << "\n\n";
  std::cout << "| Attribute | Kind | Observed | Mean | Std | Distribution (%) |\n|---|---|---|---|---|---|\n";
  for (const auto& c : sf::summarize(table)) {
    std::cout << "| " << c.name << " | " << sf::to_string(c.kind) << " | " << c.observed << " | ";
    if (c.kind == sf::AttributeKind::continuous) {
      std::cout << sf::fixed2(c.mean) << " | " << sf::fixed2(c.std) << " | |\n";
    } else {
      std::cout << " | | ";
      bool first = true;
      for (const auto& [code, pct] : c.frequencies) {
        std::cout << (first ? "" : ", ") << code << "=" << sf::fixed2(pct);
        first = false;
      }
      std::cout << " |\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted score-level fusion of heart-disease classifiers"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Train members, fuse pairs and write a report");
  run->add_option("--config", ra.config_path, "JSON config; flags override its values");
  run->add_option("--data", ra.data, "Comma-separated data file");
  run->add_option("--task", ra.task, "binary or multiclass");
  run->add_option("--test-fraction", ra.test_fraction, "Test share, e.g. 0.2 or 0.3");
  run->add_option("--seed", ra.seed, "Master seed");
  run->add_option("--pairs", ra.pairs, "Fusion pairs, e.g. ann+rf,svm+lr,ada+dt");
  run->add_option("--report-dir", ra.report_dir, "Output directory");
  run->add_option("--weight-eval", ra.weight_eval, "test (default) or validation");
  run->add_flag("--unstratified", ra.unstratified, "Plain random split");
  run->add_flag("--has-header", ra.has_header, "Skip the first line of the data file");
  run->add_option("--schema", ra.schema, "JSON schema file for non-Cleveland data");
  run->add_option("--repeat", ra.repeat, "Run N consecutive seeds and report mean and std");

  std::string report_dir;
  bool strict = false;
  auto* validate = app.add_subcommand("validate", "Check a report against reference fusion accuracies");
  validate->add_option("--report", report_dir, "Report directory or report.json")->required();
  validate->add_flag("--strict", strict, "Exit with status 1 when any check fails");

  std::string data, schema;
  bool has_header = false;
  auto* summarize = app.add_subcommand("summarize", "Per-attribute statistics of a data file");
  summarize->add_option("--data", data, "Comma-separated data file")->required();
  summarize->add_flag("--has-header", has_header, "Skip the first line of the data file");
  summarize->add_option("--schema", schema, "JSON schema file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : sf::exit_code(sf::ErrorCategory::usage);
  }

  try {
    if (*run) return do_run(ra, *run);
    if (*validate) return do_validate(report_dir, strict);
    if (*summarize) return do_summarize(data, has_header, schema);
  } catch (const sf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sf::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sf::exit_code(sf::ErrorCategory::usage);
  }
  return 0;
}
