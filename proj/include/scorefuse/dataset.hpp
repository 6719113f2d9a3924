#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/error.hpp"
#include "scorefuse/matrix.hpp"

namespace scorefuse {

enum class AttributeKind { continuous, categorical };

inline std::string_view to_string(AttributeKind k) {
  return k == AttributeKind::continuous ? "continuous" : "categorical";
}

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::continuous;
  std::vector<double> allowed_values;  // category codes; empty for continuous columns
  std::string description;

  bool allows(double v) const {
    return std::find(allowed_values.begin(), allowed_values.end(), v) != allowed_values.end();
  }
};

using Schema = std::vector<AttributeSpec>;

inline void validate_schema(const Schema& schema) {
  if (schema.empty()) throw SchemaError("schema has no attributes");
  std::set<std::string> names;
  for (const auto& a : schema) {
    if (a.name.empty()) throw SchemaError("schema attribute with empty name");
    if (!names.insert(a.name).second) throw SchemaError("duplicate attribute name '" + a.name + "'");
    if (a.kind == AttributeKind::categorical && a.allowed_values.empty()) {
      throw SchemaError("categorical attribute '" + a.name + "' lists no allowed codes");
    }
  }
}

/// The 13 processed Cleveland attributes, in file order.
inline Schema cleveland_schema() {
  using K = AttributeKind;
  return {
      {"Age", K::continuous, {}, "age in years"},
      {"Sex", K::categorical, {0, 1}, "1 = male, 0 = female"},
      {"Cpt", K::categorical, {1, 2, 3, 4},
       "chest pain type: 1 typical angina, 2 atypical angina, 3 non-anginal, 4 asymptomatic"},
      {"Thstbps", K::continuous, {}, "resting blood pressure (mm Hg)"},
      {"S_chol", K::continuous, {}, "serum cholesterol (mg/dl)"},
      {"FBS", K::categorical, {0, 1}, "fasting blood sugar >= 120 mg/dl"},
      {"Restelect", K::categorical, {0, 1, 2},
       "resting ECG: 0 normal, 1 ST-T abnormality, 2 left ventricular hypertrophy"},
      {"thlach", K::continuous, {}, "maximum heart rate achieved"},
      {"Exng", K::categorical, {0, 1}, "exercise induced angina"},
      {"Oldpeak", K::continuous, {}, "ST depression induced by exercise relative to rest"},
      {"Slp", K::categorical, {1, 2, 3}, "slope of the peak exercise ST segment"},
      {"Ca", K::categorical, {0, 1, 2, 3}, "number of major vessels colored by fluoroscopy"},
      {"Thal", K::categorical, {3, 6, 7}, "3 normal, 6 fixed defect, 7 reversible defect"},
  };
}

inline nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : schema) {
    nlohmann::json j = {{"name", a.name}, {"kind", to_string(a.kind)}};
    if (a.kind == AttributeKind::categorical) j["allowed"] = a.allowed_values;
    if (!a.description.empty()) j["description"] = a.description;
    attrs.push_back(std::move(j));
  }
  return {{"attributes", attrs}};
}

inline Schema schema_from_json(const nlohmann::json& doc) {
  Schema schema;
  try {
    for (const auto& j : doc.at("attributes")) {
      AttributeSpec a;
      a.name = j.at("name").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "continuous") {
        a.kind = AttributeKind::continuous;
      } else if (kind == "categorical") {
        a.kind = AttributeKind::categorical;
      } else {
        throw SchemaError("attribute '" + a.name + "': unknown kind '" + kind + "'");
      }
      if (j.contains("allowed")) a.allowed_values = j.at("allowed").get<std::vector<double>>();
      if (j.contains("description")) a.description = j.at("description").get<std::string>();
      schema.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
  validate_schema(schema);
  return schema;
}

inline Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return schema_from_json(doc);
}

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Feature matrix + integer labels + schema. Missing cells hold NaN in `features`
/// but `missing` is the authoritative mask (row-major, one byte per cell).
struct DataTable {
  Matrix features;
  Labels labels;
  Schema schema;
  std::vector<std::uint8_t> missing;

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t cols() const noexcept { return schema.size(); }
  bool empty() const noexcept { return rows() == 0; }

  bool is_missing(std::size_t r, std::size_t c) const noexcept {
    return missing[r * cols() + c] != 0;
  }

  std::size_t missing_count() const noexcept {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
  }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (schema[c].name == name) return c;
    }
    throw SchemaError("no column named '" + std::string(name) + "'");
  }

  DataTable subset(std::span<const std::size_t> index) const {
    DataTable out;
    out.schema = schema;
    out.features = features.select_rows(index);
    if (out.features.cols() == 0) out.features = Matrix(0, cols());
    out.labels.reserve(index.size());
    out.missing.reserve(index.size() * cols());
    for (std::size_t i : index) {
      out.labels.push_back(labels[i]);
      auto first = missing.begin() + static_cast<std::ptrdiff_t>(i * cols());
      out.missing.insert(out.missing.end(), first, first + static_cast<std::ptrdiff_t>(cols()));
    }
    return out;
  }

  void check_invariants() const {
    if (features.rows() != labels.size()) throw ShapeError("labels length differs from row count");
    if (!features.empty() && features.cols() != schema.size()) {
      throw ShapeError("row width differs from schema length");
    }
    if (missing.size() != rows() * cols()) throw ShapeError("missing mask has wrong size");
  }

  bool operator==(const DataTable& o) const {
    // NaN != NaN, so compare features through the mask.
    if (labels != o.labels || missing != o.missing || rows() != o.rows() || cols() != o.cols()) {
      return false;
    }
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t c = 0; c < cols(); ++c) {
        if (!is_missing(r, c) && features(r, c) != o.features(r, c)) return false;
      }
    }
    return true;
  }
};

/// FNV-1a over the table's observable content; used to prove a stage left a
/// partition untouched.
inline std::uint64_t content_hash(const DataTable& t) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (t.is_missing(r, c)) {
        os << "?,";
      } else {
        os << t.features(r, c) << ',';
      }
    }
    os << t.labels[r] << '\n';
  }
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

struct LoadOptions {
  std::string missing_token = "?";
  bool has_header = false;
  int max_label = 4;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view text, double& out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses comma-separated records: one per line, schema-length features
/// followed by the label. Blank lines are skipped. Row indices in error
/// messages are 0-based record numbers.
inline DataTable parse_csv(std::istream& in, const Schema& schema, const LoadOptions& opts = {}) {
  validate_schema(schema);
  DataTable t;
  t.schema = schema;
  t.features = Matrix(0, schema.size());
  const std::size_t expected = schema.size() + 1;

  std::string line;
  std::size_t record = 0;
  bool header_pending = opts.has_header;
  std::vector<double> values(schema.size());
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != expected) {
      throw ParseError("row " + std::to_string(record) + ": expected " + std::to_string(expected) +
                       " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto f = fields[c];
      if (f == opts.missing_token) {
        values[c] = kMissing;
        t.missing.push_back(1);
        continue;
      }
      double v;
      if (!detail::parse_number(f, v)) {
        throw ParseError("row " + std::to_string(record) + ", column " + std::to_string(c) + " (" +
                         schema[c].name + "): non-numeric value '" + std::string(f) + "'");
      }
      if (schema[c].kind == AttributeKind::categorical && !schema[c].allows(v)) {
        throw SchemaError("row " + std::to_string(record) + ", column " + schema[c].name +
                          ": unknown category code '" + std::string(f) + "'");
      }
      values[c] = v;
      t.missing.push_back(0);
    }
    double label;
    if (!detail::parse_number(fields.back(), label)) {
      throw ParseError("row " + std::to_string(record) + ", label column: non-numeric value '" +
                       std::string(fields.back()) + "'");
    }
    const auto code = static_cast<int>(std::trunc(label));
    if (code < 0 || code > opts.max_label) {
      throw ParseError("row " + std::to_string(record) + ": label " + std::to_string(code) +
                       " outside 0.." + std::to_string(opts.max_label));
    }
    t.features.append_row(values);
    t.labels.push_back(code);
    ++record;
  }
  return t;
}

inline DataTable load_csv(const std::filesystem::path& path, const Schema& schema,
                          const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open data file " + path.string());
  return parse_csv(in, schema, opts);
}

struct ColumnSummary {
  std::string name;
  AttributeKind kind = AttributeKind::continuous;
  std::size_t observed = 0;  // non-missing cells
  double mean = 0.0;
  double std = 0.0;  // population convention (divide by n)
  std::vector<std::pair<double, double>> frequencies;  // (code, percent), categorical only
};

/// Column statistics over non-missing cells.
inline std::vector<ColumnSummary> summarize(const DataTable& table) {
  if (table.empty()) throw SummaryError("cannot summarize an empty table");
  std::vector<ColumnSummary> out;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    ColumnSummary s;
    s.name = table.schema[c].name;
    s.kind = table.schema[c].kind;
    std::map<double, std::size_t> counts;
    double sum = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) continue;
      const double v = table.features(r, c);
      sum += v;
      ++s.observed;
      if (s.kind == AttributeKind::categorical) ++counts[v];
    }
    if (s.observed == 0) throw SummaryError("column '" + s.name + "' is entirely missing");
    s.mean = sum / static_cast<double>(s.observed);
    double ss = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) continue;
      const double d = table.features(r, c) - s.mean;
      ss += d * d;
    }
    s.std = std::sqrt(ss / static_cast<double>(s.observed));
    for (const auto& [code, n] : counts) {
      s.frequencies.emplace_back(code, 100.0 * static_cast<double>(n) / static_cast<double>(s.observed));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace scorefuse
