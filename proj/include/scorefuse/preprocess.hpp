#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scorefuse/dataset.hpp"
#include "scorefuse/error.hpp"
#include "scorefuse/matrix.hpp"
#include "scorefuse/random.hpp"

namespace scorefuse {

// ---------------------------------------------------------------------------
// Imputation

/// Replaces each missing cell with its column's most frequent observed value.
/// Ties go to the smallest value.
inline DataTable impute_most_frequent(const DataTable& table) {
  DataTable out = table;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    std::map<double, std::size_t> counts;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (!table.is_missing(r, c)) ++counts[table.features(r, c)];
    }
    if (counts.empty()) {
      throw ImputationError("column '" + table.schema[c].name + "' has no observed values");
    }
    double mode = counts.begin()->first;
    std::size_t best = 0;
    for (const auto& [value, n] : counts) {  // ascending, so strict > keeps the smallest
      if (n > best) {
        best = n;
        mode = value;
      }
    }
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) {
        out.features(r, c) = mode;
        out.missing[r * table.cols() + c] = 0;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label encoding

/// Original category codes of one column; position = encoded value.
struct CodeMap {
  std::string column;
  std::vector<double> original;

  double encode(double v) const {
    const auto it = std::lower_bound(original.begin(), original.end(), v);
    if (it == original.end() || *it != v) {
      throw SchemaError("column '" + column + "': value outside the fitted code map");
    }
    return static_cast<double>(it - original.begin());
  }
  double decode(double code) const { return original.at(static_cast<std::size_t>(code)); }
};

struct EncodedTable {
  DataTable table;
  std::vector<CodeMap> code_maps;  // one per categorical column, in column order
};

/// Maps each categorical column's distinct values to 0..k-1 in ascending order.
inline EncodedTable encode_labels(const DataTable& table) {
  if (table.missing_count() != 0) {
    throw UsageError("encode_labels: impute missing cells first");
  }
  EncodedTable out{table, {}};
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.schema[c].kind != AttributeKind::categorical) continue;
    auto values = table.features.column(c);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    CodeMap map{table.schema[c].name, values};
    for (std::size_t r = 0; r < table.rows(); ++r) {
      out.table.features(r, c) = map.encode(table.features(r, c));
    }
    auto& spec = out.table.schema[c];
    spec.allowed_values.resize(values.size());
    std::iota(spec.allowed_values.begin(), spec.allowed_values.end(), 0.0);
    out.code_maps.push_back(std::move(map));
  }
  return out;
}

inline nlohmann::json to_json(const CodeMap& m) {
  return {{"column", m.column}, {"original", m.original}};
}

// ---------------------------------------------------------------------------
// Scaling

enum class ScalerKind { none, zscore, minmax };

inline std::string_view to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::none: return "none";
    case ScalerKind::zscore: return "zscore";
    case ScalerKind::minmax: return "minmax";
  }
  return "none";
}

/// Column statistics fitted on training rows. For zscore `center`/`scale` are
/// the mean and population standard deviation; for minmax they are min and max.
struct ScalerParams {
  ScalerKind kind = ScalerKind::none;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<bool> degenerate;
  bool fitted = false;
};

inline ScalerParams fit_scaler(const Matrix& train, ScalerKind kind) {
  if (train.empty()) throw UsageError("fit_scaler: no training rows");
  ScalerParams p;
  p.kind = kind;
  p.fitted = true;
  const std::size_t d = train.cols();
  const double n = static_cast<double>(train.rows());
  p.center.assign(d, 0.0);
  p.scale.assign(d, 1.0);
  p.degenerate.assign(d, false);
  if (kind == ScalerKind::none) return p;
  for (std::size_t c = 0; c < d; ++c) {
    if (kind == ScalerKind::zscore) {
      double sum = 0.0;
      for (std::size_t r = 0; r < train.rows(); ++r) sum += train(r, c);
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t r = 0; r < train.rows(); ++r) {
        const double dlt = train(r, c) - mean;
        ss += dlt * dlt;
      }
      p.center[c] = mean;
      p.scale[c] = std::sqrt(ss / n);
      p.degenerate[c] = !(p.scale[c] > 0.0);
    } else {
      double lo = train(0, c);
      double hi = train(0, c);
      for (std::size_t r = 1; r < train.rows(); ++r) {
        lo = std::min(lo, train(r, c));
        hi = std::max(hi, train(r, c));
      }
      p.center[c] = lo;
      p.scale[c] = hi;
      p.degenerate[c] = !(hi > lo);
    }
  }
  return p;
}

/// zscore: (x - mean) / std; minmax: (x - min) / (max - min). Degenerate
/// columns map to 0.
inline Matrix apply_scaler(const ScalerParams& p, const Matrix& rows) {
  if (!p.fitted) throw UsageError("apply_scaler: parameters were never fitted");
  if (!rows.empty() && rows.cols() != p.center.size()) {
    throw ShapeError("apply_scaler: expected " + std::to_string(p.center.size()) +
                     " columns, got " + std::to_string(rows.cols()));
  }
  if (p.kind == ScalerKind::none) return rows;
  Matrix out = rows;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      if (p.degenerate[c]) {
        out(r, c) = 0.0;
      } else if (p.kind == ScalerKind::zscore) {
        out(r, c) = (rows(r, c) - p.center[c]) / p.scale[c];
      } else {
        out(r, c) = (rows(r, c) - p.center[c]) / (p.scale[c] - p.center[c]);
      }
    }
  }
  return out;
}

inline nlohmann::json to_json(const ScalerParams& p) {
  nlohmann::json j = {{"kind", to_string(p.kind)}};
  if (p.kind == ScalerKind::zscore) {
    j["mean"] = p.center;
    j["std"] = p.scale;
  } else if (p.kind == ScalerKind::minmax) {
    j["min"] = p.center;
    j["max"] = p.scale;
  }
  if (p.kind != ScalerKind::none) {
    std::vector<int> deg(p.degenerate.begin(), p.degenerate.end());
    j["degenerate"] = deg;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Task derivation

enum class TaskKind { binary, multiclass };

inline int class_count(TaskKind t) noexcept { return t == TaskKind::binary ? 2 : 5; }

inline std::string_view to_string(TaskKind t) {
  return t == TaskKind::binary ? "binary" : "multiclass";
}

inline TaskKind parse_task(std::string_view s) {
  if (s == "binary") return TaskKind::binary;
  if (s == "multiclass") return TaskKind::multiclass;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected binary|multiclass)");
}

/// Binary collapses severities 1..4 to 1; multiclass keeps 0..4.
inline DataTable derive_task(const DataTable& table, TaskKind task) {
  DataTable out = table;
  if (task == TaskKind::binary) {
    for (int& y : out.labels) y = y > 0 ? 1 : 0;
  }
  return out;
}

inline std::vector<std::size_t> class_counts(std::span<const int> labels, int class_count) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw DataError("label " + std::to_string(y) + " outside 0.." + std::to_string(class_count - 1));
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitResult {
  DataTable train;
  DataTable test;
  std::vector<std::size_t> train_index;  // ascending row indices into the input
  std::vector<std::size_t> test_index;
  bool stratified = false;
  std::vector<std::string> warnings;
};

/// Test size is ceil(fraction * n). Stratified splits allocate the test rows
/// per class by largest remainder, so each class is within one sample of its
/// proportional share.
inline SplitResult split(const DataTable& table, const SplitSpec& spec) {
  if (table.empty()) throw UsageError("split: empty table");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ConfigError("split: test_fraction must lie in (0, 1)");
  }
  const std::size_t n = table.rows();
  // The epsilon keeps 0.2 * 305 from rounding up to 62 through representation error.
  auto n_test = static_cast<std::size_t>(std::ceil(spec.test_fraction * static_cast<double>(n) - 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n > 1 ? n - 1 : 1);

  SplitResult res;
  Rng rng(spec.seed);
  std::vector<std::size_t> test;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[table.labels[i]].push_back(i);
  bool stratify = spec.stratified;
  if (stratify) {
    for (const auto& [cls, members] : by_class) {
      if (members.size() < 2) {
        res.warnings.push_back("class " + std::to_string(cls) + " has " +
                               std::to_string(members.size()) +
                               " sample(s); falling back to an unstratified split");
        stratify = false;
        break;
      }
    }
  }

  if (stratify) {
    struct Share {
      int cls;
      std::size_t base;
      double remainder;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [cls, members] : by_class) {
      const double exact = static_cast<double>(n_test) * static_cast<double>(members.size()) /
                           static_cast<double>(n);
      const auto base = static_cast<std::size_t>(std::floor(exact));
      shares.push_back({cls, base, exact - static_cast<double>(base)});
      assigned += base;
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return shares[a].remainder > shares[b].remainder;
    });
    for (std::size_t k = 0; assigned < n_test; ++k, ++assigned) ++shares[order[k]].base;
    for (const auto& s : shares) {
      auto members = by_class[s.cls];
      shuffle(members, rng);
      test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(s.base));
    }
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    shuffle(all, rng);
    test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  }

  std::sort(test.begin(), test.end());
  std::vector<bool> in_test(n, false);
  for (std::size_t i : test) in_test[i] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_test[i]) res.train_index.push_back(i);
  }
  res.test_index = std::move(test);
  res.stratified = stratify;
  res.train = table.subset(res.train_index);
  res.test = table.subset(res.test_index);
  return res;
}

// ---------------------------------------------------------------------------
// Random oversampling

/// Appends copies of randomly chosen (with replacement) rows of every
/// minority class until each class matches the majority count. The original
/// rows come first and are unchanged.
inline DataTable random_oversample(const DataTable& train, std::uint64_t seed, int class_count) {
  const auto counts = class_counts(train.labels, class_count);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw ResampleError("class " + std::to_string(c) + " has no training rows to resample");
    }
  }
  const std::size_t target = *std::max_element(counts.begin(), counts.end());
  Rng rng(seed);
  std::vector<std::size_t> index(train.rows());
  std::iota(index.begin(), index.end(), std::size_t{0});
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      if (train.labels[i] == static_cast<int>(c)) members.push_back(i);
    }
    for (std::size_t k = counts[c]; k < target; ++k) {
      index.push_back(members[uniform_index(rng, members.size())]);
    }
  }
  return train.subset(index);
}

}  // namespace scorefuse
