#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "scorefuse/matrix.hpp"
#include "scorefuse/random.hpp"

namespace testsupport {

inline std::string shipped_binary_data() { return SCOREFUSE_DATA_DIR "/cleveland_binary.data"; }

/// The five-class processed Cleveland file, if one is available: the
/// SCOREFUSE_CLEVELAND_DATA environment variable or data/processed.cleveland.data.
inline std::string severity_data() {
  if (const char* env = std::getenv("SCOREFUSE_CLEVELAND_DATA"); env && *env) return env;
  const std::string local = SCOREFUSE_DATA_DIR "/processed.cleveland.data";
  return std::filesystem::exists(local) ? local : std::string();
}

/// Cleveland data for binary-only checks: the five-class file when present,
/// else the shipped binary reconstruction.
inline std::string cleveland_data() {
  const auto s = severity_data();
  return s.empty() ? shipped_binary_data() : s;
}

/// n rows of k non-negative entries summing to one.
inline scorefuse::ScoreMatrix random_scores(scorefuse::Rng& rng, std::size_t n, std::size_t k) {
  scorefuse::ScoreMatrix m(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += m(r, c) = scorefuse::uniform01(rng) + 1e-3;
    for (std::size_t c = 0; c < k; ++c) m(r, c) /= s;
  }
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("scorefuse-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
