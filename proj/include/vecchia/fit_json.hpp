#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vecchia/core.hpp"
#include "vecchia/io.hpp"

namespace vecchia::io {

inline constexpr const char* kToolName = "vecchia";
inline constexpr const char* kToolVersion = "0.1.0";

// Everything about a fit run that is echoed into its output document.
struct RunConfig {
  std::string data_path;
  ColumnSpec columns;
  std::string covfun = "exponential_isotropic";
  std::size_t m = 30;
  OrderingSpec ordering;
  Backend backend = Backend::TaskPerObservation;
  bool deterministic = false;
  std::size_t capacity_tier = 0;
  std::size_t max_iters = 40;
  double tol = 1e-4;
  double jitter = 0.0;
  std::optional<std::vector<double>> start;
  int threads = 0;
};

struct FitDocument {
  RunConfig config;
  FitResult result;
};

// Serialized with shortest round-trip doubles. Every timing lives under the
// top-level key "phase_timings" (milliseconds); backend, thread count and
// the other settings that must not change results live under "execution".
std::string fit_json_string(const FitDocument& doc);
void write_fit_json(const std::filesystem::path& path, const FitDocument& doc);

// Throws IoError or ParseError.
FitDocument parse_fit_json(const std::string& text);
FitDocument read_fit_json(const std::filesystem::path& path);

// The document without "phase_timings" and "execution", as used for
// reproducibility comparisons.
std::string strip_timings(const std::string& fit_json);

}  // namespace vecchia::io
