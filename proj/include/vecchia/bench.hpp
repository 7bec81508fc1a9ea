#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vecchia/core.hpp"
#include "vecchia/preprocess.hpp"

namespace vecchia::bench {

// One timed cell. Durations are in milliseconds; a phase that was not run
// is recorded as 0.
struct BenchRecord {
  std::string mode;  // "sweep" or "profile"
  std::size_t n = 0;
  std::size_t m = 0;
  Backend backend = Backend::TaskPerObservation;
  int workers = 0;  // resolved worker count
  std::size_t rep = 0;
  double reorder_ms = 0.0;
  double neighbor_ms = 0.0;
  double evaluate_ms = 0.0;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
  double total_ms = 0.0;
  std::size_t iterations = 0;
  double loglik = 0.0;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

// Benchmark field: uniform lon/lat on the sphere, intercept-only mean,
// simulated with the Vecchia simulator (m = 30) at `truth`.
Dataset synthetic_sphere_field(const CovarianceParameters& truth, std::size_t n,
                               std::uint64_t seed);

inline CovarianceParameters default_bench_truth() {
  return {CovarianceKind::ExponentialSphere, {1.0, 0.1, 0.05}};
}

struct SweepConfig {
  std::vector<std::size_t> n_grid{25000, 50000, 100000, 200000};
  std::vector<std::size_t> m_grid{10, 30};
  std::vector<Backend> backends{Backend::TaskPerObservation};
  std::size_t reps = 5;
  int workers = 0;  // 0: OpenMP default
  std::uint64_t seed = 1;
  bool deterministic = false;
  bool run_fit = false;
  std::size_t max_iters = 40;
  CovarianceParameters truth = default_bench_truth();
};

// One field is simulated at the largest n; smaller cells use its leading
// rows. Each record holds one evaluate (and optionally one fit) timing; the
// neighbor search is timed once per (n, m) and repeated across its records.
std::vector<BenchRecord> scaling_sweep(
    const SweepConfig& config,
    const std::function<void(const BenchRecord&)>& progress = {});

struct ProfileConfig {
  std::size_t n = 20000;
  std::size_t m = 30;
  std::size_t n_pred = 1000;
  std::size_t m_pred = 60;
  Backend backend = Backend::TaskPerObservation;
  NeighborSearch search = NeighborSearch::KdTree;
  int workers = 0;  // 0: OpenMP default
  std::uint64_t seed = 1;
  std::size_t max_iters = 40;
  CovarianceParameters truth = default_bench_truth();
};

// End to end: reorder, neighbor search, fit, predict; total_ms is the wall
// time around all four.
BenchRecord phase_profile(const ProfileConfig& config);

std::string bench_csv_string(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> parse_bench_csv(const std::string& text);
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_bench_csv(const std::filesystem::path& path);

}  // namespace vecchia::bench
