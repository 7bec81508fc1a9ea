#include "vecchia/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"
#include "vecchia/inference.hpp"
#include "vecchia/io.hpp"
#include "vecchia/oracle.hpp"
#include "vecchia/predict.hpp"
#include "vecchia/rng.hpp"

namespace vecchia::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Dataset leading_rows(const Dataset& ds, std::size_t n) {
  Dataset out;
  out.y.assign(ds.y.begin(), ds.y.begin() + static_cast<std::ptrdiff_t>(n));
  out.X = Matrix(n, ds.p(), std::vector<double>(ds.X.data(), ds.X.data() + n * ds.p()));
  out.locs = Matrix(n, ds.d(), std::vector<double>(ds.locs.data(), ds.locs.data() + n * ds.d()));
  return out;
}

// Ordered, embedded data with its neighbor array.
struct Prepared {
  Dataset data;
  NeighborArray nn;
  double reorder_ms = 0.0;
  double neighbor_ms = 0.0;
};

Prepared prepare(const Dataset& raw, const CovarianceFamily& family, std::uint64_t seed,
                 std::size_t m, NeighborSearch search) {
  Prepared out;
  auto t0 = Clock::now();
  Dataset ordered = reorder_dataset(raw, make_ordering({OrderingSpec::Kind::Random, seed}, raw.n()));
  ordered.locs = family.prepare_locations(ordered.locs);
  out.reorder_ms = ms_since(t0);

  t0 = Clock::now();
  out.nn = find_ordered_neighbors(ordered.locs, m, search);
  out.neighbor_ms = ms_since(t0);
  out.data = std::move(ordered);
  return out;
}

int resolved_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

EngineOptions engine_options(Backend backend, int workers, bool deterministic) {
  EngineOptions opts;
  opts.backend = backend;
  opts.threads = workers;
  opts.deterministic = deterministic;
  return opts;
}

const char* kHeader =
    "mode,n,m,backend,workers,rep,reorder_ms,neighbor_ms,evaluate_ms,fit_ms,predict_ms,"
    "total_ms,iterations,loglik";

template <typename T>
T parse_number(std::string_view text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorCode::ParseError, "bench csv line " + std::to_string(line) + ": bad value '" +
                                    std::string(text) + "'");
  }
  return value;
}

}  // namespace

Dataset synthetic_sphere_field(const CovarianceParameters& truth, std::size_t n,
                               std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.locs = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    ds.locs(i, 0) = rng.uniform(-180.0, 180.0);
    ds.locs(i, 1) = std::asin(rng.uniform(-1.0, 1.0)) * 180.0 / std::numbers::pi;
  }
  ds.X = Matrix(n, 1, 1.0);
  const std::vector<double> beta{0.0};
  ds.y = oracle::simulate_vecchia(truth, beta, ds.locs, ds.X, 30, seed ^ 0x9e3779b97f4a7c15ULL);
  return ds;
}

std::vector<BenchRecord> scaling_sweep(const SweepConfig& config,
                                       const std::function<void(const BenchRecord&)>& progress) {
  if (config.n_grid.empty() || config.m_grid.empty() || config.backends.empty() ||
      config.reps == 0) {
    fail(ErrorCode::InvalidArgument, "scaling sweep needs nonempty grids and reps >= 1");
  }
  const CovarianceFamily family(config.truth.kind);
  const std::size_t n_max = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  const Dataset field = synthetic_sphere_field(config.truth, n_max, config.seed);

  std::vector<BenchRecord> records;
  for (const std::size_t n : config.n_grid) {
    const Dataset raw = leading_rows(field, n);
    for (const std::size_t m : config.m_grid) {
      const Prepared prep = prepare(raw, family, config.seed, m, NeighborSearch::KdTree);
      const CovarianceParameters start = default_start(prep.data, config.truth.kind);
      for (const Backend backend : config.backends) {
        for (std::size_t rep = 0; rep < config.reps; ++rep) {
          BenchRecord rec;
          rec.mode = "sweep";
          rec.n = n;
          rec.m = m;
          rec.backend = backend;
          rec.workers = resolved_workers(config.workers);
          rec.rep = rep;
          rec.reorder_ms = prep.reorder_ms;
          rec.neighbor_ms = prep.neighbor_ms;

          const EngineOptions opts = engine_options(backend, config.workers, config.deterministic);
          const EngineProblem problem{prep.data, prep.nn, family, config.truth.theta, 0.0};
          auto t0 = Clock::now();
          const ProfiledEvaluation ev = evaluate(problem, opts);
          rec.evaluate_ms = ms_since(t0);
          rec.loglik = ev.loglik;

          if (config.run_fit) {
            FitOptions fopts;
            fopts.max_iters = config.max_iters;
            fopts.engine = opts;
            t0 = Clock::now();
            const FitResult result = fit(prep.data, prep.nn, start, fopts);
            rec.fit_ms = ms_since(t0);
            rec.iterations = result.iterations;
            rec.loglik = result.loglik_trace.back();
          }
          rec.total_ms = rec.neighbor_ms + rec.evaluate_ms + rec.fit_ms;
          if (progress) progress(rec);
          records.push_back(rec);
        }
      }
    }
  }
  return records;
}

BenchRecord phase_profile(const ProfileConfig& config) {
  const CovarianceFamily family(config.truth.kind);
  const Dataset field = synthetic_sphere_field(config.truth, config.n + config.n_pred, config.seed);
  const Dataset train = leading_rows(field, config.n);
  Matrix locs_star(config.n_pred, 2);
  Matrix X_star(config.n_pred, 1, 1.0);
  for (std::size_t t = 0; t < config.n_pred; ++t) {
    locs_star(t, 0) = field.locs(config.n + t, 0);
    locs_star(t, 1) = field.locs(config.n + t, 1);
  }

  BenchRecord rec;
  rec.mode = "profile";
  rec.n = config.n;
  rec.m = config.m;
  rec.backend = config.backend;
  rec.workers = resolved_workers(config.workers);

  const auto wall = Clock::now();
  const Prepared prep = prepare(train, family, config.seed, config.m, config.search);
  rec.reorder_ms = prep.reorder_ms;
  rec.neighbor_ms = prep.neighbor_ms;

  FitOptions fopts;
  fopts.max_iters = config.max_iters;
  fopts.engine = engine_options(config.backend, config.workers, false);
  auto t0 = Clock::now();
  const FitResult result =
      fit(prep.data, prep.nn, default_start(prep.data, config.truth.kind), fopts);
  rec.fit_ms = ms_since(t0);
  rec.evaluate_ms =
      result.evaluations ? result.evaluate_seconds * 1e3 / static_cast<double>(result.evaluations)
                         : 0.0;
  rec.iterations = result.iterations;
  rec.loglik = result.loglik_trace.back();

  KrigingOptions kopts;
  kopts.m_pred = std::min(config.m_pred, config.n);
  kopts.threads = config.workers;
  t0 = Clock::now();
  krige(result, train, locs_star, X_star, kopts);
  rec.predict_ms = ms_since(t0);
  rec.total_ms = ms_since(wall);
  return rec;
}

std::string bench_csv_string(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : records) {
    out << r.mode << ',' << r.n << ',' << r.m << ',' << to_string(r.backend) << ',' << r.workers
        << ',' << r.rep << ',' << io::format_double(r.reorder_ms) << ','
        << io::format_double(r.neighbor_ms) << ',' << io::format_double(r.evaluate_ms) << ','
        << io::format_double(r.fit_ms) << ',' << io::format_double(r.predict_ms) << ','
        << io::format_double(r.total_ms) << ',' << r.iterations << ','
        << io::format_double(r.loglik) << '\n';
  }
  return out.str();
}

std::vector<BenchRecord> parse_bench_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kHeader) {
    fail(ErrorCode::ParseError, "bench csv: unexpected header");
  }
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != 14) {
      fail(ErrorCode::ParseError, "bench csv line " + std::to_string(line_no) + ": expected 14 fields");
    }
    BenchRecord r;
    r.mode = std::string(f[0]);
    r.n = parse_number<std::size_t>(f[1], line_no);
    r.m = parse_number<std::size_t>(f[2], line_no);
    r.backend = parse_backend(f[3]);
    r.workers = parse_number<int>(f[4], line_no);
    r.rep = parse_number<std::size_t>(f[5], line_no);
    r.reorder_ms = parse_number<double>(f[6], line_no);
    r.neighbor_ms = parse_number<double>(f[7], line_no);
    r.evaluate_ms = parse_number<double>(f[8], line_no);
    r.fit_ms = parse_number<double>(f[9], line_no);
    r.predict_ms = parse_number<double>(f[10], line_no);
    r.total_ms = parse_number<double>(f[11], line_no);
    r.iterations = parse_number<std::size_t>(f[12], line_no);
    r.loglik = parse_number<double>(f[13], line_no);
    out.push_back(std::move(r));
  }
  return out;
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << bench_csv_string(records);
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<BenchRecord> read_bench_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_bench_csv(text.str());
}

}  // namespace vecchia::bench
