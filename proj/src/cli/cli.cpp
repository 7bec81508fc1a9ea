#include "vecchia/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>

#include "vecchia/bench.hpp"
#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"
#include "vecchia/fit_json.hpp"
#include "vecchia/inference.hpp"
#include "vecchia/io.hpp"
#include "vecchia/oracle.hpp"
#include "vecchia/predict.hpp"
#include "vecchia/preprocess.hpp"
#include "vecchia/rng.hpp"

namespace vecchia::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
    case ErrorCategory::Io: return kExitIo;
  }
  return kExitInternal;
}

// --threads wins over VECCHIA_NUM_THREADS; 0 leaves the OpenMP default.
int resolve_workers(int flag) {
  if (flag > 0) return flag;
  const char* env = std::getenv("VECCHIA_NUM_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int value = 0;
  const std::string_view text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) {
    fail(ErrorCode::InvalidArgument, "VECCHIA_NUM_THREADS must be a non-negative integer");
  }
  return value;
}

struct FitArgs {
  io::RunConfig config;
  std::string ordering = "random";
  std::string backend = "task";
  std::vector<double> start;
  std::string nn_cache;
  std::string out;
  int threads = 0;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string pred;
  std::size_t m_pred = 60;
  bool latent = false;
  std::string out;
  int threads = 0;
};

struct SimulateArgs {
  std::size_t n = 0;
  std::size_t d = 2;
  std::string covfun = "exponential_isotropic";
  std::vector<double> theta;
  std::vector<double> beta{0.0};
  std::uint64_t seed = 1;
  std::size_t vecchia_m = 0;
  std::string out;
};

struct BenchArgs {
  std::string mode = "sweep";
  std::vector<std::size_t> n{25000, 50000, 100000, 200000};
  std::vector<std::size_t> m{10, 30};
  std::vector<std::string> backends{"task"};
  std::size_t reps = 5;
  std::uint64_t seed = 1;
  bool deterministic = false;
  bool fit = false;
  std::size_t max_iters = 40;
  std::size_t n_pred = 1000;
  std::size_t m_pred = 60;
  std::string search = "kdtree";
  std::string out;
  int threads = 0;
};

NeighborArray neighbors_for(const Matrix& locs, std::size_t m, const std::string& cache) {
  if (!cache.empty() && std::filesystem::exists(cache)) {
    NeighborArray nn = read_neighbor_csv(cache);
    if (nn.n() != locs.rows() || nn.m() != m) {
      fail(ErrorCode::DimensionMismatch, "neighbor cache " + cache + " is " +
                                             std::to_string(nn.n()) + " x " +
                                             std::to_string(nn.width()) + ", expected " +
                                             std::to_string(locs.rows()) + " x " +
                                             std::to_string(m + 1));
    }
    return nn;
  }
  NeighborArray nn = find_ordered_neighbors(locs, m);
  if (!cache.empty()) write_neighbor_csv(nn, cache);
  return nn;
}

int run_fit(FitArgs& a, std::ostream& out) {
  io::RunConfig& cfg = a.config;
  cfg.ordering.kind = a.ordering == "identity" ? OrderingSpec::Kind::Identity
                                               : OrderingSpec::Kind::Random;
  cfg.backend = parse_backend(a.backend);
  cfg.threads = resolve_workers(a.threads);
  if (!a.start.empty()) cfg.start = a.start;
  // an empty design is invalid, so no covariates means an intercept-only mean
  if (cfg.columns.x.empty()) cfg.columns.intercept = true;

  const CovarianceFamily family = covariance_registry(cfg.covfun);
  const Dataset raw = io::read_csv_dataset(cfg.data_path, cfg.columns);
  if (cfg.m == 0 || cfg.m >= raw.n()) {
    fail(ErrorCode::DimensionMismatch, "conditioning size m=" + std::to_string(cfg.m) +
                                           " must satisfy 1 <= m < n=" + std::to_string(raw.n()));
  }
  std::optional<CovarianceParameters> start;
  if (cfg.start) {
    start = CovarianceParameters{family.kind(), *cfg.start};
    validate_parameters(*start, raw.d());
  } else if (family.embeds_sphere() && raw.d() != 2) {
    fail(ErrorCode::DimensionMismatch, "covariance family does not accept " +
                                           std::to_string(raw.d()) + "-dimensional locations");
  }

  PhaseTimings timings;
  auto t0 = Clock::now();
  Dataset data = reorder_dataset(raw, make_ordering(cfg.ordering, raw.n()));
  data.locs = family.prepare_locations(data.locs);
  timings.add("reorder", seconds_since(t0));

  t0 = Clock::now();
  const NeighborArray nn = neighbors_for(data.locs, cfg.m, a.nn_cache);
  timings.add("neighbor_search", seconds_since(t0));

  FitOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.tol = cfg.tol;
  opts.jitter = cfg.jitter;
  opts.engine.backend = cfg.backend;
  opts.engine.deterministic = cfg.deterministic;
  opts.engine.capacity_tier = cfg.capacity_tier;
  opts.engine.threads = cfg.threads;
  FitResult result = fit(data, nn, start ? *start : default_start(data, family.kind()), opts);
  for (auto& entry : result.phase_timings.entries) timings.add(entry.first, entry.second);
  result.phase_timings = timings;

  io::write_fit_json(a.out, {cfg, result});

  const auto names = family.parameter_names(raw.d());
  out << "loglik " << io::format_double(result.loglik_trace.back()) << '\n';
  for (std::size_t j = 0; j < names.size(); ++j) {
    out << names[j] << ' ' << io::format_double(result.theta_hat.theta[j]) << '\n';
  }
  out << "iterations " << result.iterations << (result.converged ? " converged" : " not-converged")
      << '\n';
  for (const auto& [name, seconds] : result.phase_timings.entries) {
    out << name << "_ms " << io::format_double(seconds * 1e3) << '\n';
  }
  return kExitOk;
}

int run_predict(const PredictArgs& a, std::ostream& out) {
  const io::FitDocument model = io::read_fit_json(a.model);
  const std::string train_path = a.data.empty() ? model.config.data_path : a.data;
  const Dataset train = io::read_csv_dataset(train_path, model.config.columns);
  const io::NumericTable pred_table = io::read_numeric_csv(a.pred);
  const Dataset pred = io::dataset_from_table(pred_table, model.config.columns, false);

  KrigingOptions opts;
  opts.m_pred = std::min(a.m_pred, train.n());
  opts.latent = a.latent;
  opts.threads = resolve_workers(a.threads);
  const auto t0 = Clock::now();
  const PredictionSet ps = krige(model.result, train, pred.locs, pred.X, opts);
  const double predict_seconds = seconds_since(t0);

  io::NumericTable table;
  const auto loc_names = io::resolve_location_columns(pred_table, model.config.columns);
  table.header = loc_names;
  table.header.push_back("mean");
  table.header.push_back("sd");
  const bool has_y = !pred.y.empty();
  if (has_y) table.header.push_back(model.config.columns.y);
  table.rows = pred.locs.rows();
  for (std::size_t t = 0; t < table.rows; ++t) {
    for (std::size_t c = 0; c < pred.locs.cols(); ++c) table.values.push_back(pred.locs(t, c));
    table.values.push_back(ps.mean[t]);
    table.values.push_back(ps.sd[t]);
    if (has_y) table.values.push_back(pred.y[t]);
  }
  io::write_numeric_csv(a.out, table);

  if (has_y) out << "rmse " << io::format_double(rmse(ps.mean, pred.y)) << '\n';
  out << "predict_ms " << io::format_double(predict_seconds * 1e3) << '\n';
  return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const CovarianceFamily family = covariance_registry(a.covfun);
  const CovarianceParameters params{family.kind(), a.theta};
  validate_parameters(params, a.d);
  if (a.n == 0) fail(ErrorCode::EmptyData, "--n must be positive");
  if (a.beta.empty()) fail(ErrorCode::InvalidArgument, "--beta needs at least the intercept");

  Rng rng(a.seed);
  Dataset ds;
  ds.locs = Matrix(a.n, a.d);
  io::ColumnSpec spec;
  spec.intercept = true;
  for (std::size_t c = 1; c < a.beta.size(); ++c) spec.x.push_back("x" + std::to_string(c));
  if (family.embeds_sphere()) {
    spec.locs = {"lon", "lat"};
    for (std::size_t i = 0; i < a.n; ++i) {
      ds.locs(i, 0) = rng.uniform(-180.0, 180.0);
      ds.locs(i, 1) = std::asin(rng.uniform(-1.0, 1.0)) * 180.0 / std::numbers::pi;
    }
  } else {
    for (std::size_t i = 0; i < a.n; ++i) {
      for (std::size_t c = 0; c < a.d; ++c) ds.locs(i, c) = rng.uniform01();
    }
  }
  ds.X = Matrix(a.n, a.beta.size());
  for (std::size_t i = 0; i < a.n; ++i) {
    ds.X(i, 0) = 1.0;
    for (std::size_t c = 1; c < a.beta.size(); ++c) ds.X(i, c) = rng.normal();
  }
  const std::uint64_t field_seed = rng.next();
  ds.y = a.vecchia_m > 0
             ? oracle::simulate_vecchia(params, a.beta, ds.locs, ds.X, a.vecchia_m, field_seed)
             : oracle::simulate_gp(params, a.beta, ds.locs, ds.X, field_seed);
  io::write_csv_dataset(a.out, ds, spec);
  out << "wrote " << a.n << " rows to " << a.out << '\n';
  return kExitOk;
}

int run_bench(const BenchArgs& a, std::ostream& out) {
  const int workers = resolve_workers(a.threads);
  std::vector<bench::BenchRecord> records;
  if (a.mode == "sweep") {
    bench::SweepConfig cfg;
    cfg.n_grid = a.n;
    cfg.m_grid = a.m;
    cfg.backends.clear();
    for (const auto& name : a.backends) cfg.backends.push_back(parse_backend(name));
    cfg.reps = a.reps;
    cfg.workers = workers;
    cfg.seed = a.seed;
    cfg.deterministic = a.deterministic;
    cfg.run_fit = a.fit;
    cfg.max_iters = a.max_iters;
    records = bench::scaling_sweep(cfg);
  } else if (a.mode == "profile") {
    if (a.backends.size() != 1) fail(ErrorCode::InvalidArgument, "profile takes one backend");
    for (const std::size_t n : a.n) {
      for (const std::size_t m : a.m) {
        bench::ProfileConfig cfg;
        cfg.n = n;
        cfg.m = m;
        cfg.n_pred = a.n_pred;
        cfg.m_pred = a.m_pred;
        cfg.backend = parse_backend(a.backends.front());
        cfg.search = a.search == "exhaustive" ? NeighborSearch::Exhaustive : NeighborSearch::KdTree;
        cfg.workers = workers;
        cfg.seed = a.seed;
        cfg.max_iters = a.max_iters;
        records.push_back(bench::phase_profile(cfg));
      }
    }
  } else {
    fail(ErrorCode::InvalidArgument, "unknown bench mode '" + a.mode + "'");
  }
  if (a.out.empty()) {
    out << bench::bench_csv_string(records);
  } else {
    bench::write_bench_csv(a.out, records);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vecchia-approximate Gaussian process fitting and prediction", "vecchia"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "estimate covariance parameters by Fisher scoring");
  fit_cmd->add_option("--data", fa.config.data_path, "training CSV")->required();
  fit_cmd->add_option("--y-col", fa.config.columns.y, "response column")->capture_default_str();
  fit_cmd->add_option("--x-cols", fa.config.columns.x, "covariate columns")->delimiter(',');
  fit_cmd->add_option("--loc-cols", fa.config.columns.locs, "location columns")->delimiter(',');
  fit_cmd->add_flag("--intercept", fa.config.columns.intercept,
                    "prepend an all-ones covariate (implied without --x-cols)");
  fit_cmd->add_option("--covfun", fa.config.covfun, "covariance family")->capture_default_str();
  fit_cmd->add_option("--m", fa.config.m, "conditioning set size")->capture_default_str();
  fit_cmd->add_option("--ordering", fa.ordering, "random or identity")
      ->check(CLI::IsMember({"random", "identity"}))
      ->capture_default_str();
  fit_cmd->add_option("--seed", fa.config.ordering.seed, "ordering seed")->capture_default_str();
  fit_cmd->add_option("--backend", fa.backend, "seq, task, nested or staged")
      ->check(CLI::IsMember({"seq", "task", "nested", "staged"}))
      ->capture_default_str();
  fit_cmd->add_flag("--deterministic", fa.config.deterministic, "fixed-order reduction");
  fit_cmd->add_option("--capacity-tier", fa.config.capacity_tier, "8, 16, 32 or 64 (0: auto)");
  fit_cmd->add_option("--max-iters", fa.config.max_iters)->capture_default_str();
  fit_cmd->add_option("--tol", fa.config.tol, "Newton decrement tolerance")->capture_default_str();
  fit_cmd->add_option("--start", fa.start, "starting parameters")->delimiter(',');
  fit_cmd->add_option("--jitter", fa.config.jitter, "added to local covariance diagonals");
  fit_cmd->add_option("--nn-cache", fa.nn_cache, "neighbor array CSV, read if present");
  fit_cmd->add_option("--threads", fa.threads, "worker count (default VECCHIA_NUM_THREADS)");
  fit_cmd->add_option("--out", fa.out, "fit JSON output")->required();

  PredictArgs pa;
  auto* pred_cmd = app.add_subcommand("predict", "nearest-neighbor kriging from a fitted model");
  pred_cmd->add_option("--model", pa.model, "fit JSON")->required();
  pred_cmd->add_option("--data", pa.data, "training CSV (default: the one recorded in the model)");
  pred_cmd->add_option("--pred", pa.pred, "prediction locations CSV")->required();
  pred_cmd->add_option("--m-pred", pa.m_pred, "neighbors per prediction")->capture_default_str();
  pred_cmd->add_flag("--latent", pa.latent, "predict the latent field (no nugget in sd)");
  pred_cmd->add_option("--threads", pa.threads);
  pred_cmd->add_option("--out", pa.out, "prediction CSV output")->required();

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic dataset");
  sim_cmd->add_option("--n", sa.n, "number of observations")->required();
  sim_cmd->add_option("--d", sa.d, "location dimension")->capture_default_str();
  sim_cmd->add_option("--covfun", sa.covfun)->capture_default_str();
  sim_cmd->add_option("--theta", sa.theta, "covariance parameters")->delimiter(',')->required();
  sim_cmd->add_option("--beta", sa.beta, "intercept then slopes")->delimiter(',');
  sim_cmd->add_option("--seed", sa.seed)->capture_default_str();
  sim_cmd->add_option("--vecchia-m", sa.vecchia_m, "draw from the m-neighbor approximation");
  sim_cmd->add_option("--out", sa.out, "dataset CSV output")->required();

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "timing sweeps on synthetic sphere data");
  bench_cmd->add_option("--mode", ba.mode, "sweep or profile")->capture_default_str();
  bench_cmd->add_option("--n", ba.n)->delimiter(',');
  bench_cmd->add_option("--m", ba.m)->delimiter(',');
  bench_cmd->add_option("--backends", ba.backends)->delimiter(',');
  bench_cmd->add_option("--reps", ba.reps)->capture_default_str();
  bench_cmd->add_option("--seed", ba.seed)->capture_default_str();
  bench_cmd->add_flag("--deterministic", ba.deterministic);
  bench_cmd->add_flag("--fit", ba.fit, "also time a full fit per cell");
  bench_cmd->add_option("--max-iters", ba.max_iters)->capture_default_str();
  bench_cmd->add_option("--n-pred", ba.n_pred)->capture_default_str();
  bench_cmd->add_option("--m-pred", ba.m_pred)->capture_default_str();
  bench_cmd->add_option("--search", ba.search, "kdtree or exhaustive")
      ->check(CLI::IsMember({"kdtree", "exhaustive"}));
  bench_cmd->add_option("--threads", ba.threads);
  bench_cmd->add_option("--out", ba.out, "CSV output (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fa, out);
    if (pred_cmd->parsed()) return run_predict(pa, out);
    if (sim_cmd->parsed()) return run_simulate(sa, out);
    if (bench_cmd->parsed()) return run_bench(ba, out);
  } catch (const Error& e) {
    err << "vecchia: error[" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "vecchia: error[Internal]: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace vecchia::cli
