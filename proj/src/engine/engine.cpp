#include <algorithm>
#include <string>

#include "kernel.hpp"
#include "vecchia/error.hpp"

namespace vecchia {

VecchiaParts& VecchiaParts::operator+=(const VecchiaParts& other) {
  if (other.data_.size() != data_.size()) {
    fail(ErrorCode::DimensionMismatch, "adding VecchiaParts with different layouts");
  }
  for (std::size_t t = 0; t < data_.size(); ++t) data_[t] += other.data_[t];
  return *this;
}

std::size_t auto_capacity_tier(std::size_t m) {
  for (const std::size_t tier : kCapacityTiers) {
    if (m + 1 <= tier) return tier;
  }
  return 0;
}

void reduce_pairwise_in_place(std::span<double> records, std::size_t n, std::size_t stride) {
  if (records.size() < n * stride) {
    fail(ErrorCode::DimensionMismatch, "reduce_pairwise_in_place: buffer too small");
  }
  double* base = records.data();
  std::size_t width = n;
  while (width > 1) {
    const std::size_t half = width / 2;
    for (std::size_t r = 0; r < half; ++r) {
      double* dst = base + r * stride;
      const double* lhs = base + 2 * r * stride;
      const double* rhs = lhs + stride;
      for (std::size_t t = 0; t < stride; ++t) dst[t] = lhs[t] + rhs[t];
    }
    if (width % 2 == 1) {
      std::copy_n(base + (width - 1) * stride, stride, base + half * stride);
    }
    width = half + width % 2;
  }
}

namespace detail {

void FailureTracker::rethrow() const {
  const std::size_t first = first_.load();
  if (first != static_cast<std::size_t>(-1)) {
    throw NotPositiveDefiniteError(first, pivot_, "local covariance factorization");
  }
}

void process_head(const EngineProblem& problem, std::size_t head_end, const PartsLayout& layout,
                  double* records, VecchiaParts* sum) {
  if (head_end == 0) return;
  const Shape s = shape_of(problem);
  DynamicWorkspace ws(head_end, s);
  std::vector<double> scratch(layout.stride());
  for (std::size_t i = 0; i < head_end; ++i) {
    const std::size_t k = problem.neighbors.count(i);
    double* out = records ? records + i * layout.stride() : scratch.data();
    const std::size_t status = process_into(problem, i, ws.view(k), layout, out);
    if (status != k) {
      throw NotPositiveDefiniteError(i, status, "local covariance factorization");
    }
    if (!records) {
      auto acc = sum->raw();
      for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += scratch[t];
    }
  }
}

namespace {

void check_problem(const EngineProblem& problem) {
  const std::size_t n = problem.data.n();
  if (problem.neighbors.n() != n) {
    fail(ErrorCode::DimensionMismatch, "neighbor array has " +
                                           std::to_string(problem.neighbors.n()) +
                                           " rows, dataset has " + std::to_string(n));
  }
  const std::size_t np = problem.family.nparms(problem.data.d());
  if (problem.theta.size() != np) {
    fail(ErrorCode::InvalidArgument, "expected " + std::to_string(np) +
                                         " covariance parameters, got " +
                                         std::to_string(problem.theta.size()));
  }
  if (problem.family.embeds_sphere() && problem.data.d() != 3) {
    fail(ErrorCode::DimensionMismatch,
         "exponential_sphere engine input must hold embedded 3-D coordinates");
  }
}

// Serial reference: running sum, or per-observation records when a fixed
// reduction order is requested.
void run_sequential_tail(const EngineProblem& problem, std::size_t begin,
                         const PartsLayout& layout, double* records, VecchiaParts* sum) {
  const std::size_t n = problem.data.n();
  if (begin >= n) return;
  const Shape s = shape_of(problem);
  DynamicWorkspace ws(problem.neighbors.width(), s);
  std::vector<double> scratch(layout.stride());
  for (std::size_t i = begin; i < n; ++i) {
    const std::size_t k = problem.neighbors.count(i);
    double* out = records ? records + i * layout.stride() : scratch.data();
    const std::size_t status = process_into(problem, i, ws.view(k), layout, out);
    if (status != k) {
      throw NotPositiveDefiniteError(i, status, "local covariance factorization");
    }
    if (!records) {
      auto acc = sum->raw();
      for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += scratch[t];
    }
  }
}

// Unordered reduction: worker partials combined in completion order.
void reduce_unordered(const double* records, std::size_t begin, std::size_t end,
                      std::size_t stride, int threads, VecchiaParts& sum) {
  const auto sb = static_cast<std::ptrdiff_t>(begin);
  const auto se = static_cast<std::ptrdiff_t>(end);
#pragma omp parallel num_threads(threads)
  {
    std::vector<double> local(stride, 0.0);
#pragma omp for schedule(dynamic, 1024) nowait
    for (std::ptrdiff_t si = sb; si < se; ++si) {
      const double* row = records + static_cast<std::size_t>(si) * stride;
      for (std::size_t t = 0; t < stride; ++t) local[t] += row[t];
    }
#pragma omp critical(vecchia_reduce)
    {
      auto acc = sum.raw();
      for (std::size_t t = 0; t < stride; ++t) acc[t] += local[t];
    }
  }
}

}  // namespace

}  // namespace detail

ObservationContribution process_observation(std::size_t i, const EngineProblem& problem) {
  detail::check_problem(problem);
  if (i >= problem.data.n()) fail(ErrorCode::InvalidArgument, "observation index out of range");
  const detail::Shape s = detail::shape_of(problem);
  const PartsLayout layout{s.p, s.np};
  ObservationContribution out(layout);
  const std::size_t k = problem.neighbors.count(i);
  detail::DynamicWorkspace ws(k, s);
  const std::size_t status = detail::process_into(problem, i, ws.view(k), layout, out.raw().data());
  if (status != k) throw NotPositiveDefiniteError(i, status, "local covariance factorization");
  return out;
}

VecchiaParts run(const EngineProblem& problem, const EngineOptions& options) {
  detail::check_problem(problem);
  const std::size_t n = problem.data.n();
  const detail::Shape s = detail::shape_of(problem);
  const PartsLayout layout{s.p, s.np};
  const std::size_t stride = layout.stride();
  const std::size_t head_end = std::min(problem.neighbors.m(), n);

  VecchiaParts sum(layout);
  const bool sequential = options.backend == Backend::Sequential;

  if (sequential && !options.deterministic) {
    detail::process_head(problem, head_end, layout, nullptr, &sum);
    detail::run_sequential_tail(problem, head_end, layout, nullptr, &sum);
    return sum;
  }

  // n-leading per-observation records, one row of `stride` per observation
  std::vector<double> records(n * stride, 0.0);
  if (options.deterministic) {
    detail::process_head(problem, head_end, layout, records.data(), nullptr);
  } else {
    detail::process_head(problem, head_end, layout, nullptr, &sum);
  }

  detail::FailureTracker failures;
  switch (options.backend) {
    case Backend::Sequential:
      detail::run_sequential_tail(problem, head_end, layout, records.data(), nullptr);
      break;
    case Backend::TaskPerObservation:
      detail::run_task_backend(problem, head_end, options, layout, records.data(), failures);
      break;
    case Backend::Nested:
      detail::run_nested_backend(problem, head_end, options, layout, records.data(), failures);
      break;
    case Backend::StagedBatched:
      detail::run_staged_backend(problem, head_end, options, layout, records.data(), failures);
      break;
  }
  failures.rethrow();

  if (options.deterministic) {
    reduce_pairwise_in_place(records, n, stride);
    std::copy_n(records.begin(), stride, sum.raw().begin());
  } else {
    detail::reduce_unordered(records.data(), head_end, n, stride,
                             detail::resolve_threads(options), sum);
  }
  return sum;
}

}  // namespace vecchia
