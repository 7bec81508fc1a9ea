// Task-per-observation: one independent work item per observation with all
// local state in fixed-capacity scratch owned by the worker.

#include <memory>
#include <string>

#include <omp.h>

#include "kernel.hpp"
#include "vecchia/error.hpp"

namespace vecchia::detail {

int resolve_threads(const EngineOptions& options) {
  return options.threads > 0 ? options.threads : omp_get_max_threads();
}

namespace {

template <typename MakeWorkspace>
void task_loop(const EngineProblem& problem, std::size_t begin, int threads,
               const PartsLayout& layout, double* records, FailureTracker& failures,
               MakeWorkspace make_workspace) {
  const Shape s = shape_of(problem);
  const std::size_t stride = layout.stride();
  const auto sb = static_cast<std::ptrdiff_t>(begin);
  const auto sn = static_cast<std::ptrdiff_t>(problem.data.n());
#pragma omp parallel num_threads(threads)
  {
    auto ws = make_workspace(s);
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t si = sb; si < sn; ++si) {
      const auto i = static_cast<std::size_t>(si);
      if (failures.skip(i)) continue;
      const std::size_t k = problem.neighbors.count(i);
      const std::size_t status =
          process_into(problem, i, ws->view(k, s), layout, records + i * stride);
      if (status != k) failures.record(i, status);
    }
  }
}

template <std::size_t Cap>
void run_tier(const EngineProblem& problem, std::size_t begin, int threads,
              const PartsLayout& layout, double* records, FailureTracker& failures) {
  task_loop(problem, begin, threads, layout, records, failures,
            [](const Shape&) { return std::make_unique<FixedWorkspace<Cap>>(); });
}

struct DynamicAdapter {
  DynamicWorkspace ws;
  LocalView view(std::size_t k, const Shape&) { return ws.view(k); }
};

}  // namespace

void run_task_backend(const EngineProblem& problem, std::size_t begin,
                      const EngineOptions& options, const PartsLayout& layout, double* records,
                      FailureTracker& failures) {
  if (begin >= problem.data.n()) return;
  const std::size_t width = problem.neighbors.width();
  std::size_t tier = options.capacity_tier;
  if (tier == 0) {
    tier = auto_capacity_tier(problem.neighbors.m());
  } else {
    bool known = false;
    for (const std::size_t t : kCapacityTiers) known = known || t == tier;
    if (!known || tier < width) {
      fail(ErrorCode::InvalidArgument,
           "capacity tier " + std::to_string(tier) + " cannot hold " + std::to_string(width) +
               " neighbors (tiers: 8, 16, 32, 64)");
    }
  }
  const int threads = resolve_threads(options);
  const Shape s = shape_of(problem);
  const bool fixed_ok = FixedWorkspace<8>::fits(s);
  switch (fixed_ok ? tier : 0) {
    case 8: return run_tier<8>(problem, begin, threads, layout, records, failures);
    case 16: return run_tier<16>(problem, begin, threads, layout, records, failures);
    case 32: return run_tier<32>(problem, begin, threads, layout, records, failures);
    case 64: return run_tier<64>(problem, begin, threads, layout, records, failures);
    default:
      task_loop(problem, begin, threads, layout, records, failures, [width](const Shape& sh) {
        return std::make_unique<DynamicAdapter>(DynamicAdapter{DynamicWorkspace(width, sh)});
      });
  }
}

}  // namespace vecchia::detail
