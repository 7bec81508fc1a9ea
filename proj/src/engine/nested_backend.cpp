// Nested: teams of lanes, one observation at a time per team. Lanes gather
// and fill the covariance and derivative entries in parallel, meet at a
// barrier, and one lane carries out the factorization and the rest.

#include <algorithm>

#include <omp.h>

#include "kernel.hpp"

namespace vecchia::detail {

void run_nested_backend(const EngineProblem& problem, std::size_t begin,
                        const EngineOptions& options, const PartsLayout& layout, double* records,
                        FailureTracker& failures) {
  const std::size_t n = problem.data.n();
  if (begin >= n) return;
  const int threads = resolve_threads(options);
  const int lanes = options.nested_lanes > 0 ? static_cast<int>(options.nested_lanes)
                                             : std::clamp(threads, 1, 4);
  const int teams = std::max(1, threads / lanes);
  if (omp_get_max_active_levels() < 2) omp_set_max_active_levels(2);

  const Shape s = shape_of(problem);
  const std::size_t width = problem.neighbors.width();
  const std::size_t stride = layout.stride();

#pragma omp parallel num_threads(teams)
  {
    const auto team = static_cast<std::size_t>(omp_get_thread_num());
    const auto team_count = static_cast<std::size_t>(omp_get_num_threads());
    DynamicWorkspace ws(width, s);
    LocalView view;  // shared by the team's lanes

#pragma omp parallel num_threads(lanes) shared(ws, view)
    {
      for (std::size_t i = begin + team; i < n; i += team_count) {
#pragma omp single
        view = ws.view(problem.neighbors.count(i));

        const auto k = static_cast<std::ptrdiff_t>(view.k);
#pragma omp for schedule(static)
        for (std::ptrdiff_t a = 0; a < k; ++a) {
          gather_entry(problem, i, view, static_cast<std::size_t>(a));
        }

#pragma omp for schedule(static)
        for (std::ptrdiff_t t = 0; t < k * k; ++t) {
          const auto a = static_cast<std::size_t>(t / k);
          const auto b = static_cast<std::size_t>(t % k);
          if (b > a) continue;
          covariance_entry(problem, view, a, b);
          for (std::size_t j = 0; j < view.np; ++j) derivative_entry(problem, view, j, a, b);
        }
        // implicit barrier above: all entries are in place

#pragma omp single
        {
          const std::size_t status = finish_observation(view, layout, records + i * stride);
          if (status != view.k) failures.record(i, status);
        }
      }
    }
  }
}

}  // namespace vecchia::detail
