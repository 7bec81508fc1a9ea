// Staged-batched: each algebraic stage runs across a whole batch of
// observations before the next begins, with intermediates held in
// batch-leading heap arrays. The end of every parallel loop is a barrier.

#include <algorithm>
#include <vector>

#include "kernel.hpp"

namespace vecchia::detail {

namespace {

constexpr std::size_t kStagedBudgetBytes = std::size_t{512} << 20;

struct BatchArrays {
  std::size_t cap, d, p, np;
  std::vector<double> locsub, Xsub, ysub, K, D, u, c;
  std::vector<std::size_t> k, status;

  BatchArrays(std::size_t batch, std::size_t cap_, const Shape& s)
      : cap(cap_), d(s.d), p(s.p), np(s.np),
        locsub(batch * cap * d), Xsub(batch * cap * p), ysub(batch * cap),
        K(batch * cap * cap), D(batch * cap * cap * np), u(batch * cap), c(batch * cap * np),
        k(batch), status(batch) {}

  static std::size_t bytes_per_observation(std::size_t cap, const Shape& s) {
    return sizeof(double) * (cap * (s.d + s.p + 1) + cap * cap * (1 + s.np) + cap * (1 + s.np)) +
           2 * sizeof(std::size_t);
  }

  LocalView view(std::size_t b) {
    return {k[b], d, p, np,
            locsub.data() + b * cap * d, Xsub.data() + b * cap * p, ysub.data() + b * cap,
            K.data() + b * cap * cap, D.data() + b * cap * cap * np, u.data() + b * cap,
            c.data() + b * cap * np};
  }
};

}  // namespace

void run_staged_backend(const EngineProblem& problem, std::size_t begin,
                        const EngineOptions& options, const PartsLayout& layout, double* records,
                        FailureTracker& failures) {
  const std::size_t n = problem.data.n();
  if (begin >= n) return;
  const int threads = resolve_threads(options);
  const Shape s = shape_of(problem);
  const std::size_t cap = problem.neighbors.width();
  const std::size_t stride = layout.stride();

  std::size_t batch = options.staged_batch;
  if (batch == 0) {
    batch = std::max<std::size_t>(
        1, kStagedBudgetBytes / BatchArrays::bytes_per_observation(cap, s));
  }
  batch = std::min(batch, n - begin);
  BatchArrays arrays(batch, cap, s);

  for (std::size_t first = begin; first < n; first += batch) {
    const std::size_t count = std::min(batch, n - first);
    const auto sc = static_cast<std::ptrdiff_t>(count);
    auto obs = [first](std::ptrdiff_t b) { return first + static_cast<std::size_t>(b); };

#pragma omp parallel num_threads(threads)
    {
#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) {
        arrays.k[b] = problem.neighbors.count(obs(b));
        gather(problem, obs(b), arrays.view(b));
      }

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) fill_covariance(problem, arrays.view(b));

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) fill_derivatives(problem, arrays.view(b));

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) arrays.status[b] = factor(arrays.view(b));

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) {
        if (arrays.status[b] == arrays.k[b]) solve_response(arrays.view(b));
      }

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) {
        if (arrays.status[b] == arrays.k[b]) solve_last_row(arrays.view(b));
      }

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) {
        if (arrays.status[b] == arrays.k[b]) contract_derivatives(arrays.view(b));
      }

#pragma omp for schedule(static)
      for (std::ptrdiff_t b = 0; b < sc; ++b) {
        if (arrays.status[b] == arrays.k[b]) {
          emit(arrays.view(b), layout, records + obs(b) * stride);
        }
      }
    }

    for (std::size_t b = 0; b < count; ++b) {
      if (arrays.status[b] != arrays.k[b]) {
        failures.record(first + b, arrays.status[b]);
        break;
      }
    }
    failures.rethrow();
  }
}

}  // namespace vecchia::detail
