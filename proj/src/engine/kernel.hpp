#pragma once

// Per-observation body shared by every backend. Each stage is a separate
// function so the staged backend can run them array-wide while the other
// backends run them back to back; the arithmetic sequence per observation is
// the same either way.

#include <array>
#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "vecchia/engine.hpp"
#include "vecchia/linalg.hpp"

namespace vecchia::detail {

// Views into one observation's local problem; all blocks are dense with
// leading dimension k. Position k-1 holds the observation itself.
struct LocalView {
  std::size_t k = 0, d = 0, p = 0, np = 0;
  double* locsub = nullptr;  // k x d
  double* Xsub = nullptr;    // k x p, overwritten by W = B^{-1} Xsub
  double* ysub = nullptr;    // k, overwritten by z = B^{-1} ysub
  double* K = nullptr;       // k x k lower, overwritten by B
  double* D = nullptr;       // np blocks of k x k lower
  double* u = nullptr;       // k, B^{-T} e_{k-1}
  double* c = nullptr;       // np blocks of k, c_j = B^{-1} D_j u
};

struct Shape {
  std::size_t d, p, np;
};

inline Shape shape_of(const EngineProblem& problem) {
  const std::size_t d = problem.data.d();
  return {d, problem.data.p(), problem.family.nparms(d)};
}

// Neighbor row i is [i, nearest, ...]; it is gathered in reverse so the
// observation itself lands in the last position.
inline std::size_t source_row(const EngineProblem& problem, std::size_t i, std::size_t k,
                              std::size_t a) {
  return static_cast<std::size_t>(problem.neighbors.row(i)[k - 1 - a]);
}

inline void gather_entry(const EngineProblem& problem, std::size_t i, const LocalView& v,
                         std::size_t a) {
  const std::size_t src = source_row(problem, i, v.k, a);
  const double* loc = problem.data.locs.row(src).data();
  const double* x = problem.data.X.row(src).data();
  for (std::size_t c = 0; c < v.d; ++c) v.locsub[a * v.d + c] = loc[c];
  for (std::size_t c = 0; c < v.p; ++c) v.Xsub[a * v.p + c] = x[c];
  v.ysub[a] = problem.data.y[src];
}

inline void gather(const EngineProblem& problem, std::size_t i, const LocalView& v) {
  for (std::size_t a = 0; a < v.k; ++a) gather_entry(problem, i, v, a);
}

inline void covariance_entry(const EngineProblem& problem, const LocalView& v, std::size_t a,
                             std::size_t b) {
  double value = problem.family.entry(problem.theta.data(), v.locsub + a * v.d,
                                      v.locsub + b * v.d, v.d, a == b);
  if (a == b) value += problem.jitter;
  v.K[a * v.k + b] = value;
}

inline void derivative_entry(const EngineProblem& problem, const LocalView& v, std::size_t j,
                             std::size_t a, std::size_t b) {
  v.D[j * v.k * v.k + a * v.k + b] = problem.family.derivative_entry(
      problem.theta.data(), v.locsub + a * v.d, v.locsub + b * v.d, v.d, a == b, j);
}

inline void fill_covariance(const EngineProblem& problem, const LocalView& v) {
  for (std::size_t a = 0; a < v.k; ++a) {
    for (std::size_t b = 0; b <= a; ++b) covariance_entry(problem, v, a, b);
  }
}

inline void fill_derivatives(const EngineProblem& problem, const LocalView& v) {
  for (std::size_t j = 0; j < v.np; ++j) {
    for (std::size_t a = 0; a < v.k; ++a) {
      for (std::size_t b = 0; b <= a; ++b) derivative_entry(problem, v, j, a, b);
    }
  }
}

// Returns k on success, else the failing pivot.
inline std::size_t factor(const LocalView& v) {
  return linalg::cholesky_in_place(v.K, v.k, v.k);
}

inline void solve_response(const LocalView& v) {
  linalg::solve_lower_in_place(v.K, v.k, v.k, v.ysub);
  linalg::solve_lower_matrix_in_place(v.K, v.k, v.k, v.Xsub, v.p);
}

inline void solve_last_row(const LocalView& v) {
  for (std::size_t a = 0; a < v.k; ++a) v.u[a] = 0.0;
  v.u[v.k - 1] = 1.0;
  linalg::solve_upper_transpose_in_place(v.K, v.k, v.k, v.u);
}

inline void contract_derivatives(const LocalView& v) {
  for (std::size_t j = 0; j < v.np; ++j) {
    double* cj = v.c + j * v.k;
    linalg::symmetric_lower_matvec(v.D + j * v.k * v.k, v.k, v.k, v.u, cj);
    linalg::solve_lower_in_place(v.K, v.k, v.k, cj);
  }
}

// Writes the observation's contribution into `out` (layout.stride() doubles),
// overwriting it.
inline void emit(const LocalView& v, const PartsLayout& layout, double* out) {
  const std::size_t e = v.k - 1;
  const std::size_t p = v.p;
  const std::size_t np = v.np;
  const double ze = v.ysub[e];
  const double* We = v.Xsub + e * p;

  out[layout.logdet()] = 2.0 * std::log(v.K[e * v.k + e]);
  out[layout.ySy()] = ze * ze;
  double* XSX = out + layout.XSX();
  double* ySX = out + layout.ySX();
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) XSX[a * p + b] = We[a] * We[b];
    ySX[a] = ze * We[a];
  }

  double* dlogdet = out + layout.dlogdet();
  double* dySy = out + layout.dySy();
  double* dySX = out + layout.dySX();
  double* dXSX = out + layout.dXSX();
  double* ainfo = out + layout.ainfo();
  for (std::size_t j = 0; j < np; ++j) {
    const double* cj = v.c + j * v.k;
    const double cje = cj[e];
    double zc = 0.0;
    for (std::size_t a = 0; a < v.k; ++a) zc += v.ysub[a] * cj[a];

    dlogdet[j] = cje;
    dySy[j] = cje * ze * ze - 2.0 * ze * zc;

    // Wc = W^T c_j, accumulated in a fixed order per column
    for (std::size_t a = 0; a < p; ++a) {
      double wc = 0.0;
      for (std::size_t r = 0; r < v.k; ++r) wc += v.Xsub[r * p + a] * cj[r];
      dySX[a * np + j] = cje * ze * We[a] - ze * wc - zc * We[a];
      for (std::size_t b = 0; b < p; ++b) {
        double wcb = 0.0;
        for (std::size_t r = 0; r < v.k; ++r) wcb += v.Xsub[r * p + b] * cj[r];
        dXSX[(a * p + b) * np + j] = cje * We[a] * We[b] - wc * We[b] - We[a] * wcb;
      }
    }
  }
  for (std::size_t j = 0; j < np; ++j) {
    const double* cj = v.c + j * v.k;
    for (std::size_t l = 0; l <= j; ++l) {
      const double* cl = v.c + l * v.k;
      double s = 0.0;
      for (std::size_t a = 0; a < v.k; ++a) s += cj[a] * cl[a];
      s -= 0.5 * cj[e] * cl[e];
      ainfo[j * np + l] = s;
      ainfo[l * np + j] = s;
    }
  }
}

// Everything after the gather and fills: factor, solves, contractions, emit.
// Returns k on success or the failing pivot.
inline std::size_t finish_observation(const LocalView& v, const PartsLayout& layout,
                                      double* out) {
  const std::size_t status = factor(v);
  if (status != v.k) return status;
  solve_response(v);
  solve_last_row(v);
  contract_derivatives(v);
  emit(v, layout, out);
  return v.k;
}

inline std::size_t process_into(const EngineProblem& problem, std::size_t i, const LocalView& v,
                                const PartsLayout& layout, double* out) {
  gather(problem, i, v);
  fill_covariance(problem, v);
  fill_derivatives(problem, v);
  return finish_observation(v, layout, out);
}

// Heap scratch sized for the largest local problem.
class DynamicWorkspace {
 public:
  DynamicWorkspace(std::size_t capacity, const Shape& s)
      : capacity_(capacity),
        shape_(s),
        buffer_(capacity * (s.d + s.p + 1) + capacity * capacity * (1 + s.np) +
                capacity * (1 + s.np)) {}

  LocalView view(std::size_t k) {
    LocalView v{k, shape_.d, shape_.p, shape_.np};
    double* cursor = buffer_.data();
    auto take = [&](std::size_t count) {
      double* out = cursor;
      cursor += count;
      return out;
    };
    v.locsub = take(capacity_ * shape_.d);
    v.Xsub = take(capacity_ * shape_.p);
    v.ysub = take(capacity_);
    v.K = take(capacity_ * capacity_);
    v.D = take(capacity_ * capacity_ * shape_.np);
    v.u = take(capacity_);
    v.c = take(capacity_ * shape_.np);
    return v;
  }

 private:
  std::size_t capacity_;
  Shape shape_;
  std::vector<double> buffer_;
};

// Compile-time capacity scratch for the task backend. Bounds on d, p and
// nparms keep the footprint fixed; larger shapes fall back to heap scratch.
template <std::size_t Cap>
struct FixedWorkspace {
  static constexpr std::size_t kMaxDim = 4;
  static constexpr std::size_t kMaxP = 8;
  static constexpr std::size_t kMaxParms = 6;

  static bool fits(const Shape& s) {
    return s.d <= kMaxDim && s.p <= kMaxP && s.np <= kMaxParms;
  }

  std::array<double, Cap * kMaxDim> locsub;
  std::array<double, Cap * kMaxP> Xsub;
  std::array<double, Cap> ysub;
  std::array<double, Cap * Cap> K;
  std::array<double, Cap * Cap * kMaxParms> D;
  std::array<double, Cap> u;
  std::array<double, Cap * kMaxParms> c;

  LocalView view(std::size_t k, const Shape& s) {
    return {k, s.d, s.p, s.np, locsub.data(), Xsub.data(), ysub.data(),
            K.data(), D.data(), u.data(), c.data()};
  }
};

// Records the lowest failing observation across workers.
class FailureTracker {
 public:
  bool skip(std::size_t i) const noexcept {
    return i > first_.load(std::memory_order_relaxed);
  }

  void record(std::size_t i, std::size_t pivot) {
    std::lock_guard lock(mutex_);
    if (i < first_.load(std::memory_order_relaxed)) {
      first_.store(i, std::memory_order_relaxed);
      pivot_ = pivot;
    }
  }

  // Throws NotPositiveDefiniteError if anything failed.
  void rethrow() const;

 private:
  std::atomic<std::size_t> first_{static_cast<std::size_t>(-1)};
  std::size_t pivot_ = 0;
  std::mutex mutex_;
};

// Worker count: options.threads when positive, else the OpenMP default.
int resolve_threads(const EngineOptions& options);

// Head observations (k < m+1) on the calling thread, in order. Writes each
// contribution into `records` at row i when records is non-null, otherwise
// adds into `sum`. Throws on failure.
void process_head(const EngineProblem& problem, std::size_t head_end, const PartsLayout& layout,
                  double* records, VecchiaParts* sum);

// Tail passes: contributions for i in [begin, n) into records rows
// (row i at records + i * stride).
void run_task_backend(const EngineProblem& problem, std::size_t begin,
                      const EngineOptions& options, const PartsLayout& layout, double* records,
                      FailureTracker& failures);
void run_nested_backend(const EngineProblem& problem, std::size_t begin,
                        const EngineOptions& options, const PartsLayout& layout, double* records,
                        FailureTracker& failures);
void run_staged_backend(const EngineProblem& problem, std::size_t begin,
                        const EngineOptions& options, const PartsLayout& layout, double* records,
                        FailureTracker& failures);

}  // namespace vecchia::detail
