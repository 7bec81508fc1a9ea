#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/core.hpp"

namespace vecchia::linalg {

// Small dense kernels on row-major storage with leading dimension ld. Only
// the lower triangle of the input is read. These run inside parallel
// regions, so failure is reported through the return value.

// In-place lower Cholesky factor. Returns k on success, otherwise the index
// of the first pivot that was not strictly positive.
inline std::size_t cholesky_in_place(double* A, std::size_t k, std::size_t ld) noexcept {
  for (std::size_t i = 0; i < k; ++i) {
    double* Ai = A + i * ld;
    for (std::size_t j = 0; j < i; ++j) {
      const double* Aj = A + j * ld;
      double s = Ai[j];
      for (std::size_t t = 0; t < j; ++t) s -= Ai[t] * Aj[t];
      Ai[j] = s / Aj[j];
    }
    double s = Ai[i];
    for (std::size_t t = 0; t < i; ++t) s -= Ai[t] * Ai[t];
    if (!(s > 0.0)) return i;
    Ai[i] = std::sqrt(s);
  }
  return k;
}

// x <- B^{-1} x
inline void solve_lower_in_place(const double* B, std::size_t k, std::size_t ld,
                                 double* x) noexcept {
  for (std::size_t i = 0; i < k; ++i) {
    const double* Bi = B + i * ld;
    double s = x[i];
    for (std::size_t t = 0; t < i; ++t) s -= Bi[t] * x[t];
    x[i] = s / Bi[i];
  }
}

// X <- B^{-1} X for a k x cols row-major block (column-by-column substitution).
inline void solve_lower_matrix_in_place(const double* B, std::size_t k, std::size_t ld,
                                        double* X, std::size_t cols) noexcept {
  for (std::size_t i = 0; i < k; ++i) {
    const double* Bi = B + i * ld;
    double* Xi = X + i * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      double s = Xi[c];
      for (std::size_t t = 0; t < i; ++t) s -= Bi[t] * X[t * cols + c];
      Xi[c] = s / Bi[i];
    }
  }
}

// x <- B^{-T} x
inline void solve_upper_transpose_in_place(const double* B, std::size_t k, std::size_t ld,
                                           double* x) noexcept {
  for (std::size_t ii = k; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t t = ii + 1; t < k; ++t) s -= B[t * ld + ii] * x[t];
    x[ii] = s / B[ii * ld + ii];
  }
}

// out <- S v where S is symmetric with only its lower triangle stored.
inline void symmetric_lower_matvec(const double* S, std::size_t k, std::size_t ld,
                                   const double* v, double* out) noexcept {
  for (std::size_t a = 0; a < k; ++a) {
    const double* Sa = S + a * ld;
    double s = 0.0;
    for (std::size_t b = 0; b <= a; ++b) s += Sa[b] * v[b];
    for (std::size_t b = a + 1; b < k; ++b) s += S[b * ld + a] * v[b];
    out[a] = s;
  }
}

// Matrix-level wrappers; these throw NotPositiveDefiniteError.
Matrix cholesky(const Matrix& A);
std::vector<double> solve_lower(const Matrix& B, std::span<const double> rhs);
Matrix solve_lower(const Matrix& B, const Matrix& rhs);
std::vector<double> solve_upper_transpose(const Matrix& B, std::span<const double> rhs);

// Inverse of a symmetric positive definite matrix through its Cholesky factor.
Matrix spd_inverse(const Matrix& A);
// Solves A x = b for symmetric positive definite A.
std::vector<double> spd_solve(const Matrix& A, std::span<const double> b);

}  // namespace vecchia::linalg
