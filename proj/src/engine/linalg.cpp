#include "vecchia/linalg.hpp"

#include <string>

#include "vecchia/error.hpp"

namespace vecchia::linalg {

namespace {

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + " requires a square matrix");
  }
}

}  // namespace

Matrix cholesky(const Matrix& A) {
  require_square(A, "cholesky");
  Matrix B = A;
  const std::size_t k = A.rows();
  const std::size_t status = cholesky_in_place(B.data(), k, k);
  if (status != k) throw NotPositiveDefiniteError(NotPositiveDefiniteError::npos, status);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) B(a, b) = 0.0;
  }
  return B;
}

std::vector<double> solve_lower(const Matrix& B, std::span<const double> rhs) {
  require_square(B, "solve_lower");
  if (rhs.size() != B.rows()) fail(ErrorCode::DimensionMismatch, "solve_lower: rhs length");
  std::vector<double> x(rhs.begin(), rhs.end());
  solve_lower_in_place(B.data(), B.rows(), B.cols(), x.data());
  return x;
}

Matrix solve_lower(const Matrix& B, const Matrix& rhs) {
  require_square(B, "solve_lower");
  if (rhs.rows() != B.rows()) fail(ErrorCode::DimensionMismatch, "solve_lower: rhs rows");
  Matrix X = rhs;
  solve_lower_matrix_in_place(B.data(), B.rows(), B.cols(), X.data(), X.cols());
  return X;
}

std::vector<double> solve_upper_transpose(const Matrix& B, std::span<const double> rhs) {
  require_square(B, "solve_upper_transpose");
  if (rhs.size() != B.rows()) {
    fail(ErrorCode::DimensionMismatch, "solve_upper_transpose: rhs length");
  }
  std::vector<double> x(rhs.begin(), rhs.end());
  solve_upper_transpose_in_place(B.data(), B.rows(), B.cols(), x.data());
  return x;
}

Matrix spd_inverse(const Matrix& A) {
  const Matrix B = cholesky(A);
  const std::size_t k = A.rows();
  Matrix inv(k, k);
  std::vector<double> e(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    solve_lower_in_place(B.data(), k, k, e.data());
    solve_upper_transpose_in_place(B.data(), k, k, e.data());
    for (std::size_t r = 0; r < k; ++r) inv(r, c) = e[r];
  }
  // symmetrize the rounding
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double v = 0.5 * (inv(a, b) + inv(b, a));
      inv(a, b) = v;
      inv(b, a) = v;
    }
  }
  return inv;
}

std::vector<double> spd_solve(const Matrix& A, std::span<const double> b) {
  const Matrix B = cholesky(A);
  std::vector<double> x = solve_lower(B, b);
  solve_upper_transpose_in_place(B.data(), B.rows(), B.cols(), x.data());
  return x;
}

}  // namespace vecchia::linalg
