#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vecchia/core.hpp"

namespace vecchia {

// Exponential covariance family handle. Entry functions are the single source
// of every covariance value in the library: whole-matrix fills, the parallel
// per-entry fills of the nested backend and the kriging cross covariances all
// call them, so every path produces identical bits.
class CovarianceFamily {
 public:
  explicit CovarianceFamily(CovarianceKind kind) : kind_(kind) {}

  CovarianceKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  // Parameter count for raw input coordinates of dimension d.
  std::size_t arity(std::size_t d) const noexcept;
  // Dimension of the coordinates the evaluators see (3 after sphere embedding).
  std::size_t working_dim(std::size_t d) const noexcept;
  bool embeds_sphere() const noexcept { return kind_ == CovarianceKind::ExponentialSphere; }
  std::vector<std::string> parameter_names(std::size_t d) const;

  // Maps raw coordinates to the space the covariance is evaluated in.
  Matrix prepare_locations(const Matrix& raw) const;

  // Covariance between two working-space points. `same` selects the diagonal
  // (observation with itself), which carries the nugget.
  double entry(const double* theta, const double* za, const double* zb, std::size_t d,
               bool same) const noexcept {
    if (same) return theta[0] * (1.0 + theta[nparms(d) - 1]);
    return theta[0] * std::exp(-scaled_distance(theta, za, zb, d));
  }

  // Cross covariance without nugget, for kriging.
  double cross(const double* theta, const double* za, const double* zb,
               std::size_t d) const noexcept {
    return theta[0] * std::exp(-scaled_distance(theta, za, zb, d));
  }

  // d entry / d theta[j].
  double derivative_entry(const double* theta, const double* za, const double* zb, std::size_t d,
                          bool same, std::size_t j) const noexcept {
    const std::size_t np = nparms(d);
    if (j == 0) {
      if (same) return 1.0 + theta[np - 1];
      return std::exp(-scaled_distance(theta, za, zb, d));
    }
    if (j == np - 1) return same ? theta[0] : 0.0;
    if (same) return 0.0;
    if (kind_ == CovarianceKind::ExponentialAnisotropic) {
      const double s = scaled_distance(theta, za, zb, d);
      if (s == 0.0) return 0.0;
      const std::size_t k = j - 1;
      const double diff = za[k] - zb[k];
      const double rho = theta[j];
      return theta[0] * std::exp(-s) * (diff * diff / (rho * rho * rho)) / s;
    }
    const double rho = theta[1];
    const double r = std::sqrt(squared(za, zb, d));
    return theta[0] * std::exp(-r / rho) * r / (rho * rho);
  }

  std::size_t nparms(std::size_t working_d) const noexcept {
    return kind_ == CovarianceKind::ExponentialAnisotropic ? working_d + 2 : 3;
  }

  // Lower triangle of the k x k covariance of the rows of `z` (k x d,
  // row-major) into `K` with leading dimension ld; upper triangle untouched.
  void fill_lower(const double* theta, const double* z, std::size_t k, std::size_t d, double* K,
                  std::size_t ld) const noexcept {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        K[a * ld + b] = entry(theta, z + a * d, z + b * d, d, a == b);
      }
    }
  }

  void fill_derivative_lower(const double* theta, const double* z, std::size_t k, std::size_t d,
                             std::size_t j, double* D, std::size_t ld) const noexcept {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        D[a * ld + b] = derivative_entry(theta, z + a * d, z + b * d, d, a == b, j);
      }
    }
  }

 private:
  static double squared(const double* za, const double* zb, std::size_t d) noexcept {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = za[c] - zb[c];
      s += diff * diff;
    }
    return s;
  }

  double scaled_distance(const double* theta, const double* za, const double* zb,
                         std::size_t d) const noexcept {
    if (kind_ == CovarianceKind::ExponentialAnisotropic) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = (za[c] - zb[c]) / theta[c + 1];
        s += diff * diff;
      }
      return std::sqrt(s);
    }
    return std::sqrt(squared(za, zb, d)) / theta[1];
  }

  CovarianceKind kind_;
};

// Family lookup by CLI name: exponential_isotropic, exponential_anisotropic,
// exponential_sphere. Throws UnknownFamily otherwise.
CovarianceFamily covariance_registry(std::string_view name);
CovarianceKind parse_covariance_kind(std::string_view name);
std::string_view to_string(CovarianceKind kind);

// Full symmetric matrices for tests and small problems.
Matrix exponential_isotropic(std::span<const double> theta, const Matrix& locsub);
Matrix exponential_anisotropic(std::span<const double> theta, const Matrix& locsub);
// One matrix per parameter: D[j] = dK / dtheta_j (full symmetric).
std::vector<Matrix> d_exponential(std::span<const double> theta, const Matrix& locsub,
                                  CovarianceKind kind);

}  // namespace vecchia
