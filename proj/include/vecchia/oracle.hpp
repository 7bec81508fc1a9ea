#pragma once

// Dense exact-GP reference computations. They share no numerical code with
// the engine: covariances are re-derived from the closed forms and all
// factorizations go through Eigen.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "vecchia/core.hpp"

namespace vecchia::oracle {

inline constexpr std::size_t kMaxDenseSize = 5000;

struct DenseEvaluation {
  double loglik = 0.0;
  std::vector<double> beta_hat;
  std::vector<double> grad;  // finite differences, filled on request
};

// Full covariance of the rows of `locs` (raw coordinates; lon/lat for the
// sphere family), nugget on the diagonal.
Matrix dense_covariance(const CovarianceParameters& params, const Matrix& locs);

// Exact profiled Gaussian log-likelihood with GLS mean. Throws
// NotPositiveDefinite and SizeGuardExceeded.
DenseEvaluation dense_loglik_profiled(const CovarianceParameters& params, const Dataset& ds,
                                      bool with_gradient = false);

// Central differences with step h_rel * theta_j per coordinate.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, double h_rel = 1e-6);

// Factor Sigma once and draw many fields y = X beta + L xi.
class GpSimulator {
 public:
  GpSimulator(const CovarianceParameters& params, const Matrix& locs);
  ~GpSimulator();
  GpSimulator(GpSimulator&&) noexcept;
  GpSimulator& operator=(GpSimulator&&) noexcept;

  std::vector<double> draw(std::span<const double> beta, const Matrix& X,
                           std::uint64_t seed) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> simulate_gp(const CovarianceParameters& params, std::span<const double> beta,
                                const Matrix& locs, const Matrix& X, std::uint64_t seed);

// Draw from the Vecchia approximation of the response distribution itself:
// observations are generated in row order, each conditioned on its m nearest
// predecessors. Exact when m >= n - 1; used where a dense draw is too large.
std::vector<double> simulate_vecchia(const CovarianceParameters& params,
                                     std::span<const double> beta, const Matrix& locs,
                                     const Matrix& X, std::size_t m, std::uint64_t seed);

// Exact conditional mean and variance of new observations given all of the
// training data, with the GLS mean plugged in as `beta`.
struct DenseConditional {
  std::vector<double> mean;
  std::vector<double> variance;
};
DenseConditional dense_conditional(const CovarianceParameters& params,
                                   std::span<const double> beta, const Dataset& train,
                                   const Matrix& locs_star, const Matrix& X_star,
                                   bool latent = false);

}  // namespace vecchia::oracle
