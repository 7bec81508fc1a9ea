#include "vecchia/predict.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include <omp.h>

#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"
#include "vecchia/linalg.hpp"

namespace vecchia {

PredictionSet krige(const CovarianceParameters& params, std::span<const double> beta,
                    const Dataset& train, const Matrix& locs_star, const Matrix& X_star,
                    const KrigingOptions& options) {
  validate_dataset(train);
  const std::size_t n = train.n();
  const std::size_t p = train.p();
  const std::size_t q = locs_star.rows();
  if (beta.size() != p) fail(ErrorCode::DimensionMismatch, "beta length does not match X");
  if (X_star.rows() != q || X_star.cols() != p) {
    fail(ErrorCode::DimensionMismatch, "prediction covariates must be q x p");
  }
  if (locs_star.cols() != train.d()) {
    fail(ErrorCode::DimensionMismatch, "prediction locations have the wrong dimension");
  }
  if (options.m_pred < 1 || options.m_pred > n) {
    fail(ErrorCode::InvalidArgument, "m_pred must lie in [1, n] (n = " + std::to_string(n) + ")");
  }
  validate_parameters(params, train.d());

  const CovarianceFamily family(params.kind);
  const Matrix train_locs = family.prepare_locations(train.locs);
  const Matrix pred_locs = family.prepare_locations(locs_star);
  const std::size_t d = train_locs.cols();
  const std::size_t k = options.m_pred;
  const double* theta = params.theta.data();
  const double marginal = params.sigma2() * (options.latent ? 1.0 : 1.0 + params.nugget());

  std::vector<std::size_t> neighbors;
  if (options.search == NeighborSearch::KdTree) {
    neighbors = nearest_rows_batch(train_locs, pred_locs, k);
  }

  PredictionSet out;
  out.locs_star = locs_star;
  out.X_star = X_star;
  out.mean.assign(q, 0.0);
  if (options.compute_sd) out.sd.assign(q, 0.0);

  std::atomic<std::size_t> failed{q};
  std::atomic<std::size_t> failed_pivot{0};
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
  const auto sq = static_cast<std::ptrdiff_t>(q);
#pragma omp parallel num_threads(threads)
  {
    std::vector<double> K(k * k), kvec(k), resid(k), locsub(k * d);
    std::vector<std::size_t> nbrs;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t si = 0; si < sq; ++si) {
      const auto t = static_cast<std::size_t>(si);
      const double* z = pred_locs.row(t).data();
      if (options.search == NeighborSearch::KdTree) {
        nbrs.assign(neighbors.begin() + static_cast<std::ptrdiff_t>(t * k),
                    neighbors.begin() + static_cast<std::ptrdiff_t>((t + 1) * k));
      } else {
        nbrs = nearest_rows(train_locs, pred_locs.row(t), k);
      }
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t src = nbrs[a];
        std::copy_n(train_locs.row(src).data(), d, locsub.data() + a * d);
        double mean_a = 0.0;
        const auto x = train.X.row(src);
        for (std::size_t c = 0; c < p; ++c) mean_a += x[c] * beta[c];
        resid[a] = train.y[src] - mean_a;
        kvec[a] = family.cross(theta, z, locsub.data() + a * d, d);
      }
      family.fill_lower(theta, locsub.data(), k, d, K.data(), k);
      for (std::size_t a = 0; a < k; ++a) K[a * k + a] += options.jitter;
      const std::size_t status = linalg::cholesky_in_place(K.data(), k, k);
      if (status != k) {
        std::size_t expected = q;
        if (failed.compare_exchange_strong(expected, t)) failed_pivot = status;
        continue;
      }
      linalg::solve_lower_in_place(K.data(), k, k, kvec.data());
      linalg::solve_lower_in_place(K.data(), k, k, resid.data());
      double fitted = 0.0;
      for (std::size_t c = 0; c < p; ++c) fitted += X_star(t, c) * beta[c];
      double explained = 0.0;
      double correction = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        correction += kvec[a] * resid[a];
        explained += kvec[a] * kvec[a];
      }
      out.mean[t] = fitted + correction;
      if (options.compute_sd) {
        // cancellation below this level is rounding, not variance
        const double var = marginal - explained;
        out.sd[t] = var > 1e-12 * marginal ? std::sqrt(var) : 0.0;
      }
    }
  }
  if (failed.load() != q) {
    throw NotPositiveDefiniteError(NotPositiveDefiniteError::npos, failed_pivot.load(),
                                   "kriging neighbors of prediction point " +
                                       std::to_string(failed.load()));
  }
  return out;
}

PredictionSet krige(const FitResult& fit, const Dataset& train, const Matrix& locs_star,
                    const Matrix& X_star, const KrigingOptions& options) {
  return krige(fit.theta_hat, fit.beta_hat, train, locs_star, X_star, options);
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    fail(ErrorCode::LengthMismatch, "rmse: " + std::to_string(predicted.size()) + " vs " +
                                        std::to_string(actual.size()) + " values");
  }
  if (predicted.empty()) fail(ErrorCode::LengthMismatch, "rmse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double diff = predicted[i] - actual[i];
    s += diff * diff;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

}  // namespace vecchia
