#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/core.hpp"
#include "vecchia/preprocess.hpp"

namespace vecchia {

struct PredictionSet {
  Matrix locs_star;
  Matrix X_star;
  std::vector<double> mean;
  std::vector<double> sd;  // empty when not requested
};

struct KrigingOptions {
  std::size_t m_pred = 60;
  // Predict the latent field (variance without the nugget) instead of a new
  // noisy observation.
  bool latent = false;
  bool compute_sd = true;
  double jitter = 0.0;
  NeighborSearch search = NeighborSearch::KdTree;
  int threads = 0;
};

// Independent nearest-neighbor kriging of every row of locs_star. Training
// and prediction coordinates are raw (lon/lat for exponential_sphere); the
// family's embedding is applied here.
PredictionSet krige(const CovarianceParameters& params, std::span<const double> beta,
                    const Dataset& train, const Matrix& locs_star, const Matrix& X_star,
                    const KrigingOptions& options = {});

PredictionSet krige(const FitResult& fit, const Dataset& train, const Matrix& locs_star,
                    const Matrix& X_star, const KrigingOptions& options = {});

// Throws LengthMismatch.
double rmse(std::span<const double> predicted, std::span<const double> actual);

}  // namespace vecchia
