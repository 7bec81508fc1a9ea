#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "vecchia/covariance.hpp"
#include "vecchia/core.hpp"
#include "vecchia/oracle.hpp"
#include "vecchia/preprocess.hpp"
#include "vecchia/rng.hpp"

namespace vecchia::testing {

inline Matrix random_locs(Rng& rng, std::size_t n, std::size_t d, double scale = 1.0) {
  Matrix locs(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) locs(i, c) = scale * rng.uniform01();
  }
  return locs;
}

inline Matrix random_lonlat(Rng& rng, std::size_t n) {
  Matrix locs(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    locs(i, 0) = rng.uniform(-180.0, 180.0);
    locs(i, 1) = std::asin(rng.uniform(-1.0, 1.0)) * 180.0 / std::numbers::pi;
  }
  return locs;
}

// Column 0 is the intercept.
inline Matrix random_design(Rng& rng, std::size_t n, std::size_t p) {
  Matrix X(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t c = 1; c < p; ++c) X(i, c) = rng.normal();
  }
  return X;
}

inline CovarianceParameters random_params(Rng& rng, CovarianceKind kind, std::size_t d) {
  const CovarianceFamily family(kind);
  CovarianceParameters params{kind, {}};
  params.theta.push_back(rng.uniform(0.5, 3.0));
  for (std::size_t j = 1; j + 1 < family.arity(d); ++j) params.theta.push_back(rng.uniform(0.1, 0.5));
  params.theta.push_back(rng.uniform(0.02, 0.5));
  return params;
}

inline std::vector<double> random_beta(Rng& rng, std::size_t p) {
  std::vector<double> beta(p);
  for (auto& b : beta) b = rng.uniform(-1.0, 1.0);
  return beta;
}

// Raw-coordinate dataset with a dense GP draw.
inline Dataset simulated_dataset(const CovarianceParameters& params, std::size_t n, std::size_t p,
                                 std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.locs = params.kind == CovarianceKind::ExponentialSphere ? random_lonlat(rng, n)
                                                              : random_locs(rng, n, d);
  ds.X = random_design(rng, n, p);
  const auto beta = random_beta(rng, p);
  ds.y = oracle::simulate_gp(params, beta, ds.locs, ds.X, rng.next());
  return ds;
}

// Working-space copy of `raw` with its neighbor array (identity order).
struct Prepared {
  Dataset data;
  NeighborArray nn;
};

inline Prepared prepare(const Dataset& raw, CovarianceKind kind, std::size_t m) {
  Prepared out;
  out.data = raw;
  out.data.locs = CovarianceFamily(kind).prepare_locations(raw.locs);
  out.nn = find_ordered_neighbors(out.data.locs, m);
  return out;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace vecchia::testing
