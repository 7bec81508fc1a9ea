#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "vecchia/error.hpp"
#include "vecchia/preprocess.hpp"
#include "vecchia/rng.hpp"

namespace vecchia {

Ordering identity_ordering(std::size_t n) {
  Ordering ord;
  ord.perm.resize(n);
  std::iota(ord.perm.begin(), ord.perm.end(), std::size_t{0});
  return ord;
}

Ordering random_permutation(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "random_permutation requires n >= 1");
  Ordering ord = identity_ordering(n);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(ord.perm[i], ord.perm[j]);
  }
  return ord;
}

Ordering make_ordering(const OrderingSpec& spec, std::size_t n) {
  if (spec.kind == OrderingSpec::Kind::Identity) return identity_ordering(n);
  return random_permutation(n, spec.seed);
}

Ordering inverse(const Ordering& ord) {
  Ordering inv;
  inv.perm.assign(ord.perm.size(), 0);
  for (std::size_t i = 0; i < ord.perm.size(); ++i) inv.perm[ord.perm[i]] = i;
  return inv;
}

Dataset reorder_dataset(const Dataset& ds, const Ordering& ord) {
  const std::size_t n = ds.n();
  if (ord.perm.size() != n) {
    fail(ErrorCode::LengthMismatch, "ordering has length " + std::to_string(ord.perm.size()) +
                                        " but dataset has " + std::to_string(n) + " rows");
  }
  Dataset out;
  out.y.resize(n);
  out.X = Matrix(n, ds.p());
  out.locs = Matrix(n, ds.d());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = ord.perm[i];
    if (src >= n) fail(ErrorCode::LengthMismatch, "ordering entry out of range");
    out.y[i] = ds.y[src];
    const auto xs = ds.X.row(src);
    std::copy(xs.begin(), xs.end(), out.X.row(i).begin());
    const auto ls = ds.locs.row(src);
    std::copy(ls.begin(), ls.end(), out.locs.row(i).begin());
  }
  return out;
}

std::array<double, 3> lonlat_to_xyz(double lon_deg, double lat_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
    fail(ErrorCode::LatitudeOutOfRange,
         "latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
  }
  constexpr double to_rad = std::numbers::pi / 180.0;
  const double lon = lon_deg * to_rad;
  const double lat = lat_deg * to_rad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

Matrix embed_lonlat(const Matrix& lonlat) {
  if (lonlat.cols() != 2) {
    fail(ErrorCode::DimensionMismatch, "sphere embedding expects 2 columns (lon, lat), got " +
                                           std::to_string(lonlat.cols()));
  }
  Matrix xyz(lonlat.rows(), 3);
  for (std::size_t i = 0; i < lonlat.rows(); ++i) {
    const auto p = lonlat_to_xyz(lonlat(i, 0), lonlat(i, 1));
    for (std::size_t c = 0; c < 3; ++c) xyz(i, c) = p[c];
  }
  return xyz;
}

}  // namespace vecchia
