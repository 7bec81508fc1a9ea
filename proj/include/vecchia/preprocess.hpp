#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vecchia/core.hpp"

namespace vecchia {

// Ordered conditioning sets. Row i lists i itself followed by its nearest
// predecessors (positions < i) in increasing distance, ties broken by the
// smaller index. Rows of the first m observations are padded with -1.
class NeighborArray {
 public:
  static constexpr std::int64_t kSentinel = -1;

  NeighborArray() = default;
  NeighborArray(std::size_t n, std::size_t m)
      : n_(n), m_(m), idx_(n * (m + 1), kSentinel) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t width() const noexcept { return m_ + 1; }

  std::span<std::int64_t> row(std::size_t i) { return {idx_.data() + i * width(), width()}; }
  std::span<const std::int64_t> row(std::size_t i) const {
    return {idx_.data() + i * width(), width()};
  }
  // number of non-sentinel entries in row i
  std::size_t count(std::size_t i) const;

  const std::vector<std::int64_t>& values() const noexcept { return idx_; }

  friend bool operator==(const NeighborArray&, const NeighborArray&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::int64_t> idx_;
};

// Checks every structural invariant (self first, predecessors only, unique,
// row counts); throws InvalidArgument describing the first violation.
void validate_neighbor_array(const NeighborArray& nn);

// Fisher-Yates driven by vecchia::Rng (mt19937_64 + Lemire bounded draws).
Ordering random_permutation(std::size_t n, std::uint64_t seed);
Ordering identity_ordering(std::size_t n);
Ordering make_ordering(const OrderingSpec& spec, std::size_t n);
Ordering inverse(const Ordering& ord);

Dataset reorder_dataset(const Dataset& ds, const Ordering& ord);

// Unit-sphere embedding of longitude/latitude in degrees.
std::array<double, 3> lonlat_to_xyz(double lon_deg, double lat_deg);
// Applies lonlat_to_xyz to every row of an n x 2 (lon, lat) matrix.
Matrix embed_lonlat(const Matrix& lonlat);

enum class NeighborSearch { Exhaustive, KdTree };

// Reference O(n^2 d) scan; parallel over rows.
NeighborArray find_ordered_neighbors_exhaustive(const Matrix& locs, std::size_t m);
// kd-tree with subtree minimum-index pruning; same output as the scan.
NeighborArray find_ordered_neighbors_kdtree(const Matrix& locs, std::size_t m);
NeighborArray find_ordered_neighbors(const Matrix& locs, std::size_t m,
                                     NeighborSearch method = NeighborSearch::KdTree);

// Unordered k nearest rows of `locs` to `query` (distance, then index),
// exhaustive scan. Used for kriging.
std::vector<std::size_t> nearest_rows(const Matrix& locs, std::span<const double> query,
                                      std::size_t k);

// Row-major q x k table: the k nearest rows of `locs` to each row of
// `queries`, via the kd-tree; identical to nearest_rows per query.
std::vector<std::size_t> nearest_rows_batch(const Matrix& locs, const Matrix& queries,
                                            std::size_t k);

// Squared Euclidean distance with a fixed summation order; every neighbor
// search routes through this so tie-breaking is reproducible.
inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

// CSV cache: one row per observation, no header, sentinels kept as -1.
void write_neighbor_csv(const NeighborArray& nn, const std::filesystem::path& path);
NeighborArray read_neighbor_csv(const std::filesystem::path& path);

}  // namespace vecchia
