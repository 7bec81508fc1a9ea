#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vecchia/core.hpp"
#include "vecchia/covariance.hpp"
#include "vecchia/preprocess.hpp"

namespace vecchia {

// Offsets of each accumulator inside one flat record of `stride()` doubles.
// dySX is p x nparms, dXSX is p x p x nparms and ainfo nparms x nparms,
// all row-major with the parameter index fastest.
struct PartsLayout {
  std::size_t p = 0;
  std::size_t nparms = 0;

  friend bool operator==(const PartsLayout&, const PartsLayout&) = default;

  std::size_t logdet() const noexcept { return 0; }
  std::size_t ySy() const noexcept { return 1; }
  std::size_t XSX() const noexcept { return 2; }
  std::size_t ySX() const noexcept { return XSX() + p * p; }
  std::size_t dlogdet() const noexcept { return ySX() + p; }
  std::size_t dySy() const noexcept { return dlogdet() + nparms; }
  std::size_t dySX() const noexcept { return dySy() + nparms; }
  std::size_t dXSX() const noexcept { return dySX() + p * nparms; }
  std::size_t ainfo() const noexcept { return dXSX() + p * p * nparms; }
  std::size_t stride() const noexcept { return ainfo() + nparms * nparms; }
};

// Accumulated per-observation quantities. A single observation's
// contribution uses the same type.
class VecchiaParts {
 public:
  VecchiaParts() = default;
  explicit VecchiaParts(PartsLayout layout)
      : layout_(layout), data_(layout.stride(), 0.0) {}

  const PartsLayout& layout() const noexcept { return layout_; }
  std::size_t p() const noexcept { return layout_.p; }
  std::size_t nparms() const noexcept { return layout_.nparms; }

  double logdet() const { return data_[layout_.logdet()]; }
  double ySy() const { return data_[layout_.ySy()]; }
  double XSX(std::size_t a, std::size_t b) const { return data_[layout_.XSX() + a * p() + b]; }
  double ySX(std::size_t a) const { return data_[layout_.ySX() + a]; }
  double dlogdet(std::size_t j) const { return data_[layout_.dlogdet() + j]; }
  double dySy(std::size_t j) const { return data_[layout_.dySy() + j]; }
  double dySX(std::size_t a, std::size_t j) const {
    return data_[layout_.dySX() + a * nparms() + j];
  }
  double dXSX(std::size_t a, std::size_t b, std::size_t j) const {
    return data_[layout_.dXSX() + (a * p() + b) * nparms() + j];
  }
  double ainfo(std::size_t j, std::size_t l) const {
    return data_[layout_.ainfo() + j * nparms() + l];
  }

  std::span<double> raw() noexcept { return data_; }
  std::span<const double> raw() const noexcept { return data_; }

  VecchiaParts& operator+=(const VecchiaParts& other);

  friend bool operator==(const VecchiaParts&, const VecchiaParts&) = default;

 private:
  PartsLayout layout_;
  std::vector<double> data_;
};

using ObservationContribution = VecchiaParts;

// Engine inputs. `data.locs` must already be in the covariance family's
// working space (sphere-embedded for exponential_sphere) and in the same
// order as the neighbor array.
struct EngineProblem {
  const Dataset& data;
  const NeighborArray& neighbors;
  CovarianceFamily family;
  std::span<const double> theta;
  double jitter = 0.0;  // added to every local covariance diagonal
};

struct EngineOptions {
  Backend backend = Backend::TaskPerObservation;
  bool deterministic = false;
  // Fixed scratch capacity for the task backend: 0 picks the smallest of
  // {8, 16, 32, 64} holding m+1; larger problems use heap scratch.
  std::size_t capacity_tier = 0;
  int threads = 0;             // 0: OpenMP default
  std::size_t nested_lanes = 0;  // lanes per observation team, 0: auto
  std::size_t staged_batch = 0;  // observations per staged batch, 0: auto
};

inline constexpr std::size_t kCapacityTiers[] = {8, 16, 32, 64};

// Smallest tier holding m+1 entries, or 0 when none does.
std::size_t auto_capacity_tier(std::size_t m);

// One observation's contribution; throws NotPositiveDefiniteError.
ObservationContribution process_observation(std::size_t i, const EngineProblem& problem);

// Sum of all contributions. Throws NotPositiveDefiniteError for the lowest
// failing observation. With deterministic=true every backend returns
// bit-identical results.
VecchiaParts run(const EngineProblem& problem, const EngineOptions& options = {});

// Fixed-order pairwise reduction of n contiguous records of `stride` doubles.
// Overwrites `records`; the sum ends in the first record.
void reduce_pairwise_in_place(std::span<double> records, std::size_t n, std::size_t stride);

}  // namespace vecchia
