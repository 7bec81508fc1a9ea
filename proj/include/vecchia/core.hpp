#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vecchia {

// Dense row-major matrix of doubles. Rows are contiguous so a single
// observation's covariates or coordinates can be handed out as one span.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Response, design matrix and coordinates sharing one observation order.
struct Dataset {
  std::vector<double> y;
  Matrix X;
  Matrix locs;

  std::size_t n() const noexcept { return y.size(); }
  std::size_t p() const noexcept { return X.cols(); }
  std::size_t d() const noexcept { return locs.cols(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws DimensionMismatch, NonFiniteValue or EmptyData.
void validate_dataset(const Dataset& ds);

enum class CovarianceKind {
  ExponentialIsotropic,
  ExponentialAnisotropic,
  ExponentialSphere,
};

// theta layout: isotropic and sphere [sigma2, range, nugget];
// anisotropic [sigma2, range_1 .. range_d, nugget]. The nugget is relative:
// the noise variance is nugget * sigma2.
struct CovarianceParameters {
  CovarianceKind kind = CovarianceKind::ExponentialIsotropic;
  std::vector<double> theta;

  double sigma2() const { return theta.front(); }
  double nugget() const { return theta.back(); }
  std::size_t nparms() const noexcept { return theta.size(); }

  friend bool operator==(const CovarianceParameters&, const CovarianceParameters&) = default;
};

// Checks positivity (nugget may be zero) and the family arity for
// coordinates of dimension `d` (the dimension before any sphere embedding).
void validate_parameters(const CovarianceParameters& params, std::size_t d);

enum class Backend { Sequential, TaskPerObservation, Nested, StagedBatched };

std::string_view to_string(Backend backend);
// Accepts the CLI spellings (seq, task, nested, staged) and the long names.
Backend parse_backend(std::string_view name);

struct Ordering {
  // perm[new_position] = original index
  std::vector<std::size_t> perm;
};

struct OrderingSpec {
  enum class Kind { Identity, Random } kind = Kind::Random;
  std::uint64_t seed = 1;
};

struct ModelSpec {
  CovarianceParameters covariance;
  std::size_t m = 30;
  OrderingSpec ordering;
  Backend backend = Backend::TaskPerObservation;
};

// Named wall-clock durations in seconds, kept in insertion order.
struct PhaseTimings {
  std::vector<std::pair<std::string, double>> entries;

  void add(std::string name, double seconds);
  double get(std::string_view name) const;  // 0 when absent
  double total() const;
};

struct FitResult {
  CovarianceParameters theta_hat;
  std::vector<double> beta_hat;
  Matrix beta_cov;
  std::vector<double> loglik_trace;
  Matrix fisher_info;  // natural parameter scale
  std::vector<double> grad;
  std::size_t iterations = 0;
  bool converged = false;
  PhaseTimings phase_timings;
  // engine + assembly time inside the fit phase, and how many evaluations ran
  double evaluate_seconds = 0.0;
  std::size_t evaluations = 0;
};

}  // namespace vecchia
