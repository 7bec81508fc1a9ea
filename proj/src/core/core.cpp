#include "vecchia/core.hpp"

#include <cmath>
#include <string>

#include "vecchia/error.hpp"

namespace vecchia {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    fail(ErrorCode::DimensionMismatch,
         "matrix storage holds " + std::to_string(data_.size()) + " values, expected " +
             std::to_string(rows * cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix I(n, n);
  for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::NonFiniteValue,
           std::string("non-finite value in ") + what + " at flat index " + std::to_string(i));
    }
  }
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  const std::size_t n = ds.y.size();
  if (n == 0) fail(ErrorCode::EmptyData, "dataset has no observations");
  if (ds.X.rows() != n) {
    fail(ErrorCode::DimensionMismatch, "y has " + std::to_string(n) + " rows but X has " +
                                           std::to_string(ds.X.rows()));
  }
  if (ds.locs.rows() != n) {
    fail(ErrorCode::DimensionMismatch, "y has " + std::to_string(n) +
                                           " rows but locs has " + std::to_string(ds.locs.rows()));
  }
  if (ds.X.cols() == 0) fail(ErrorCode::DimensionMismatch, "design matrix has no columns");
  if (ds.locs.cols() == 0) fail(ErrorCode::DimensionMismatch, "locations have no columns");
  require_finite(ds.y, "y");
  require_finite(ds.X.values(), "X");
  require_finite(ds.locs.values(), "locs");
}

void validate_parameters(const CovarianceParameters& params, std::size_t d) {
  if (params.kind == CovarianceKind::ExponentialSphere && d != 2) {
    fail(ErrorCode::DimensionMismatch, "exponential_sphere expects lon/lat locations, got d=" +
                                           std::to_string(d));
  }
  const std::size_t expected =
      params.kind == CovarianceKind::ExponentialAnisotropic ? d + 2 : 3;
  if (params.theta.size() != expected) {
    fail(ErrorCode::InvalidArgument, "covariance family expects " + std::to_string(expected) +
                                         " parameters, got " +
                                         std::to_string(params.theta.size()));
  }
  for (std::size_t j = 0; j < params.theta.size(); ++j) {
    const double v = params.theta[j];
    const bool last = j + 1 == params.theta.size();
    if (!std::isfinite(v) || v < 0.0 || (!last && v == 0.0)) {
      fail(ErrorCode::InvalidArgument,
           "covariance parameter " + std::to_string(j) + " out of range: " + std::to_string(v));
    }
  }
}

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Sequential: return "seq";
    case Backend::TaskPerObservation: return "task";
    case Backend::Nested: return "nested";
    case Backend::StagedBatched: return "staged";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "seq" || name == "sequential") return Backend::Sequential;
  if (name == "task" || name == "task-per-observation") return Backend::TaskPerObservation;
  if (name == "nested") return Backend::Nested;
  if (name == "staged" || name == "staged-batched") return Backend::StagedBatched;
  fail(ErrorCode::InvalidArgument, "unknown backend '" + std::string(name) + "'");
}

void PhaseTimings::add(std::string name, double seconds) {
  for (auto& [key, value] : entries) {
    if (key == name) {
      value += seconds;
      return;
    }
  }
  entries.emplace_back(std::move(name), seconds);
}

double PhaseTimings::get(std::string_view name) const {
  for (const auto& [key, value] : entries) {
    if (key == name) return value;
  }
  return 0.0;
}

double PhaseTimings::total() const {
  double sum = 0.0;
  for (const auto& entry : entries) sum += entry.second;
  return sum;
}

}  // namespace vecchia
