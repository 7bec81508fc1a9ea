#include "vecchia/covariance.hpp"

#include <string>

#include "vecchia/error.hpp"
#include "vecchia/preprocess.hpp"

namespace vecchia {

std::string_view to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::ExponentialIsotropic: return "exponential_isotropic";
    case CovarianceKind::ExponentialAnisotropic: return "exponential_anisotropic";
    case CovarianceKind::ExponentialSphere: return "exponential_sphere";
  }
  return "unknown";
}

CovarianceKind parse_covariance_kind(std::string_view name) {
  if (name == "exponential_isotropic") return CovarianceKind::ExponentialIsotropic;
  if (name == "exponential_anisotropic") return CovarianceKind::ExponentialAnisotropic;
  if (name == "exponential_sphere") return CovarianceKind::ExponentialSphere;
  fail(ErrorCode::UnknownFamily, "unknown covariance family '" + std::string(name) + "'");
}

CovarianceFamily covariance_registry(std::string_view name) {
  return CovarianceFamily(parse_covariance_kind(name));
}

std::string_view CovarianceFamily::name() const noexcept { return to_string(kind_); }

std::size_t CovarianceFamily::arity(std::size_t d) const noexcept {
  return nparms(working_dim(d));
}

std::size_t CovarianceFamily::working_dim(std::size_t d) const noexcept {
  return embeds_sphere() ? 3 : d;
}

std::vector<std::string> CovarianceFamily::parameter_names(std::size_t d) const {
  std::vector<std::string> names{"sigma2"};
  if (kind_ == CovarianceKind::ExponentialAnisotropic) {
    for (std::size_t k = 0; k < d; ++k) names.push_back("range_" + std::to_string(k + 1));
  } else {
    names.emplace_back("range");
  }
  names.emplace_back("nugget");
  return names;
}

Matrix CovarianceFamily::prepare_locations(const Matrix& raw) const {
  if (embeds_sphere()) return embed_lonlat(raw);
  return raw;
}

namespace {

Matrix full_covariance(const CovarianceFamily& family, std::span<const double> theta,
                       const Matrix& locsub) {
  const std::size_t k = locsub.rows();
  const std::size_t d = locsub.cols();
  if (theta.size() != family.nparms(d)) {
    fail(ErrorCode::InvalidArgument, "parameter vector has wrong length for this family");
  }
  Matrix K(k, k);
  family.fill_lower(theta.data(), locsub.data(), k, d, K.data(), k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) K(a, b) = K(b, a);
  }
  return K;
}

}  // namespace

Matrix exponential_isotropic(std::span<const double> theta, const Matrix& locsub) {
  return full_covariance(CovarianceFamily(CovarianceKind::ExponentialIsotropic), theta, locsub);
}

Matrix exponential_anisotropic(std::span<const double> theta, const Matrix& locsub) {
  return full_covariance(CovarianceFamily(CovarianceKind::ExponentialAnisotropic), theta,
                         locsub);
}

std::vector<Matrix> d_exponential(std::span<const double> theta, const Matrix& locsub,
                                  CovarianceKind kind) {
  const CovarianceFamily family(kind);
  const std::size_t k = locsub.rows();
  const std::size_t d = locsub.cols();
  if (theta.size() != family.nparms(d)) {
    fail(ErrorCode::InvalidArgument, "parameter vector has wrong length for this family");
  }
  std::vector<Matrix> out;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    Matrix D(k, k);
    family.fill_derivative_lower(theta.data(), locsub.data(), k, d, j, D.data(), k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) D(a, b) = D(b, a);
    }
    out.push_back(std::move(D));
  }
  return out;
}

}  // namespace vecchia
