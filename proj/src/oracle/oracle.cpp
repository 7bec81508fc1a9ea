#include "vecchia/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "vecchia/error.hpp"
#include "vecchia/preprocess.hpp"
#include "vecchia/rng.hpp"

namespace vecchia::oracle {

namespace {

using EMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EVector = Eigen::VectorXd;

void guard(std::size_t n) {
  if (n > kMaxDenseSize) {
    fail(ErrorCode::SizeGuardExceeded, "dense oracle limited to n <= " +
                                           std::to_string(kMaxDenseSize) + ", got " +
                                           std::to_string(n));
  }
}

EMatrix to_eigen(const Matrix& m) {
  EMatrix out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    }
  }
  return out;
}

// Coordinates the covariance is evaluated on; the sphere embedding is
// written out again here rather than borrowed from preprocess.
EMatrix working_coordinates(const CovarianceParameters& params, const Matrix& locs) {
  if (params.kind != CovarianceKind::ExponentialSphere) return to_eigen(locs);
  EMatrix xyz(static_cast<Eigen::Index>(locs.rows()), 3);
  for (std::size_t i = 0; i < locs.rows(); ++i) {
    const double lon = locs(i, 0) * std::numbers::pi / 180.0;
    const double lat = locs(i, 1) * std::numbers::pi / 180.0;
    const auto r = static_cast<Eigen::Index>(i);
    xyz(r, 0) = std::cos(lat) * std::cos(lon);
    xyz(r, 1) = std::cos(lat) * std::sin(lon);
    xyz(r, 2) = std::sin(lat);
  }
  return xyz;
}

double scaled_distance(const CovarianceParameters& params, const EMatrix& z, Eigen::Index a,
                       const EMatrix& w, Eigen::Index b) {
  const auto diff = (z.row(a) - w.row(b)).eval();
  if (params.kind == CovarianceKind::ExponentialAnisotropic) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < diff.size(); ++c) {
      const double t = diff(c) / params.theta[static_cast<std::size_t>(c) + 1];
      s += t * t;
    }
    return std::sqrt(s);
  }
  return diff.norm() / params.theta[1];
}

EMatrix covariance_eigen(const CovarianceParameters& params, const EMatrix& z) {
  const Eigen::Index n = z.rows();
  EMatrix S(n, n);
  const double sigma2 = params.theta.front();
  const double nugget = params.theta.back();
  for (Eigen::Index a = 0; a < n; ++a) {
    S(a, a) = sigma2 * (1.0 + nugget);
    for (Eigen::Index b = 0; b < a; ++b) {
      const double v = sigma2 * std::exp(-scaled_distance(params, z, a, z, b));
      S(a, b) = v;
      S(b, a) = v;
    }
  }
  return S;
}

Eigen::LLT<EMatrix> factor(const EMatrix& S, const char* what) {
  Eigen::LLT<EMatrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError(NotPositiveDefiniteError::npos, 0, what);
  }
  return llt;
}

}  // namespace

Matrix dense_covariance(const CovarianceParameters& params, const Matrix& locs) {
  guard(locs.rows());
  const EMatrix S = covariance_eigen(params, working_coordinates(params, locs));
  Matrix out(locs.rows(), locs.rows());
  for (std::size_t a = 0; a < locs.rows(); ++a) {
    for (std::size_t b = 0; b < locs.rows(); ++b) {
      out(a, b) = S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

DenseEvaluation dense_loglik_profiled(const CovarianceParameters& params, const Dataset& ds,
                                      bool with_gradient) {
  const std::size_t n = ds.n();
  guard(n);
  const EMatrix S = covariance_eigen(params, working_coordinates(params, ds.locs));
  const auto llt = factor(S, "dense covariance");
  const EMatrix X = to_eigen(ds.X);
  const EVector y = Eigen::Map<const EVector>(ds.y.data(), static_cast<Eigen::Index>(n));

  const EMatrix SiX = llt.solve(X);
  const EVector Siy = llt.solve(y);
  const EMatrix XSX = X.transpose() * SiX;
  const EVector XSy = X.transpose() * Siy;
  const EVector beta = XSX.ldlt().solve(XSy);
  const EVector r = y - X * beta;
  const double quad = r.dot(llt.solve(r));
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  DenseEvaluation out;
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
  out.beta_hat.assign(beta.data(), beta.data() + beta.size());
  if (with_gradient) {
    out.grad = fd_gradient(
        [&](std::span<const double> theta) {
          CovarianceParameters shifted = params;
          shifted.theta.assign(theta.begin(), theta.end());
          return dense_loglik_profiled(shifted, ds, false).loglik;
        },
        params.theta);
  }
  return out;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, double h_rel) {
  std::vector<double> grad(theta.size());
  std::vector<double> point(theta.begin(), theta.end());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double h = h_rel * theta[j];
    point[j] = theta[j] + h;
    const double up = f(point);
    point[j] = theta[j] - h;
    const double down = f(point);
    point[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct GpSimulator::Impl {
  EMatrix lower;
};

GpSimulator::GpSimulator(const CovarianceParameters& params, const Matrix& locs)
    : impl_(std::make_unique<Impl>()) {
  guard(locs.rows());
  const EMatrix S = covariance_eigen(params, working_coordinates(params, locs));
  impl_->lower = factor(S, "simulation covariance").matrixL();
}

GpSimulator::~GpSimulator() = default;
GpSimulator::GpSimulator(GpSimulator&&) noexcept = default;
GpSimulator& GpSimulator::operator=(GpSimulator&&) noexcept = default;

std::vector<double> GpSimulator::draw(std::span<const double> beta, const Matrix& X,
                                      std::uint64_t seed) const {
  const auto n = impl_->lower.rows();
  if (static_cast<Eigen::Index>(X.rows()) != n || X.cols() != beta.size()) {
    fail(ErrorCode::DimensionMismatch, "simulation design does not match locations/beta");
  }
  Rng rng(seed);
  EVector xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal();
  const EVector field = impl_->lower.triangularView<Eigen::Lower>() * xi;
  std::vector<double> y(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < y.size(); ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) mean += X(i, c) * beta[c];
    y[i] = mean + field(static_cast<Eigen::Index>(i));
  }
  return y;
}

std::vector<double> simulate_gp(const CovarianceParameters& params, std::span<const double> beta,
                                const Matrix& locs, const Matrix& X, std::uint64_t seed) {
  return GpSimulator(params, locs).draw(beta, X, seed);
}

std::vector<double> simulate_vecchia(const CovarianceParameters& params,
                                     std::span<const double> beta, const Matrix& locs,
                                     const Matrix& X, std::size_t m, std::uint64_t seed) {
  const std::size_t n = locs.rows();
  if (X.rows() != n || X.cols() != beta.size()) {
    fail(ErrorCode::DimensionMismatch, "simulation design does not match locations/beta");
  }
  const EMatrix z = working_coordinates(params, locs);
  Matrix zm(n, static_cast<std::size_t>(z.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < zm.cols(); ++c) {
      zm(i, c) = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
  }
  const NeighborArray nn = find_ordered_neighbors(zm, std::min(m, n ? n - 1 : 0));
  const double sigma2 = params.theta.front();
  const double marginal = sigma2 * (1.0 + params.theta.back());

  Rng rng(seed);
  std::vector<double> field(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = nn.row(i);
    const auto k = static_cast<Eigen::Index>(nn.count(i) - 1);
    double mean = 0.0;
    double var = marginal;
    if (k > 0) {
      EMatrix S(k, k);
      EVector c(k);
      EVector prev(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        const auto ia = static_cast<Eigen::Index>(row[static_cast<std::size_t>(a) + 1]);
        c(a) = sigma2 * std::exp(-scaled_distance(params, z, static_cast<Eigen::Index>(i), z, ia));
        prev(a) = field[static_cast<std::size_t>(ia)];
        S(a, a) = marginal;
        for (Eigen::Index b = 0; b < a; ++b) {
          const auto ib = static_cast<Eigen::Index>(row[static_cast<std::size_t>(b) + 1]);
          S(a, b) = S(b, a) = sigma2 * std::exp(-scaled_distance(params, z, ia, z, ib));
        }
      }
      const auto llt = factor(S, "conditioning covariance");
      const EVector w = llt.solve(c);
      mean = w.dot(prev);
      var = marginal - w.dot(c);
    }
    field[i] = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < beta.size(); ++c) field[i] += X(i, c) * beta[c];
  }
  return field;
}

DenseConditional dense_conditional(const CovarianceParameters& params,
                                   std::span<const double> beta, const Dataset& train,
                                   const Matrix& locs_star, const Matrix& X_star, bool latent) {
  const std::size_t n = train.n();
  guard(n);
  const EMatrix z = working_coordinates(params, train.locs);
  const EMatrix w = working_coordinates(params, locs_star);
  const EMatrix S = covariance_eigen(params, z);
  const auto llt = factor(S, "dense covariance");

  EVector resid(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) mean += train.X(i, c) * beta[c];
    resid(static_cast<Eigen::Index>(i)) = train.y[i] - mean;
  }
  const EVector alpha = llt.solve(resid);
  const double sigma2 = params.theta.front();
  const double marginal = sigma2 * (latent ? 1.0 : 1.0 + params.theta.back());

  DenseConditional out;
  for (std::size_t t = 0; t < locs_star.rows(); ++t) {
    EVector k(static_cast<Eigen::Index>(n));
    for (Eigen::Index a = 0; a < k.size(); ++a) {
      k(a) = sigma2 * std::exp(-scaled_distance(params, w, static_cast<Eigen::Index>(t), z, a));
    }
    double mean = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) mean += X_star(t, c) * beta[c];
    out.mean.push_back(mean + k.dot(alpha));
    out.variance.push_back(marginal - k.dot(llt.solve(k)));
  }
  return out;
}

}  // namespace vecchia::oracle
