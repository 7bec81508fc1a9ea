#include "vecchia/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"
#include "vecchia/linalg.hpp"

namespace vecchia {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ProfiledEvaluation assemble(const VecchiaParts& parts, std::size_t n) {
  const std::size_t p = parts.p();
  const std::size_t np = parts.nparms();

  ProfiledEvaluation out;
  out.betainfo = Matrix(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) out.betainfo(a, b) = parts.XSX(a, b);
  }
  std::vector<double> ySX(p);
  for (std::size_t a = 0; a < p; ++a) ySX[a] = parts.ySX(a);

  Matrix chol;
  try {
    chol = linalg::cholesky(out.betainfo);
  } catch (const NotPositiveDefiniteError&) {
    fail(ErrorCode::SingularDesign, "XSX is not invertible; check the design matrix rank");
  }
  // A column that is a combination of the others in exact arithmetic leaves
  // a pivot at rounding level instead of a non-positive one.
  for (std::size_t a = 0; a < p; ++a) {
    if (chol(a, a) * chol(a, a) <= 1e-12 * out.betainfo(a, a)) {
      fail(ErrorCode::SingularDesign, "XSX is numerically singular; check the design matrix rank");
    }
  }
  out.beta_hat = linalg::solve_upper_transpose(chol, linalg::solve_lower(chol, ySX));
  const auto& beta = out.beta_hat;

  double b_ySX = 0.0;
  double b_XSX_b = 0.0;
  for (std::size_t a = 0; a < p; ++a) {
    b_ySX += beta[a] * ySX[a];
    for (std::size_t b = 0; b < p; ++b) b_XSX_b += beta[a] * parts.XSX(a, b) * beta[b];
  }
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
                       parts.logdet() + parts.ySy() - 2.0 * b_ySX + b_XSX_b);

  out.grad.assign(np, 0.0);
  for (std::size_t j = 0; j < np; ++j) {
    double b_dySX = 0.0;
    double b_dXSX_b = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      b_dySX += beta[a] * parts.dySX(a, j);
      for (std::size_t b = 0; b < p; ++b) b_dXSX_b += beta[a] * parts.dXSX(a, b, j) * beta[b];
    }
    out.grad[j] = -0.5 * (parts.dlogdet(j) + parts.dySy(j) - 2.0 * b_dySX + b_dXSX_b);
  }

  out.info = Matrix(np, np);
  for (std::size_t j = 0; j < np; ++j) {
    for (std::size_t l = 0; l < np; ++l) out.info(j, l) = parts.ainfo(j, l);
  }
  return out;
}

ProfiledEvaluation evaluate(const EngineProblem& problem, const EngineOptions& options) {
  return assemble(run(problem, options), problem.data.n());
}

std::vector<double> grad_to_log_scale(std::span<const double> grad,
                                      std::span<const double> theta) {
  std::vector<double> out(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j) out[j] = grad[j] * theta[j];
  return out;
}

Matrix info_to_log_scale(const Matrix& info, std::span<const double> theta) {
  Matrix out(info.rows(), info.cols());
  for (std::size_t j = 0; j < info.rows(); ++j) {
    for (std::size_t l = 0; l < info.cols(); ++l) out(j, l) = info(j, l) * theta[j] * theta[l];
  }
  return out;
}

FisherStep fisher_step(std::span<const double> log_theta, std::span<const double> grad,
                       const Matrix& info) {
  const std::size_t np = log_theta.size();
  if (grad.size() != np || info.rows() != np || info.cols() != np) {
    fail(ErrorCode::DimensionMismatch, "fisher_step: inconsistent parameter dimensions");
  }
  FisherStep out;
  out.proposed.assign(log_theta.begin(), log_theta.end());
  if (std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; })) {
    out.step.assign(np, 0.0);
    return out;
  }

  constexpr double kRidges[] = {0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0};
  for (const double lambda : kRidges) {
    Matrix regularized = info;
    for (std::size_t j = 0; j < np; ++j) regularized(j, j) += lambda;
    std::vector<double> step;
    try {
      step = linalg::spd_solve(regularized, grad);
    } catch (const NotPositiveDefiniteError&) {
      continue;
    }
    double ascent = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < np; ++j) {
      ascent += grad[j] * step[j];
      finite = finite && std::isfinite(step[j]);
    }
    if (!finite || !(ascent > 0.0)) continue;
    out.step = std::move(step);
    out.lambda = lambda;
    for (std::size_t j = 0; j < np; ++j) out.proposed[j] += out.step[j];
    return out;
  }
  fail(ErrorCode::DegenerateInformation,
       "Fisher information could not be regularized into an ascent direction");
}

CovarianceParameters default_start(const Dataset& data, CovarianceKind kind) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const std::size_t d = data.d();

  // OLS residual variance
  Matrix XtX(p, p);
  std::vector<double> Xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.X.row(i);
    for (std::size_t a = 0; a < p; ++a) {
      Xty[a] += x[a] * data.y[i];
      for (std::size_t b = 0; b < p; ++b) XtX(a, b) += x[a] * x[b];
    }
  }
  std::vector<double> resid(data.y);
  try {
    const auto beta = linalg::spd_solve(XtX, Xty);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = data.X.row(i);
      for (std::size_t a = 0; a < p; ++a) resid[i] -= x[a] * beta[a];
    }
  } catch (const NotPositiveDefiniteError&) {
    fail(ErrorCode::SingularDesign, "design matrix is rank deficient");
  }
  double mean = 0.0;
  for (const double r : resid) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const double r : resid) var += (r - mean) * (r - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  if (!(var > 0.0)) var = 1.0;

  double diag2 = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double lo = data.locs(0, c);
    double hi = lo;
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, data.locs(i, c));
      hi = std::max(hi, data.locs(i, c));
    }
    diag2 += (hi - lo) * (hi - lo);
  }
  double range = 0.25 * std::sqrt(diag2);
  if (!(range > 0.0)) range = 1.0;

  CovarianceParameters start;
  start.kind = kind;
  start.theta.push_back(var);
  const std::size_t ranges = kind == CovarianceKind::ExponentialAnisotropic ? d : 1;
  for (std::size_t k = 0; k < ranges; ++k) start.theta.push_back(range);
  start.theta.push_back(0.1);
  return start;
}

FitResult fit(const Dataset& data, const NeighborArray& nn, const CovarianceParameters& start,
              const FitOptions& options) {
  const auto fit_start = Clock::now();
  const CovarianceFamily family(start.kind);
  const std::size_t np = family.nparms(data.d());
  if (start.theta.size() != np) {
    fail(ErrorCode::InvalidArgument, "starting values have " +
                                         std::to_string(start.theta.size()) +
                                         " entries, family expects " + std::to_string(np));
  }
  for (const double t : start.theta) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      fail(ErrorCode::InvalidArgument,
           "Fisher scoring runs on log parameters; starting values must be positive");
    }
  }

  FitResult result;
  double evaluate_seconds = 0.0;
  std::size_t evaluations = 0;
  auto evaluate_at = [&](std::span<const double> theta) {
    const auto t0 = Clock::now();
    const EngineProblem problem{data, nn, family, theta, options.jitter};
    ProfiledEvaluation e = evaluate(problem, options.engine);
    evaluate_seconds += seconds_since(t0);
    ++evaluations;
    return e;
  };

  std::vector<double> theta = start.theta;
  ProfiledEvaluation current;
  try {
    current = evaluate_at(theta);
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(e.observation(), e.pivot(), "fit: starting values");
  }
  result.loglik_trace.push_back(current.loglik);

  for (std::size_t iter = 1; iter <= options.max_iters; ++iter) {
    result.iterations = iter;
    std::vector<double> log_theta(np);
    for (std::size_t j = 0; j < np; ++j) log_theta[j] = std::log(theta[j]);
    const auto g = grad_to_log_scale(current.grad, theta);
    const Matrix info = info_to_log_scale(current.info, theta);
    const FisherStep proposal = fisher_step(log_theta, g, info);

    double decrement = 0.0;
    for (std::size_t j = 0; j < np; ++j) decrement += g[j] * proposal.step[j];
    decrement *= 0.5;
    if (decrement < options.tol) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    double scale = 1.0;
    for (std::size_t h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      std::vector<double> candidate(np);
      for (std::size_t j = 0; j < np; ++j) {
        candidate[j] = std::exp(log_theta[j] + scale * proposal.step[j]);
      }
      ProfiledEvaluation trial;
      try {
        trial = evaluate_at(candidate);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NotPositiveDefinite ||
            e.code() == ErrorCode::SingularDesign) {
          continue;
        }
        throw;
      }
      if (std::isfinite(trial.loglik) && trial.loglik >= current.loglik) {
        theta = std::move(candidate);
        current = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // best point seen is kept, not converged
    result.loglik_trace.push_back(current.loglik);
    if (options.on_iteration) options.on_iteration(iter, current.loglik, theta);
  }

  result.theta_hat.kind = start.kind;
  result.theta_hat.theta = theta;
  result.beta_hat = current.beta_hat;
  result.beta_cov = linalg::spd_inverse(current.betainfo);
  result.fisher_info = current.info;
  result.grad = current.grad;
  result.evaluate_seconds = evaluate_seconds;
  result.evaluations = evaluations;
  result.phase_timings.add("fit", seconds_since(fit_start));
  return result;
}

}  // namespace vecchia
