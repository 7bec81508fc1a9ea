#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vecchia/core.hpp"
#include "vecchia/engine.hpp"

namespace vecchia {

// Profiled log-likelihood with its score and Fisher information, all on the
// natural parameter scale.
struct ProfiledEvaluation {
  double loglik = 0.0;
  std::vector<double> beta_hat;
  std::vector<double> grad;
  Matrix info;
  Matrix betainfo;
};

// Generalized least squares profiling of the mean; throws SingularDesign when
// XSX does not factor.
ProfiledEvaluation assemble(const VecchiaParts& parts, std::size_t n);

// Convenience: run the engine and assemble.
ProfiledEvaluation evaluate(const EngineProblem& problem, const EngineOptions& options = {});

struct FisherStep {
  std::vector<double> proposed;  // log-parameters
  std::vector<double> step;
  double lambda = 0.0;  // ridge that made the solve succeed
};

// One scoring step in log-parameter coordinates. `grad` and `info` must
// already be on the log scale (see to_log_scale). Tries ridge values
// 0, 1e-8, 1e-6, ..., 1 until the solve succeeds with grad . step > 0;
// a zero gradient yields a zero step. Throws DegenerateInformation.
FisherStep fisher_step(std::span<const double> log_theta, std::span<const double> grad,
                       const Matrix& info);

// Chain rule to log-parameters: g_j theta_j and I_jl theta_j theta_l.
std::vector<double> grad_to_log_scale(std::span<const double> grad,
                                      std::span<const double> theta);
Matrix info_to_log_scale(const Matrix& info, std::span<const double> theta);

struct FitOptions {
  std::size_t max_iters = 40;
  double tol = 1e-4;
  std::size_t max_halvings = 10;
  double jitter = 0.0;
  EngineOptions engine;
  // Called after every accepted iterate with (iteration, loglik, theta).
  std::function<void(std::size_t, double, std::span<const double>)> on_iteration;
};

// Starting values: sigma2 from the ordinary least squares residual
// variance, every range a quarter of the bounding-box diagonal of `locs`
// (working coordinates), nugget 0.1.
CovarianceParameters default_start(const Dataset& data, CovarianceKind kind);

// Fisher scoring with step halving. `data` is in neighbor-array order with
// working-space coordinates.
FitResult fit(const Dataset& data, const NeighborArray& nn, const CovarianceParameters& start,
              const FitOptions& options = {});

}  // namespace vecchia
