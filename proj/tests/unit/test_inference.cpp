#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vecchia/error.hpp"
#include "vecchia/inference.hpp"

using namespace vecchia;

namespace {

struct Instance {
  CovarianceParameters params;
  testing::Prepared prep;
};

Instance make_instance(std::uint64_t seed, CovarianceKind kind, std::size_t n, std::size_t p,
                       std::size_t d, std::size_t m) {
  Rng rng(seed);
  Instance inst;
  inst.params = testing::random_params(rng, kind, d);
  inst.prep = testing::prepare(testing::simulated_dataset(inst.params, n, p, d, seed + 1), kind, m);
  return inst;
}

double vecchia_loglik(const Instance& inst, std::span<const double> theta) {
  const EngineProblem problem{inst.prep.data, inst.prep.nn, CovarianceFamily(inst.params.kind), theta};
  return evaluate(problem).loglik;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("single observation interpolates exactly") {
    Dataset ds;
    ds.y = {0.8};
    ds.X = Matrix(1, 1, 1.0);
    ds.locs = Matrix(1, 2, 0.0);
    const NeighborArray nn = find_ordered_neighbors(ds.locs, 1);
    const std::vector<double> theta{1.5, 0.3, 0.2};
    const auto ev = evaluate({ds, nn, CovarianceFamily(CovarianceKind::ExponentialIsotropic), theta});
    CHECK(ev.beta_hat[0] == doctest::Approx(0.8).epsilon(1e-14));
    const double expected = -0.5 * (std::log(2 * std::numbers::pi) + std::log(1.5 * 1.2));
    CHECK(ev.loglik == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("full conditioning equals the dense likelihood") {
    Rng rng(10);
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic,
                            CovarianceKind::ExponentialSphere}) {
      const auto params = testing::random_params(rng, kind, 2);
      const Dataset raw = testing::simulated_dataset(params, 60, 2, 2, rng.next());
      const auto prep = testing::prepare(raw, kind, 59);
      const auto ev = evaluate({prep.data, prep.nn, CovarianceFamily(kind), params.theta});
      const auto dense = oracle::dense_loglik_profiled(params, raw);
      CHECK(testing::rel_diff(ev.loglik, dense.loglik) < 1e-8);
      for (std::size_t a = 0; a < 2; ++a) {
        CHECK(ev.beta_hat[a] == doctest::Approx(dense.beta_hat[a]).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("gradient matches finite differences of the Vecchia likelihood") {
    std::uint64_t seed = 20;
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic,
                            CovarianceKind::ExponentialSphere}) {
      for (const std::size_t m : {5, 10}) {
        const Instance inst = make_instance(seed++, kind, 150, 3, 2, m);
        const auto ev = evaluate(
            {inst.prep.data, inst.prep.nn, CovarianceFamily(kind), inst.params.theta});
        const auto fd = oracle::fd_gradient(
            [&](std::span<const double> t) { return vecchia_loglik(inst, t); }, inst.params.theta);
        for (std::size_t j = 0; j < fd.size(); ++j) CHECK(testing::rel_diff(ev.grad[j], fd[j]) <= 1e-5);
        for (std::size_t j = 0; j < fd.size(); ++j) {
          for (std::size_t l = 0; l < fd.size(); ++l) CHECK(ev.info(j, l) == ev.info(l, j));
        }
      }
    }
  }

  TEST_CASE("rank-deficient design") {
    Instance inst = make_instance(30, CovarianceKind::ExponentialIsotropic, 50, 2, 2, 5);
    for (std::size_t i = 0; i < 50; ++i) inst.prep.data.X(i, 1) = 2.0;
    try {
      evaluate({inst.prep.data, inst.prep.nn, CovarianceFamily(inst.params.kind), inst.params.theta});
      FAIL("expected SingularDesign");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularDesign);
    }
  }

  TEST_CASE("fisher_step examples") {
    const std::vector<double> theta{0.1, -0.3};
    const auto still = fisher_step(theta, std::vector<double>{0.0, 0.0}, Matrix::identity(2));
    CHECK(still.proposed == theta);

    const std::vector<double> g{0.7, -1.1};
    const auto ident = fisher_step(theta, g, Matrix::identity(2));
    CHECK(ident.step == g);
    CHECK(ident.lambda == 0.0);
    CHECK(ident.proposed[0] == theta[0] + g[0]);

    const auto diag = fisher_step(theta, std::vector<double>{2, 4},
                                  Matrix(2, 2, std::vector<double>{2, 0, 0, 4}));
    CHECK(diag.step[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(diag.step[1] == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("fisher_step regularizes and gives up") {
    const std::vector<double> theta{0.0, 0.0};
    const Matrix singular(2, 2, std::vector<double>{1, 1, 1, 1});
    const auto step = fisher_step(theta, std::vector<double>{1.0, -1.0}, singular);
    CHECK(step.lambda > 0.0);
    CHECK(step.step[0] > 0.0);

    const Matrix negative(2, 2, std::vector<double>{-5, 0, 0, -5});
    try {
      fisher_step(theta, std::vector<double>{1.0, 1.0}, negative);
      FAIL("expected DegenerateInformation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateInformation);
    }
  }

  TEST_CASE("log-scale chain rule") {
    const std::vector<double> theta{2.0, 0.5};
    const auto g = grad_to_log_scale(std::vector<double>{3.0, -4.0}, theta);
    CHECK(g == std::vector<double>{6.0, -2.0});
    const Matrix I = info_to_log_scale(Matrix(2, 2, std::vector<double>{1, 2, 2, 8}), theta);
    CHECK(I(0, 0) == 4.0);
    CHECK(I(0, 1) == 2.0);
    CHECK(I(1, 1) == 2.0);
  }

  TEST_CASE("default starting values") {
    Dataset ds;
    ds.y = {1.0, 3.0, 5.0, 7.0};
    ds.X = Matrix(4, 1, 1.0);
    ds.locs = Matrix(4, 2, std::vector<double>{0, 0, 3, 0, 0, 4, 3, 4});
    const auto s = default_start(ds, CovarianceKind::ExponentialIsotropic);
    CHECK(s.theta[0] == doctest::Approx(20.0 / 3.0));
    CHECK(s.theta[1] == doctest::Approx(1.25));
    CHECK(s.theta[2] == 0.1);
    CHECK(default_start(ds, CovarianceKind::ExponentialAnisotropic).theta.size() == 4);
  }

  TEST_CASE("fit: monotone trace, iteration cap, fixed point") {
    const Instance inst = make_instance(40, CovarianceKind::ExponentialIsotropic, 800, 2, 2, 15);
    FitOptions opts;
    opts.engine.deterministic = true;
    const auto start = default_start(inst.prep.data, inst.params.kind);
    const FitResult result = fit(inst.prep.data, inst.prep.nn, start, opts);
    CHECK(result.converged);
    CHECK(result.iterations <= 40);
    for (std::size_t t = 1; t < result.loglik_trace.size(); ++t) {
      CHECK(result.loglik_trace[t] >= result.loglik_trace[t - 1]);
    }
    CHECK(result.fisher_info.rows() == 3);
    CHECK(result.beta_cov.rows() == 2);
    CHECK(result.phase_timings.get("fit") > 0.0);
    CHECK(result.evaluations >= result.loglik_trace.size());

    const FitResult again = fit(inst.prep.data, inst.prep.nn, result.theta_hat, opts);
    CHECK(again.iterations == 1);
    CHECK(again.converged);
    CHECK(again.theta_hat == result.theta_hat);

    opts.max_iters = 2;
    const FitResult capped = fit(inst.prep.data, inst.prep.nn, start, opts);
    CHECK(capped.iterations <= 2);
    CHECK(capped.loglik_trace.size() <= 3);
  }

  TEST_CASE("fit rejects non-positive starting values") {
    const Instance inst = make_instance(41, CovarianceKind::ExponentialIsotropic, 50, 1, 2, 5);
    CovarianceParameters start{CovarianceKind::ExponentialIsotropic, {1.0, 0.2, 0.0}};
    CHECK_THROWS_AS(fit(inst.prep.data, inst.prep.nn, start), Error);
    start.theta = {1.0, 0.2};
    CHECK_THROWS_AS(fit(inst.prep.data, inst.prep.nn, start), Error);
  }
}
