#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vecchia/engine.hpp"
#include "vecchia/error.hpp"
#include "vecchia/linalg.hpp"

using namespace vecchia;

namespace {

const Backend kAllBackends[] = {Backend::Sequential, Backend::TaskPerObservation, Backend::Nested,
                                Backend::StagedBatched};

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

EngineProblem problem_of(const Instance& inst, double jitter = 0.0) {
  return {inst.prep.data, inst.prep.nn, CovarianceFamily(inst.params.kind), inst.params.theta,
          jitter};
}

VecchiaParts run_with(const EngineProblem& problem, Backend backend, bool deterministic,
                      std::size_t tier = 0) {
  EngineOptions opts;
  opts.backend = backend;
  opts.deterministic = deterministic;
  opts.capacity_tier = tier;
  return run(problem, opts);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("first observation has a scalar closed form") {
    Dataset ds;
    ds.y = {1.7};
    ds.X = Matrix(1, 1, 1.0);
    ds.locs = Matrix(1, 2, 0.0);
    const NeighborArray nn = find_ordered_neighbors(ds.locs, 1);
    const std::vector<double> theta{2.0, 0.5, 0.25};
    const EngineProblem problem{ds, nn, CovarianceFamily(CovarianceKind::ExponentialIsotropic), theta};
    const auto c = process_observation(0, problem);
    const double v = 2.0 * 1.25;
    CHECK(c.logdet() == doctest::Approx(std::log(v)).epsilon(1e-15));
    CHECK(c.ySy() == doctest::Approx(1.7 * 1.7 / v).epsilon(1e-15));
    CHECK(c.XSX(0, 0) == doctest::Approx(1.0 / v).epsilon(1e-15));
    CHECK(c.ySX(0) == doctest::Approx(1.7 / v).epsilon(1e-15));
    // d log v / d sigma2 = 1 / sigma2, d log v / d tau2 = 1 / (1 + tau2)
    CHECK(c.dlogdet(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.dlogdet(1) == 0.0);
    CHECK(c.dlogdet(2) == doctest::Approx(1.0 / 1.25).epsilon(1e-15));
  }

  TEST_CASE("zero response gives zero quadratic terms") {
    Instance inst = make_instance(3, CovarianceKind::ExponentialIsotropic, 60, 2, 2, 8);
    std::fill(inst.prep.data.y.begin(), inst.prep.data.y.end(), 0.0);
    const EngineProblem problem = problem_of(inst);
    for (std::size_t i = 0; i < 60; ++i) {
      const auto c = process_observation(i, problem);
      CHECK(c.ySy() == 0.0);
      for (std::size_t a = 0; a < 2; ++a) CHECK(c.ySX(a) == 0.0);
      for (std::size_t j = 0; j < 3; ++j) CHECK(c.dySy(j) == 0.0);
    }
  }

  TEST_CASE("per-observation XSX is symmetric rank one") {
    const Instance inst = make_instance(4, CovarianceKind::ExponentialIsotropic, 40, 3, 2, 6);
    const EngineProblem problem = problem_of(inst);
    for (std::size_t i = 0; i < 40; ++i) {
      const auto c = process_observation(i, problem);
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
          CHECK(c.XSX(a, b) == c.XSX(b, a));
          CHECK(c.XSX(a, b) * c.XSX(a, b) ==
                doctest::Approx(c.XSX(a, a) * c.XSX(b, b)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("full conditioning on n=5 reproduces dense quantities") {
    const Instance inst = make_instance(5, CovarianceKind::ExponentialIsotropic, 5, 2, 2, 4);
    const VecchiaParts parts = run(problem_of(inst));
    const Dataset& ds = inst.prep.data;
    const Matrix S = oracle::dense_covariance(inst.params, ds.locs);
    const Matrix B = linalg::cholesky(S);
    double logdet = 0.0;
    for (std::size_t a = 0; a < 5; ++a) logdet += 2.0 * std::log(B(a, a));
    const auto z = linalg::solve_lower(B, ds.y);
    const Matrix W = linalg::solve_lower(B, ds.X);
    double ySy = 0.0;
    for (double v : z) ySy += v * v;
    CHECK(testing::rel_diff(parts.logdet(), logdet) < 1e-8);
    CHECK(testing::rel_diff(parts.ySy(), ySy) < 1e-8);
    for (std::size_t a = 0; a < 2; ++a) {
      double ySX = 0.0;
      for (std::size_t r = 0; r < 5; ++r) ySX += z[r] * W(r, a);
      CHECK(testing::rel_diff(parts.ySX(a), ySX) < 1e-8);
      for (std::size_t b = 0; b < 2; ++b) {
        double XSX = 0.0;
        for (std::size_t r = 0; r < 5; ++r) XSX += W(r, a) * W(r, b);
        CHECK(testing::rel_diff(parts.XSX(a, b), XSX) < 1e-8);
      }
    }
  }

  TEST_CASE("deterministic mode is bit-identical across backends") {
    struct Shape {
      CovarianceKind kind;
      std::size_t n, p, d, m;
    };
    const Shape shapes[] = {
        {CovarianceKind::ExponentialIsotropic, 400, 1, 2, 5},
        {CovarianceKind::ExponentialIsotropic, 400, 3, 2, 10},
        {CovarianceKind::ExponentialAnisotropic, 300, 2, 3, 30},
        {CovarianceKind::ExponentialSphere, 300, 1, 2, 40},
        {CovarianceKind::ExponentialIsotropic, 200, 2, 2, 70},
    };
    std::uint64_t seed = 100;
    for (const Shape& s : shapes) {
      const Instance inst = make_instance(seed++, s.kind, s.n, s.p, s.d, s.m);
      const EngineProblem problem = problem_of(inst);
      const VecchiaParts reference = run_with(problem, Backend::Sequential, true);
      for (const Backend b : kAllBackends) {
        CAPTURE(to_string(b));
        CAPTURE(s.m);
        CHECK(run_with(problem, b, true) == reference);
        const VecchiaParts loose = run_with(problem, b, false);
        for (std::size_t f = 0; f < reference.raw().size(); ++f) {
          const double a = loose.raw()[f], r = reference.raw()[f];
          CHECK((a == r || testing::rel_diff(a, r) <= 1e-10));
        }
      }
    }
  }

  TEST_CASE("capacity tiers") {
    const Instance inst = make_instance(9, CovarianceKind::ExponentialIsotropic, 300, 2, 2, 10);
    const EngineProblem problem = problem_of(inst);
    CHECK(auto_capacity_tier(7) == 8);
    CHECK(auto_capacity_tier(10) == 16);
    CHECK(auto_capacity_tier(63) == 64);
    CHECK(auto_capacity_tier(64) == 0);
    const VecchiaParts reference = run_with(problem, Backend::TaskPerObservation, true);
    for (const std::size_t tier : {16, 32, 64}) {
      CHECK(run_with(problem, Backend::TaskPerObservation, true, tier) == reference);
    }
    CHECK_THROWS_AS(run_with(problem, Backend::TaskPerObservation, true, 8), Error);
    CHECK_THROWS_AS(run_with(problem, Backend::TaskPerObservation, true, 12), Error);
  }

  TEST_CASE("within-row order does not change the conditional density") {
    const Instance inst = make_instance(12, CovarianceKind::ExponentialIsotropic, 150, 2, 2, 12);
    NeighborArray shuffled = inst.prep.nn;
    Rng rng(77);
    for (std::size_t i = 0; i < shuffled.n(); ++i) {
      auto row = shuffled.row(i);
      const std::size_t k = shuffled.count(i);
      for (std::size_t a = k - 1; a > 1; --a) std::swap(row[a], row[1 + rng.below(a)]);
    }
    const EngineProblem base = problem_of(inst);
    const EngineProblem permuted{inst.prep.data, shuffled, base.family, base.theta};
    for (std::size_t i = 0; i < shuffled.n(); ++i) {
      const auto c1 = process_observation(i, base);
      const auto c2 = process_observation(i, permuted);
      CHECK(testing::rel_diff(c1.logdet(), c2.logdet()) < 1e-10);
      CHECK(testing::rel_diff(c1.ySy(), c2.ySy()) < 1e-10);
      for (std::size_t a = 0; a < 2; ++a) {
        CHECK(testing::rel_diff(c1.ySX(a), c2.ySX(a)) < 1e-10);
        for (std::size_t b = 0; b < 2; ++b) {
          CHECK(testing::rel_diff(c1.XSX(a, b), c2.XSX(a, b)) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("derivative accumulators match finite differences") {
    std::uint64_t seed = 200;
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic}) {
      for (int trial = 0; trial < 5; ++trial) {
        const Instance inst = make_instance(seed++, kind, 120, 2, 2, 8);
        const EngineProblem problem = problem_of(inst);
        const VecchiaParts parts = run(problem);
        const std::size_t np = inst.params.nparms();
        for (std::size_t j = 0; j < np; ++j) {
          const double h = 1e-6 * inst.params.theta[j];
          auto up = inst.params.theta, down = inst.params.theta;
          up[j] += h;
          down[j] -= h;
          const VecchiaParts pu = run({inst.prep.data, inst.prep.nn, problem.family, up});
          const VecchiaParts pd = run({inst.prep.data, inst.prep.nn, problem.family, down});
          auto fd = [&](double u, double d) { return (u - d) / (2 * h); };
          CHECK(testing::rel_diff(parts.dlogdet(j), fd(pu.logdet(), pd.logdet())) <= 1e-5);
          CHECK(testing::rel_diff(parts.dySy(j), fd(pu.ySy(), pd.ySy())) <= 1e-5);
          for (std::size_t a = 0; a < 2; ++a) {
            CHECK(testing::rel_diff(parts.dySX(a, j), fd(pu.ySX(a), pd.ySX(a))) <= 1e-5);
            for (std::size_t b = 0; b < 2; ++b) {
              CHECK(testing::rel_diff(parts.dXSX(a, b, j), fd(pu.XSX(a, b), pd.XSX(a, b))) <= 1e-5);
            }
          }
        }
      }
    }
  }

  TEST_CASE("ainfo is symmetric and positive semidefinite") {
    std::uint64_t seed = 300;
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic,
                            CovarianceKind::ExponentialSphere}) {
      const Instance inst = make_instance(seed++, kind, 250, 1, 3, 10);
      const VecchiaParts parts = run(problem_of(inst));
      const std::size_t np = parts.nparms();
      Matrix info(np, np);
      double trace = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        trace += parts.ainfo(j, j);
        for (std::size_t l = 0; l < np; ++l) {
          CHECK(parts.ainfo(j, l) == parts.ainfo(l, j));
          info(j, l) = parts.ainfo(j, l);
        }
      }
      for (std::size_t j = 0; j < np; ++j) info(j, j) += 1e-8 * trace;
      CHECK_NOTHROW(linalg::cholesky(info));
    }
  }

  TEST_CASE("singular local covariance reports the lowest failing observation") {
    Rng rng(41);
    Dataset ds;
    ds.locs = testing::random_locs(rng, 200, 2);
    ds.X = testing::random_design(rng, 200, 1);
    for (int i = 0; i < 200; ++i) ds.y.push_back(rng.normal());
    for (std::size_t c = 0; c < 2; ++c) {
      ds.locs(150, c) = ds.locs(3, c);
      ds.locs(90, c) = ds.locs(3, c);
    }
    const NeighborArray nn = find_ordered_neighbors(ds.locs, 10);
    const std::vector<double> theta{1.0, 0.2, 0.0};
    const EngineProblem problem{ds, nn, CovarianceFamily(CovarianceKind::ExponentialIsotropic), theta};
    for (const Backend b : kAllBackends) {
      for (const bool det : {true, false}) {
        CAPTURE(to_string(b));
        try {
          run_with(problem, b, det);
          FAIL("expected NotPositiveDefinite");
        } catch (const NotPositiveDefiniteError& e) {
          CHECK(e.observation() == 90);
        }
      }
    }
    const EngineProblem jittered{ds, nn, problem.family, theta, 1e-6};
    CHECK_NOTHROW(run(jittered));
  }

  TEST_CASE("pairwise reduction sums exactly representable records") {
    const std::size_t n = 37, stride = 3;
    std::vector<double> records(n * stride);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < stride; ++f) records[i * stride + f] = static_cast<double>(i * (f + 1));
    }
    reduce_pairwise_in_place(records, n, stride);
    for (std::size_t f = 0; f < stride; ++f) CHECK(records[f] == 666.0 * static_cast<double>(f + 1));
  }
}
