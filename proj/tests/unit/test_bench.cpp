#include <doctest.h>

#include <set>
#include <tuple>

#include "vecchia/bench.hpp"
#include "vecchia/error.hpp"

using namespace vecchia;

TEST_SUITE("bench") {
  TEST_CASE("single-cell sweep") {
    bench::SweepConfig cfg;
    cfg.n_grid = {3000};
    cfg.m_grid = {10};
    cfg.backends = {Backend::Sequential, Backend::TaskPerObservation, Backend::Nested, Backend::StagedBatched};
    cfg.reps = 3;
    cfg.deterministic = true;
    const auto records = bench::scaling_sweep(cfg);
    CHECK(records.size() == 12);
    std::set<std::tuple<std::size_t, std::size_t, Backend, int, std::size_t>> keys;
    for (const auto& r : records) {
      keys.emplace(r.n, r.m, r.backend, r.workers, r.rep);
      CHECK(r.mode == "sweep");
      CHECK(r.evaluate_ms >= 0.0);
      CHECK(r.neighbor_ms >= 0.0);
      CHECK(r.loglik == records.front().loglik);
    }
    CHECK(keys.size() == records.size());
  }

  TEST_CASE("smaller cells use leading rows of one field") {
    bench::SweepConfig cfg;
    cfg.n_grid = {500, 1000};
    cfg.m_grid = {5};
    cfg.reps = 1;
    cfg.run_fit = true;
    cfg.max_iters = 3;
    const auto records = bench::scaling_sweep(cfg);
    REQUIRE(records.size() == 2);
    CHECK(records[0].n == 500);
    CHECK(records[1].n == 1000);
    CHECK(records[0].fit_ms > 0.0);
    CHECK(records[0].iterations >= 1);
    CHECK(records[0].loglik != records[1].loglik);
  }

  TEST_CASE("sphere field") {
    const auto truth = bench::default_bench_truth();
    const Dataset a = bench::synthetic_sphere_field(truth, 400, 5);
    CHECK(a == bench::synthetic_sphere_field(truth, 400, 5));
    CHECK_NOTHROW(validate_dataset(a));
    CHECK(a.d() == 2);
    for (std::size_t i = 0; i < a.n(); ++i) {
      CHECK(std::abs(a.locs(i, 1)) <= 90.0);
      CHECK(a.X(i, 0) == 1.0);
    }
  }

  TEST_CASE("phases account for the wall total") {
    bench::ProfileConfig cfg;
    cfg.n = 3000;
    cfg.m = 10;
    cfg.n_pred = 200;
    cfg.m_pred = 20;
    const auto r = bench::phase_profile(cfg);
    CHECK(r.mode == "profile");
    const double phases = r.reorder_ms + r.neighbor_ms + r.fit_ms + r.predict_ms;
    CHECK(phases <= r.total_ms * 1.0001);
    CHECK(phases >= 0.9 * r.total_ms);
    CHECK(r.iterations >= 1);
  }

  TEST_CASE("exhaustive neighbor search outgrows the likelihood evaluation") {
    bench::ProfileConfig cfg;
    cfg.m = 10;
    cfg.n_pred = 10;
    cfg.m_pred = 10;
    cfg.max_iters = 1;
    cfg.search = NeighborSearch::Exhaustive;
    cfg.n = 20000;
    const auto small = bench::phase_profile(cfg);
    cfg.n = 40000;
    const auto large = bench::phase_profile(cfg);
    const double neighbor_ratio = large.neighbor_ms / small.neighbor_ms;
    const double evaluate_ratio = large.evaluate_ms / small.evaluate_ms;
    MESSAGE("neighbor ratio " << neighbor_ratio << ", evaluate ratio " << evaluate_ratio);
    CHECK(neighbor_ratio > 3.0);
    CHECK(neighbor_ratio > 1.3 * evaluate_ratio);
  }

  TEST_CASE("CSV round trip is lossless") {
    std::vector<bench::BenchRecord> records(2);
    records[0] = {"sweep", 1000, 10, Backend::Nested, 4, 2, 0.0, 1.0 / 3.0, 2e-5, 0.0, 0.0, 12.5, 0, -1234.5678901234};
    records[1] = {"profile", 20000, 30, Backend::StagedBatched, 1, 0, 0.25, 100.125, 3.0, 40.0, 7.0, 150.375, 7, 0.1};
    const auto text = bench::bench_csv_string(records);
    CHECK(text.rfind("mode,n,m,backend,workers,rep,", 0) == 0);
    CHECK(bench::parse_bench_csv(text) == records);
    CHECK_THROWS_AS(bench::parse_bench_csv("mode,n\nsweep,1\n"), Error);
  }
}
