#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "vecchia/bench.hpp"
#include "vecchia/cli.hpp"
#include "vecchia/fit_json.hpp"
#include "vecchia/io.hpp"

using namespace vecchia;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "vecchia_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const std::filesystem::path& training_csv() {
  static const std::filesystem::path path = [] {
    const auto p = scratch("train.csv");
    const auto r = invoke({"simulate", "--n", "400", "--d", "2", "--theta", "1.5,0.2,0.1", "--beta",
                           "0.5,1.0", "--seed", "3", "--out", p.string()});
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate writes a readable dataset") {
    const auto table = io::read_numeric_csv(training_csv());
    CHECK(table.rows == 400);
    CHECK(table.find("y"));
    CHECK(table.find("x1"));
    CHECK(table.find("loc1"));
    CHECK(table.find("loc2"));

    const auto sphere = scratch("sphere.csv");
    const auto r = invoke({"simulate", "--n", "50", "--covfun", "exponential_sphere", "--theta",
                           "1,0.3,0.1", "--out", sphere.string()});
    REQUIRE(r.code == 0);
    const auto t2 = io::read_numeric_csv(sphere);
    CHECK(t2.find("lon"));
    CHECK(t2.find("lat"));
  }

  TEST_CASE("fit happy path") {
    const auto out = scratch("fit.json");
    const auto r = invoke({"fit", "--data", training_csv().string(), "--x-cols", "x1", "--intercept", "--m",
                           "10", "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.find("loglik") != std::string::npos);
    const auto doc = io::read_fit_json(out);
    CHECK(doc.result.theta_hat.nparms() == 3);
    CHECK(doc.result.beta_hat.size() == 2);
    CHECK(doc.result.converged);
    const auto j = nlohmann::json::parse(slurp(out));
    for (const char* phase : {"reorder", "neighbor_search", "fit"}) {
      CHECK_MESSAGE(j["phase_timings"].contains(phase), phase);
    }
  }

  TEST_CASE("a bare fit implies an intercept") {
    const auto out = scratch("bare.json");
    const auto r = invoke({"fit", "--data", training_csv().string(), "--m", "8", "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(io::read_fit_json(out).result.beta_hat.size() == 1);
  }

  TEST_CASE("exit codes") {
    const auto out = scratch("bad.json");
    const auto matern = invoke({"fit", "--data", training_csv().string(), "--covfun", "matern", "--out",
                                out.string()});
    CHECK(matern.code == cli::kExitUsage);
    CHECK(matern.err.rfind("vecchia: error[UnknownFamily]:", 0) == 0);

    const auto big_m = invoke({"fit", "--data", training_csv().string(), "--m", "400", "--out", out.string()});
    CHECK(big_m.code == cli::kExitData);
    CHECK(big_m.err.find("error[DimensionMismatch]") != std::string::npos);

    const auto missing = invoke({"fit", "--data", "/nonexistent/train.csv", "--out", out.string()});
    CHECK(missing.code == cli::kExitIo);

    const auto column = invoke({"fit", "--data", training_csv().string(), "--x-cols", "elev", "--out",
                                out.string()});
    CHECK(column.code == cli::kExitData);
    CHECK(column.err.find("MissingColumn") != std::string::npos);

    CHECK(invoke({"fit"}).code == cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"--help"}).code == cli::kExitOk);
  }

  TEST_CASE("runs are reproducible across repetitions and backends") {
    std::vector<std::string> stripped;
    for (const char* backend : {"task", "task", "seq", "nested", "staged"}) {
      const auto out = scratch(std::string("det_") + backend + ".json");
      const auto r = invoke({"fit", "--data", training_csv().string(), "--x-cols", "x1", "--intercept", "--m",
                             "10", "--seed", "42", "--deterministic", "--backend", backend, "--out",
                             out.string()});
      REQUIRE(r.code == 0);
      stripped.push_back(io::strip_timings(slurp(out)));
    }
    for (const auto& s : stripped) CHECK(s == stripped.front());
  }

  TEST_CASE("predict from a fitted model") {
    const auto model = scratch("pred_model.json");
    REQUIRE(invoke({"fit", "--data", training_csv().string(), "--x-cols", "x1", "--intercept", "--m", "10",
                    "--out", model.string()})
                .code == 0);
    const auto pred_in = scratch("pred_in.csv");
    std::ofstream(pred_in) << "loc1,loc2,x1\n0.5,0.5,0\n0.1,0.9,1\n";
    const auto pred_out = scratch("pred_out.csv");
    const auto r = invoke({"predict", "--model", model.string(), "--pred", pred_in.string(), "--m-pred", "30",
                           "--out", pred_out.string()});
    REQUIRE(r.code == 0);
    const auto table = io::read_numeric_csv(pred_out);
    CHECK(table.rows == 2);
    REQUIRE(table.find("mean"));
    REQUIRE(table.find("sd"));
    for (const double sd : table.column("sd")) CHECK(sd > 0.0);

    const auto no_x = scratch("pred_nox.csv");
    std::ofstream(no_x) << "loc1,loc2\n0.5,0.5\n";
    CHECK(invoke({"predict", "--model", model.string(), "--pred", no_x.string(), "--out", pred_out.string()})
              .code == cli::kExitData);
  }

  TEST_CASE("thread count from the environment") {
    const auto out = scratch("env.json");
    ::setenv("VECCHIA_NUM_THREADS", "2", 1);
    const auto r = invoke({"fit", "--data", training_csv().string(), "--m", "5", "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(slurp(out))["execution"]["threads"] == 2);
    ::setenv("VECCHIA_NUM_THREADS", "many", 1);
    CHECK(invoke({"fit", "--data", training_csv().string(), "--m", "5", "--out", out.string()}).code ==
          cli::kExitUsage);
    ::unsetenv("VECCHIA_NUM_THREADS");
  }

  TEST_CASE("bench writes a CSV") {
    const auto out = scratch("bench.csv");
    const auto r = invoke({"bench", "--n", "2000", "--m", "5", "--backends", "seq,task", "--reps", "1",
                           "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto records = bench::read_bench_csv(out);
    CHECK(records.size() == 2);
    CHECK(records[0].backend == Backend::Sequential);
  }
}
