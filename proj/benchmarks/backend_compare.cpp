// Times one full evaluate per backend on a synthetic sphere field and prints
// the median per (n, m, backend) plus the speedup over the serial reference.
//
//   backend_compare [n=50000] [reps=3] [threads=0]

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "vecchia/bench.hpp"

int main(int argc, char** argv) {
  using namespace vecchia;
  bench::SweepConfig cfg;
  cfg.n_grid = {argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 50000UL};
  cfg.reps = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 3UL;
  cfg.workers = argc > 3 ? std::atoi(argv[3]) : 0;
  cfg.m_grid = {10, 30};
  cfg.backends = {Backend::Sequential, Backend::TaskPerObservation, Backend::Nested,
                  Backend::StagedBatched};

  std::map<std::tuple<std::size_t, std::size_t, Backend>, std::vector<double>> times;
  for (const auto& r : bench::scaling_sweep(cfg)) {
    times[{r.n, r.m, r.backend}].push_back(r.evaluate_ms);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  std::printf("%8s %4s %8s %12s %8s\n", "n", "m", "backend", "evaluate_ms", "speedup");
  for (const std::size_t m : cfg.m_grid) {
    const std::size_t n = cfg.n_grid.front();
    const double serial = median(times[{n, m, Backend::Sequential}]);
    for (const Backend b : cfg.backends) {
      const double t = median(times[{n, m, b}]);
      std::printf("%8zu %4zu %8s %12.2f %8.2f\n", n, m, std::string(to_string(b)).c_str(), t,
                  serial / t);
    }
  }
  return 0;
}
