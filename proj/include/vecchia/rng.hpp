#pragma once

#include <cstdint>
#include <random>

namespace vecchia {

// Portable deterministic generator. The engine is std::mt19937_64, whose
// output sequence is fixed by the C++ standard; the derived variates below
// are computed by hand because the standard distributions are
// implementation-defined and differ across library vendors.
//
//   uniform01: top 53 bits of one draw, scaled by 2^-53, in [0, 1)
//   below(n):  Lemire's multiply-shift with rejection, exact uniform on [0, n)
//   normal:    Box-Muller on two uniform01 draws, both outputs used in turn
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vecchia
