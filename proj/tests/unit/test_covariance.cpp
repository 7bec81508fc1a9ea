#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vecchia/error.hpp"
#include "vecchia/linalg.hpp"

using namespace vecchia;
using namespace vecchia::linalg;

namespace {

Matrix covariance_of(CovarianceKind kind, std::span<const double> theta, const Matrix& z) {
  return kind == CovarianceKind::ExponentialAnisotropic ? exponential_anisotropic(theta, z)
                                                        : exponential_isotropic(theta, z);
}

}  // namespace

TEST_SUITE("covariance") {
  TEST_CASE("isotropic examples") {
    const std::vector<double> theta{2.0, 1.5, 0.5};
    const Matrix one(1, 2, std::vector<double>{0.3, -4.0});
    CHECK(exponential_isotropic(theta, one)(0, 0) == doctest::Approx(3.0).epsilon(1e-15));

    const Matrix two(2, 2, std::vector<double>{0, 0, 1, 0});
    const std::vector<double> unit{1.0, 1.0, 0.0};
    const Matrix K = exponential_isotropic(unit, two);
    CHECK(K(1, 0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(K(0, 1) == K(1, 0));

    const std::vector<double> noisy{1.0, 1.0, 0.3};
    const Matrix Kn = exponential_isotropic(noisy, two);
    CHECK(Kn(1, 0) == K(1, 0));
    CHECK(Kn(0, 0) == doctest::Approx(1.3));
  }

  TEST_CASE("anisotropic examples") {
    Rng rng(3);
    const Matrix z = testing::random_locs(rng, 12, 3);
    const std::vector<double> iso{1.7, 0.4, 0.2};
    const std::vector<double> aniso{1.7, 0.4, 0.4, 0.4, 0.2};
    const Matrix Ki = exponential_isotropic(iso, z);
    const Matrix Ka = exponential_anisotropic(aniso, z);
    for (std::size_t a = 0; a < 12; ++a) {
      for (std::size_t b = 0; b < 12; ++b) CHECK(Ka(a, b) == doctest::Approx(Ki(a, b)).epsilon(1e-14));
    }

    const Matrix two(2, 2, std::vector<double>{2, 0, 0, 0});
    const std::vector<double> theta{1, 2, 1, 0};
    CHECK(exponential_anisotropic(theta, two)(1, 0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    // swapping axes together with their ranges
    const std::vector<double> t3{1.2, 0.3, 0.7, 0.1, 0.05};
    const std::vector<double> t3_swapped{1.2, 0.1, 0.7, 0.3, 0.05};
    Matrix zs = z;
    for (std::size_t a = 0; a < 12; ++a) std::swap(zs(a, 0), zs(a, 2));
    const Matrix K1 = exponential_anisotropic(t3, z);
    const Matrix K2 = exponential_anisotropic(t3_swapped, zs);
    for (std::size_t a = 0; a < 12; ++a) {
      for (std::size_t b = 0; b < 12; ++b) CHECK(K1(a, b) == doctest::Approx(K2(a, b)).epsilon(1e-14));
    }
  }

  TEST_CASE("derivative examples") {
    const Matrix two(2, 2, std::vector<double>{0, 0, 1, 0});
    const std::vector<double> theta{2.0, 1.0, 0.0};
    const auto D = d_exponential(theta, two, CovarianceKind::ExponentialIsotropic);
    REQUIRE(D.size() == 3);
    CHECK(D[2](0, 0) == 2.0);
    CHECK(D[2](1, 1) == 2.0);
    CHECK(D[2](1, 0) == 0.0);

    const std::vector<double> unit{1.0, 1.0, 0.0};
    const auto Du = d_exponential(unit, two, CovarianceKind::ExponentialIsotropic);
    CHECK(Du[1](1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(Du[1](0, 0) == 0.0);
  }

  TEST_CASE("structural derivative identities") {
    Rng rng(17);
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic}) {
      const Matrix z = testing::random_locs(rng, 9, 2);
      const auto params = testing::random_params(rng, kind, 2);
      const Matrix K = covariance_of(kind, params.theta, z);
      const auto D = d_exponential(params.theta, z, kind);
      const double s2 = params.sigma2();
      for (std::size_t a = 0; a < 9; ++a) {
        for (std::size_t b = 0; b < 9; ++b) {
          CHECK(D[0](a, b) == doctest::Approx(K(a, b) / s2).epsilon(1e-14));
          CHECK(D.back()(a, b) == (a == b ? s2 : 0.0));
        }
      }
    }
  }

  TEST_CASE("derivatives match central finite differences (100 draws per family)") {
    Rng rng(23);
    for (const auto kind : {CovarianceKind::ExponentialIsotropic, CovarianceKind::ExponentialAnisotropic}) {
      for (int draw = 0; draw < 100; ++draw) {
        const std::size_t d = 1 + rng.below(3);
        const std::size_t k = 1 + rng.below(12);
        const Matrix z = testing::random_locs(rng, k, d);
        const auto params = testing::random_params(rng, kind, d);
        const auto D = d_exponential(params.theta, z, kind);
        for (std::size_t j = 0; j < params.nparms(); ++j) {
          const double h = 1e-6 * params.theta[j];
          auto up = params.theta;
          auto down = params.theta;
          up[j] += h;
          down[j] -= h;
          const Matrix Ku = covariance_of(kind, up, z);
          const Matrix Kd = covariance_of(kind, down, z);
          for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
              const double fd = (Ku(a, b) - Kd(a, b)) / (2 * h);
              const double an = D[j](a, b);
              // rounding in the difference quotient itself
              const double noise = 1e-15 * std::abs(Ku(a, b)) / h;
              CHECK_MESSAGE(std::abs(an - fd) <= 1e-5 * std::max(std::abs(an), std::abs(fd)) + noise,
                            "entry (" << a << ", " << b << "), parameter " << j);
            }
          }
        }
      }
    }
  }

  TEST_CASE("symmetric and positive definite for distinct points") {
    Rng rng(31);
    for (int draw = 0; draw < 50; ++draw) {
      const std::size_t k = 2 + rng.below(30);
      const Matrix z = testing::random_locs(rng, k, 2);
      auto params = testing::random_params(rng, CovarianceKind::ExponentialIsotropic, 2);
      params.theta.back() = 0.0;
      const Matrix K = exponential_isotropic(params.theta, z);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) CHECK(K(a, b) == K(b, a));
      }
      CHECK_NOTHROW(cholesky(K));
    }
  }

  TEST_CASE("registry") {
    CHECK(covariance_registry("exponential_isotropic").arity(2) == 3);
    CHECK(covariance_registry("exponential_anisotropic").arity(3) == 5);
    CHECK(covariance_registry("exponential_sphere").arity(2) == 3);
    try {
      covariance_registry("matern");
      FAIL("expected UnknownFamily");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownFamily);
    }
    for (const char* name : {"exponential_isotropic", "exponential_anisotropic", "exponential_sphere"}) {
      CHECK(to_string(parse_covariance_kind(name)) == name);
    }
  }

  TEST_CASE("sphere family is isotropic on the embedding") {
    Rng rng(5);
    const Matrix ll = testing::random_lonlat(rng, 15);
    const CovarianceFamily sphere = covariance_registry("exponential_sphere");
    const Matrix z = sphere.prepare_locations(ll);
    REQUIRE(z.cols() == 3);
    const std::vector<double> theta{1.3, 0.4, 0.1};
    const Matrix expected = exponential_isotropic(theta, embed_lonlat(ll));
    for (std::size_t a = 0; a < 15; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        CHECK(sphere.entry(theta.data(), z.row(a).data(), z.row(b).data(), 3, a == b) == expected(a, b));
      }
    }
  }
}
