#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hlsim/errors.hpp"
#include "hlsim/quadrature.hpp"
#include "oracles.hpp"

using namespace hlsim;

TEST_SUITE("quadrature") {
  TEST_CASE("integrand values at simple points") {
    CHECK(integrand_a({0, 0, 1}, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(integrand_a({0, 0, 1}, 0.0) == 0.0);
    const double a = std::exp(-1.0);
    CHECK(integrand_a({1, 0, 1}, a) == doctest::Approx(a * a / std::pow(2 * a * a, 2)).epsilon(1e-14));
    CHECK(integrand_b({0, 0, 1}, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrand_b({0, 0, 1}, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(integrand_b({2, 0, 1}, 0.0) == doctest::Approx(std::exp(6.0)).epsilon(1e-14));
  }

  TEST_CASE("integrands agree with direct formulas across the domain") {
    for (double A : {0.0, 0.7, 3.0, 12.0}) {
      for (double B : {0.0, 1.5, 8.0}) {
        for (double y : {0.0, 0.01, 0.3, 0.77, 1.0}) {
          const ProfileParams p{A, B, 1.2};
          CHECK(integrand_a(p, y) == doctest::Approx(oracle::integrand_a(A, B, y)).epsilon(1e-12));
          CHECK(integrand_b(p, y) == doctest::Approx(oracle::integrand_b(A, B, 1.2, y)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("peak_split matches a bisection oracle") {
    CHECK_FALSE(peak_split({0, 0, 1}).has_value());
    const auto s1 = peak_split({1, 0, 1});
    REQUIRE(s1.has_value());
    CHECK(*s1 == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    CHECK(*s1 == doctest::Approx(0.3678794).epsilon(1e-7));
    const auto s2 = peak_split({5, 3, 1});
    REQUIRE(s2.has_value());
    CHECK(*s2 == doctest::Approx(oracle::peak_root(5, 3)).epsilon(1e-12));
  }

  TEST_CASE("adaptive_integrate reproduces the origin values") {
    const auto a = adaptive_integrate(Integrand::A, {0, 0, 1}, 1e-12);
    const auto b = adaptive_integrate(Integrand::B, {0, 0, 1}, 1e-12);
    CHECK(a.value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b.value == doctest::Approx(0.25 + std::numbers::pi / 8.0).epsilon(1e-12));
    CHECK(b.value == doctest::Approx(0.6426990817).epsilon(1e-10));
    CHECK(a.evaluations > 0);
    CHECK(a.panels > 0);
    const auto c = adaptive_integrate(Integrand::A, {1, 0, 1}, 1e-12);
    CHECK(c.value == doctest::Approx(oracle::dA_b0(1.0)).epsilon(1e-11));
    CHECK(c.value == doctest::Approx(1.1971275).epsilon(1e-7));
  }

  TEST_CASE("rhs examples") {
    const Rates r1 = rhs({0, 0, 1}, 1e-12);
    CHECK(std::abs(r1.dA - 0.25) < 1e-10);
    CHECK(std::abs(r1.dB - (0.25 + std::numbers::pi / 8.0)) < 1e-10);
    const Rates r13 = rhs({0, 0, 1.3}, 1e-12);
    CHECK(std::abs(r13.dA - 0.25) < 1e-10);
    CHECK(std::abs(r13.dB - 0.4943839090) < 1e-10);
    const Rates r2 = rhs({1, 0, 1}, 1e-12);
    CHECK(r2.dA == doctest::Approx(oracle::dA_b0(1.0)).epsilon(1e-11));
    CHECK(r2.dB == doctest::Approx(oracle::dB_b0(1.0, 1.0)).epsilon(1e-11));
    CHECK(r2.dB == doctest::Approx(5.698).epsilon(1e-3));
  }

  TEST_CASE("oracle_rhs_b0 against independent closed forms") {
    for (double A : {0.0, 1.0}) {
      const Rates r = oracle_rhs_b0(A, 1.0);
      CHECK(r.dA == doctest::Approx(oracle::dA_b0(A)).epsilon(1e-14));
      CHECK(r.dB == doctest::Approx(oracle::dB_b0(A, 1.0)).epsilon(1e-14));
    }
    const Rates r = oracle_rhs_b0(0.0, 1.3);
    CHECK(r.dB == doctest::Approx(0.4943839090).epsilon(1e-10));
  }

  TEST_CASE("oracle equivalence at B = 0 within 10 tol") {
    const double tol = 1e-10;
    for (double A : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const Rates q = rhs({A, 0, 1.0}, tol);
      const Rates o = oracle_rhs_b0(A, 1.0);
      CHECK(std::abs(q.dA - o.dA) <= 10 * tol * std::max(1.0, o.dA));
      CHECK(std::abs(q.dB - o.dB) <= 10 * tol * std::max(1.0, o.dB));
    }
  }

  TEST_CASE("sharp peaks against a graded-mesh oracle") {
    struct Case {
      double A, B;
    };
    for (Case c : {Case{5, 3}, Case{3, 2}, Case{12, 9}, Case{20, 18.5}, Case{1.2, 0.4}}) {
      const double y0 = oracle::peak_root(c.A, c.B);
      const double ref_a = oracle::graded([&](double y) { return oracle::integrand_a(c.A, c.B, y); }, y0);
      const double ref_b = oracle::graded([&](double y) { return oracle::integrand_b(c.A, c.B, 1.0, y); }, y0);
      const Rates r = rhs({c.A, c.B, 1.0}, 1e-12);
      CAPTURE(c.A);
      CAPTURE(c.B);
      CHECK(r.dA == doctest::Approx(ref_a).epsilon(1e-9));
      CHECK(r.dB == doctest::Approx(ref_b).epsilon(1e-9));
    }
  }

  TEST_CASE("positivity of the rates") {
    for (double A : {0.0, 0.3, 2.0, 9.0, 40.0}) {
      for (double B : {0.0, 0.5, 5.0, 45.0, 300.0}) {
        const Rates r = rhs({A, B, 1.15});
        CHECK(r.dA > 0.0);
        CHECK(r.dB > 0.0);
      }
    }
  }

  TEST_CASE("A -> dA is strictly increasing at B = 0") {
    double prev = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double dA = rhs({0.25 * i, 0.0, 1.0}).dA;
      CHECK(dA > prev);
      prev = dA;
    }
  }

  TEST_CASE("halving tol stays within the previous error estimate") {
    for (double A : {0.0, 2.0, 6.0}) {
      for (double B : {0.0, 3.0, 7.0}) {
        for (auto f : {Integrand::A, Integrand::B}) {
          const ProfileParams p{A, B, 1.0};
          double tol = 1e-6;
          QuadratureResult prev = adaptive_integrate(f, p, tol);
          for (int i = 0; i < 8; ++i) {
            tol *= 0.5;
            const QuadratureResult next = adaptive_integrate(f, p, tol);
            CHECK(std::abs(next.value - prev.value) <= prev.error_estimate + 1e-15 * std::abs(prev.value));
            prev = next;
          }
        }
      }
    }
  }

  TEST_CASE("invalid arguments and an exhausted panel budget") {
    CHECK_THROWS_AS(adaptive_integrate(Integrand::A, {0, 0, 1}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rhs({0, 0, 0}), std::invalid_argument);
    QuadratureOptions tight;
    tight.max_panels = 3;
    CHECK_THROWS_AS(adaptive_integrate(Integrand::A, {12, 9, 1}, 1e-14, tight), NonConvergence);
  }
}
