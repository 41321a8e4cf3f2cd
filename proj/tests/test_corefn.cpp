#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "curvewave/corefn.hpp"
#include "curvewave/errors.hpp"

using namespace curvewave;
using corefn::cplx;

namespace {

constexpr double pi = std::numbers::pi;

// Bessel's integral J_m(z) = (1/pi) int_0^pi cos(m t - z sin t) dt, exact for
// integer m and any complex z; the periodic trapezoid converges geometrically.
cplx j_integral(int m, cplx z) {
  auto f = [&](double t) { return std::cos(static_cast<double>(m) * t - z * std::sin(t)); };
  const int n = 4096;
  cplx sum{};
  for (int i = 0; i < n; ++i) sum += f(2.0 * pi * i / n);
  return sum / static_cast<double>(n);  // full period average equals the half-period integral over pi
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("real-argument values against Boost") {
  for (int m : {0, 1, 2, 7, 30, 120}) {
    for (double x : {0.3, 2.5, 11.0, 16.9, 17.1, 45.0, 113.0, 226.0}) {
      const double j = boost::math::cyl_bessel_j(m, x);
      const double y = boost::math::cyl_neumann(m, x);
      CAPTURE(m);
      CAPTURE(x);
      if (std::abs(j) > 1e-280) CHECK(rel(corefn::bessel_j(m, {x, 0.0}), {j, 0.0}) < 1e-10);
      if (std::abs(y) < 1e280) CHECK(rel(corefn::hankel1(m, {x, 0.0}), {j, y}) < 1e-10);
      const double k = boost::math::cyl_bessel_k(m, x);
      if (k > 1e-280 && k < 1e280) CHECK(std::abs(corefn::bessel_k(m, x) - k) / k < 1e-10);
    }
  }
}

TEST_CASE("complex J against the Bessel integral") {
  for (int m : {0, 3, 20, 60}) {
    for (cplx z : {cplx{1.0, 0.5}, cplx{8.0, -1.5}, cplx{16.0, 2.0}, cplx{25.0, -0.01}, cplx{60.0, 3.0}}) {
      CAPTURE(m);
      CAPTURE(z);
      const cplx ref = j_integral(m, z);
      if (std::abs(ref) < 1e-12 * std::exp(std::abs(z.imag()))) continue;  // cancellation in the oracle
      CHECK(rel(corefn::bessel_j(m, z), ref) < 1e-8);
    }
  }
}

TEST_CASE("Wronskian J H1' - J' H1 = 2i/(pi z)") {
  for (int m : {0, 1, 15, 75, 120, 200}) {
    for (cplx z : {cplx{3.0, 0.0}, cplx{16.5, -0.2}, cplx{17.5, 0.3}, cplx{113.0, -1e-6}, cplx{226.0, -2e-6},
                   cplx{240.0, -0.5}}) {
      CAPTURE(m);
      CAPTURE(z);
      const auto j = corefn::bessel_j_triple(m, z);
      const auto h = corefn::hankel1_triple(m, z);
      // Work with the scaled triples: J H' - J' H times exp(-(sj + sh)).
      const cplx w = 0.5 * (j.center * (h.below - h.above) - (j.below - j.above) * h.center);
      const cplx expect = 2.0 * cplx{0.0, 1.0} / (pi * z) * std::exp(-(j.log_scale + h.log_scale));
      CHECK(rel(w, expect) < 1e-8);
    }
  }
}

TEST_CASE("three-term recurrence Z_{m-1} + Z_{m+1} = (2m/z) Z_m") {
  for (int m : {1, 10, 75, 140}) {
    for (cplx z : {cplx{5.0, 0.1}, cplx{90.0, -0.3}, cplx{150.0, 0.0}}) {
      const auto j = corefn::bessel_j_triple(m, z);
      const auto h = corefn::hankel1_triple(m, z);
      CHECK(rel(j.below + j.above, 2.0 * m / z * j.center) < 1e-8);
      CHECK(rel(h.below + h.above, 2.0 * m / z * h.center) < 1e-8);
    }
  }
  for (int m : {1, 40, 120}) {
    for (double x : {0.5, 30.0, 180.0}) {
      const auto k = corefn::bessel_k_triple(m, x);
      CHECK(std::abs((k.above - k.below) - 2.0 * m / x * k.center) <= 1e-8 * std::abs(k.above));
    }
  }
}

TEST_CASE("ratios agree with direct quotients where both are representable") {
  const cplx a{40.0, -0.01}, b{35.0, -0.01};
  CHECK(rel(corefn::hankel1_ratio(30, a, b), corefn::hankel1(30, a) / corefn::hankel1(30, b)) < 1e-10);
  CHECK(std::abs(corefn::bessel_k_ratio(12, 9.0, 7.0) - boost::math::cyl_bessel_k(12, 9.0) /
                                                              boost::math::cyl_bessel_k(12, 7.0)) < 1e-10);
}

TEST_CASE("scaled forms survive where the plain value overflows") {
  const auto s = corefn::hankel1_scaled(400, {5.0, 0.0});
  CHECK(std::isfinite(s.mantissa.real()));
  CHECK(s.log_scale > 700.0);
  CHECK_THROWS_AS((void)s.value(), RangeError);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(corefn::hankel1(3, {0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(corefn::bessel_k(2, -1.0), DomainError);
  CHECK_THROWS_AS(corefn::bessel_j(-1, {1.0, 0.0}), DomainError);
}
