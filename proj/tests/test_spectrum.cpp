#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/math/tools/roots.hpp>

#include "curvewave/errors.hpp"
#include "curvewave/spectrum.hpp"

using namespace curvewave;
using spectrum::cplx;
using spectrum::ModeClass;
using spectrum::PotentialSpec;

namespace {

// Matching condition k J'(kR) K(kappa R) - kappa K'(kappa R) J(kR) from Boost.
double matching(int m, double k, const PotentialSpec& p) {
  const double kappa = std::sqrt(p.k_v() * p.k_v() - k * k);
  const double R = p.radius;
  return k * boost::math::cyl_bessel_j_prime(m, k * R) * boost::math::cyl_bessel_k(m, kappa * R) -
         kappa * boost::math::cyl_bessel_k_prime(m, kappa * R) * boost::math::cyl_bessel_j(m, k * R);
}

std::vector<double> oracle_roots(int m, const PotentialSpec& p) {
  std::vector<double> roots;
  const double step = 0.01;
  double a = step, fa = matching(m, a, p);
  for (double b = a + step; b < p.k_v() - 1e-9; b += step) {
    const double fb = matching(m, b, p);
    if (fa * fb < 0.0) {
      auto tol = [](double x, double y) { return std::abs(x - y) < 1e-13; };
      const auto r = boost::math::tools::bisect([&](double k) { return matching(m, k, p); }, a, b, tol);
      roots.push_back(0.5 * (r.first + r.second));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace

TEST_CASE("thresholds and effective potential") {
  PotentialSpec p;
  CHECK(p.k_v() == doctest::Approx(100.0));
  CHECK(p.k_b(120) == doctest::Approx(60.0));
  CHECK(p.k_t(120) == doctest::Approx(std::sqrt(100.0 * 100.0 + 60.0 * 60.0)));
  CHECK(spectrum::effective_potential(p, 10, 1.0) == doctest::Approx(50.0));
  CHECK(spectrum::effective_potential(p, 10, 2.5) == doctest::Approx(5000.0 + 8.0));
  CHECK_THROWS_AS(spectrum::effective_potential(p, 1, 0.0), DomainError);
  CHECK(spectrum::classify(p, 5, {50.0, 0.0}) == ModeClass::Bound);
  CHECK(spectrum::classify(p, 120, {113.0, -1e-6}) == ModeClass::Tunneling);
  CHECK(spectrum::classify(p, 120, {118.0, -0.1}) == ModeClass::Leaky);
}

TEST_CASE("bound modes match an independent bisection of the matching condition") {
  PotentialSpec p;
  for (int m : {0, 5, 37}) {
    const auto ref = oracle_roots(m, p);
    const auto modes = spectrum::find_bound_modes(p, m);
    CAPTURE(m);
    REQUIRE(modes.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(modes[i].k.real() == doctest::Approx(ref[i]).epsilon(1e-10));
      CHECK(modes[i].n == static_cast<int>(i) + 1);
    }
  }
}

TEST_CASE("bound-mode norm equals the radial quadrature") {
  PotentialSpec p;
  const int m = 5;
  const auto modes = spectrum::find_bound_modes(p, m);
  REQUIRE(modes.size() > 3);
  for (std::size_t i : {std::size_t{0}, std::size_t{3}}) {
    const auto& mode = modes[i];
    const double k = mode.k.real(), R = p.radius;
    const double kappa = std::sqrt(p.k_v() * p.k_v() - k * k);
    const double c = boost::math::cyl_bessel_j(m, k * R) / boost::math::cyl_bessel_k(m, kappa * R);
    using boost::math::quadrature::gauss_kronrod;
    const double in = gauss_kronrod<double, 61>::integrate(
        [&](double r) { const double j = boost::math::cyl_bessel_j(m, k * r); return r * j * j; }, 0.0, R, 15, 1e-13);
    const double out = gauss_kronrod<double, 61>::integrate(
        [&](double r) { const double v = c * boost::math::cyl_bessel_k(m, kappa * r); return r * v * v; }, R,
        R + 40.0 / kappa, 15, 1e-13);
    const double expect = std::numbers::pi * (in + out);
    CHECK(mode.norm.real() == doctest::Approx(expect).epsilon(1e-8));
    CHECK(std::abs(mode.norm.imag()) < 1e-12 * expect);
  }
}

TEST_CASE("the m=120 tunneling resonance near Re k = 113") {
  PotentialSpec p;
  const auto res = spectrum::find_resonances(p, 120, 112.0, 114.0);
  REQUIRE(!res.modes.empty());
  const auto& mode = res.modes.front();
  CHECK(std::abs(mode.k.real() - 113.0) < 0.1);
  CHECK(mode.k.imag() < 0.0);
  CHECK(mode.k.imag() > -1e-4);
  CHECK(mode.cls == ModeClass::Tunneling);
  CHECK(std::abs(spectrum::characteristic(p, 120, mode.k)) < 1e-8);
  CHECK(mode.gamma == doctest::Approx(-2.0 * mode.energy.imag()));
}

TEST_CASE("image distance of a resonance") {
  PotentialSpec p;
  auto mode = spectrum::make_mode(p, 120, 1, {113.0, -1e-6});
  const double k_out = std::sqrt(2.0 * (mode.energy.real() - p.v0));
  CHECK(spectrum::delta_j(mode, p) == doctest::Approx(120.0 / k_out - 2.0));
  auto bound = spectrum::make_mode(p, 5, 1, {50.0, 0.0});
  CHECK_THROWS_AS(spectrum::delta_j(bound, p), DomainError);
}

TEST_CASE("mode table round trip is bit exact and independent of the worker count") {
  PotentialSpec p;
  const auto a = spectrum::solve_table(p, 118, 122, 120.0, 1);
  const auto b = spectrum::solve_table(p, 118, 122, 120.0, 0);
  REQUIRE(a.modes.size() == b.modes.size());
  for (std::size_t i = 0; i < a.modes.size(); ++i) {
    CHECK(std::memcmp(&a.modes[i].k, &b.modes[i].k, sizeof(cplx)) == 0);
    CHECK(a.modes[i].m == b.modes[i].m);
    CHECK(a.modes[i].n == b.modes[i].n);
  }
  std::stringstream ss;
  spectrum::write_mode_table(ss, a);
  CHECK(ss.str().rfind("# curvewave-modes v1", 0) == 0);
  const auto back = spectrum::read_mode_table(ss);
  REQUIRE(back.modes.size() == a.modes.size());
  for (std::size_t i = 0; i < a.modes.size(); ++i) {
    CHECK(std::memcmp(&a.modes[i].k, &back.modes[i].k, sizeof(cplx)) == 0);
    CHECK(std::memcmp(&a.modes[i].norm, &back.modes[i].norm, sizeof(cplx)) == 0);
    CHECK(std::memcmp(&a.modes[i].c, &back.modes[i].c, sizeof(cplx)) == 0);
    CHECK(a.modes[i].cls == back.modes[i].cls);
  }
}

TEST_CASE("malformed tables are rejected") {
  std::stringstream bad("# not-a-table\n1 2 3\n");
  CHECK_THROWS_AS(spectrum::read_mode_table(bad), FormatError);
}
