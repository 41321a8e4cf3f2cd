#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "curvewave/errors.hpp"
#include "curvewave/packet.hpp"

using namespace curvewave;
using packet::cplx;

namespace {

struct Small {
  spectrum::PotentialSpec pot;
  packet::PacketSpec spec;
  spectrum::ModeTable table;
  packet::Expansion expansion;
  packet::GridSpec grid;

  Small() {
    spec.m0 = 20;
    spec.k0 = 30;
    spec.sigma = 40;
    table = spectrum::solve_table(pot, 0, 60, 60.0, 0);
    packet::ExpandOptions o;
    o.check_coverage = false;
    expansion = packet::expand(spec, table, 1e-7, o);
    grid.n_r = 260;
    grid.r_max = 2.6;
    grid.n_theta = 256;
  }
};

Small& small() {
  static Small s;
  return s;
}

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (auto x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("free Gaussian is normalised and centred on the launch point") {
  packet::PacketSpec s;
  s.m0 = 30;
  s.k0 = 40;
  s.sigma = 60;
  s.impact_angle = 0.4;
  const auto st = s.start();
  double norm = 0.0, mx = 0.0, my = 0.0;
  const double h = 0.005;
  for (double x = st[0] - 1.5; x <= st[0] + 1.5; x += h)
    for (double y = st[1] - 1.5; y <= st[1] + 1.5; y += h) {
      const double p = std::norm(packet::gaussian_free(s, x, y, 0.0)) * h * h;
      norm += p;
      mx += p * x;
      my += p * y;
    }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mx / norm == doctest::Approx(st[0]).epsilon(1e-6));
  CHECK(my / norm == doctest::Approx(st[1]).epsilon(1e-6));
  const auto imp = s.impact();
  CHECK(std::hypot(imp[0], imp[1]) == doctest::Approx(s.radius));
  CHECK(s.chi() == doctest::Approx(std::asin(30.0 / 80.0)));
}

TEST_CASE("reconstruction reproduces the Gaussian") {
  auto& f = small();
  packet::ProfileCache cache(f.expansion, f.table, f.grid);
  const auto rec = packet::reconstruct(cache, f.spec);
  const auto ref = packet::gaussian_frame(f.spec, f.grid, 0.0);
  CHECK(packet::fidelity(rec, ref, f.pot.radius) > 0.999);
  // Off-grid evaluation agrees with the node values.
  const double r = f.grid.r(100), th = f.grid.theta(17);
  CHECK(std::abs(rec.at(r * std::cos(th), r * std::sin(th)) - rec.value(100, 17)) < 1e-9 * max_abs(rec.values));
}

TEST_CASE("bound subspace norm does not exceed the packet norm") {
  auto& f = small();
  packet::ExpandOptions o;
  o.check_coverage = false;
  const auto all = packet::expand(f.spec, f.table, 0.0, o);
  CHECK(all.bound_weight <= 1.0 + 1e-6);
  CHECK(all.bound_weight > 0.99);
}

TEST_CASE("serial and parallel kernels are bitwise identical") {
  auto& f = small();
  packet::ExpandOptions os, op;
  os.check_coverage = op.check_coverage = false;
  os.exec = Exec::Serial;
  op.exec = Exec::Parallel;
  op.jobs = 4;
  const auto es = packet::expand(f.spec, f.table, 1e-7, os);
  const auto ep = packet::expand(f.spec, f.table, 1e-7, op);
  REQUIRE(es.raw.size() == ep.raw.size());
  for (std::size_t i = 0; i < es.raw.size(); ++i)
    CHECK(std::memcmp(&es.raw[i].coeff, &ep.raw[i].coeff, sizeof(cplx)) == 0);

  packet::ProfileCache cs(es, f.table, f.grid, Exec::Serial);
  packet::ProfileCache cp(es, f.table, f.grid, Exec::Parallel, 4);
  bool same = true;
  for (std::size_t e = 0; e < es.entries.size(); ++e)
    for (int i = 0; i < f.grid.n_r; ++i) {
      const cplx a = cs.at(e, i), b = cp.at(e, i);
      same = same && std::memcmp(&a, &b, sizeof(cplx)) == 0;
    }
  CHECK(same);

  const auto fs = packet::evolve(cs, 1.3, f.spec, Exec::Serial);
  const auto fp = packet::evolve(cs, 1.3, f.spec, Exec::Parallel, 4);
  CHECK(same_bits(fs.values, fp.values));
  CHECK(same_bits(fs.harmonics, fp.harmonics));
}

TEST_CASE("evolution is linear in the coefficients and the identity at t = 0") {
  auto& f = small();
  packet::Expansion even = f.expansion, odd = f.expansion;
  std::erase_if(even.entries, [](const auto& e) { return e.m % 2 != 0; });
  std::erase_if(odd.entries, [](const auto& e) { return e.m % 2 == 0; });
  packet::ProfileCache c_all(f.expansion, f.table, f.grid);
  packet::ProfileCache c_even(even, f.table, f.grid);
  packet::ProfileCache c_odd(odd, f.table, f.grid);
  const auto a = packet::evolve(c_all, 0.8, f.spec);
  const auto b = packet::evolve(c_even, 0.8, f.spec);
  const auto c = packet::evolve(c_odd, 0.8, f.spec);
  const double scale = max_abs(a.values);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i] - c.values[i]));
  CHECK(worst <= 1e-12 * scale);

  packet::Expansion scaled = f.expansion;
  const cplx w{2.0, -1.0};
  for (auto& e : scaled.entries) e.coeff *= w;
  packet::ProfileCache c_scaled(scaled, f.table, f.grid);
  const auto d = packet::evolve(c_scaled, 0.8, f.spec);
  worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(d.values[i] - w * a.values[i]));
  CHECK(worst <= 1e-12 * scale * std::abs(w));

  const auto t0 = packet::evolve(c_all, 0.0, f.spec);
  const auto rec = packet::reconstruct(c_all, f.spec);
  worst = 0.0;
  for (std::size_t i = 0; i < t0.values.size(); ++i) worst = std::max(worst, std::abs(t0.values[i] - rec.values[i]));
  CHECK(worst <= 1e-12 * max_abs(rec.values));
}

TEST_CASE("probability is conserved by bound-only evolution") {
  auto& f = small();
  packet::Expansion bound = f.expansion;
  std::erase_if(bound.entries, [](const auto& e) { return e.cls != spectrum::ModeClass::Bound; });
  packet::GridSpec g = f.grid;
  g.r_max = 3.5;
  g.n_r = 350;
  packet::ProfileCache c(bound, f.table, g);
  const double p0 = packet::evolve(c, 0.0, f.spec).probability(0.0, g.r_max);
  const double p1 = packet::evolve(c, 2.0, f.spec).probability(0.0, g.r_max);
  CHECK(p1 == doctest::Approx(p0).epsilon(1e-6));
}

TEST_CASE("binary export round trip") {
  auto& f = small();
  const auto frame = packet::gaussian_frame(f.spec, f.grid, 0.0);
  packet::CartesianDescriptor d{11, 7, -1.0, 0.5, 0.2, 0.25};
  std::stringstream ss;
  packet::export_binary(ss, frame, d);
  CHECK(ss.str().size() == 64 + 11 * 7 * 16);
  CHECK(ss.str().rfind("curvewave-field v1", 0) == 0);
  const auto back = packet::import_binary(ss);
  CHECK(back.desc.nx == 11);
  CHECK(back.desc.ny == 7);
  CHECK(back.desc.dy == doctest::Approx(0.25));
  REQUIRE(back.values.size() == 77);
  CHECK(back.values[3 * 11 + 4] == frame.at(-1.0 + 4 * 0.2, 0.5 + 3 * 0.25));
}

TEST_CASE("invalid inputs") {
  auto& f = small();
  packet::PacketSpec bad = f.spec;
  bad.sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(packet::expand(f.spec, f.table, -1.0), DomainError);
  // The small table misses the packet's upper m edge at a strict threshold.
  spectrum::ModeTable narrow = spectrum::solve_table(f.pot, 15, 25, 40.0, 0);
  CHECK_THROWS_AS(packet::expand(f.spec, narrow, 1e-7), CoverageError);
}
