#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "curvewave/errors.hpp"
#include "curvewave/observables.hpp"

using namespace curvewave;
using namespace curvewave::observables;
using packet::cplx;

namespace {

constexpr double pi = std::numbers::pi;

// Frame from an arbitrary field via a plain DFT in theta (independent of FFTW).
template <class F>
FieldFrame frame_from(const packet::GridSpec& g, F&& psi) {
  FieldFrame f;
  f.grid = g;
  f.max_order = g.n_theta / 2 - 1;
  const std::size_t width = 2 * static_cast<std::size_t>(f.max_order) + 1;
  f.values.resize(static_cast<std::size_t>(g.n_r) * g.n_theta);
  f.harmonics.assign(static_cast<std::size_t>(g.n_r) * width, cplx{});
  for (int i = 0; i < g.n_r; ++i) {
    const double r = g.r(i);
    for (int j = 0; j < g.n_theta; ++j)
      f.values[static_cast<std::size_t>(i) * g.n_theta + j] = psi(r * std::cos(g.theta(j)), r * std::sin(g.theta(j)));
    for (int m = -f.max_order; m <= f.max_order; ++m) {
      cplx s{};
      for (int j = 0; j < g.n_theta; ++j)
        s += f.values[static_cast<std::size_t>(i) * g.n_theta + j] * std::polar(1.0, -m * g.theta(j));
      f.harmonics[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(m + f.max_order)] =
          s * std::sqrt(2.0 * pi) / static_cast<double>(g.n_theta);
    }
  }
  return f;
}

// y -> -y: theta -> -theta, harmonic M -> -M.
FieldFrame mirror_y(const FieldFrame& f) {
  FieldFrame g = f;
  const int n = f.grid.n_theta;
  const std::size_t width = 2 * static_cast<std::size_t>(f.max_order) + 1;
  for (int i = 0; i < f.grid.n_r; ++i) {
    for (int j = 0; j < n; ++j)
      g.values[static_cast<std::size_t>(i) * n + j] = f.values[static_cast<std::size_t>(i) * n + (n - j) % n];
    for (std::size_t c = 0; c < width; ++c)
      g.harmonics[static_cast<std::size_t>(i) * width + c] = f.harmonics[static_cast<std::size_t>(i) * width + (width - 1 - c)];
  }
  return g;
}

packet::GridSpec small_grid() {
  packet::GridSpec g;
  g.n_r = 241;
  g.r_max = 6.0;
  g.n_theta = 128;
  return g;
}

}  // namespace

TEST_CASE("centroid of a symmetric distribution lies on its axis") {
  packet::PacketSpec s;
  s.m0 = 0;
  s.k0 = 40;
  s.sigma = 60;
  packet::GridSpec g;
  g.n_r = 300;
  g.r_max = 3.0;
  g.n_theta = 256;
  const auto f = packet::gaussian_frame(s, g, 0.0);
  const auto c = average_position(f, Mask::Whole, 2.0);
  CHECK(std::abs(c[0]) < 1e-10);
  CHECK(c[1] == doctest::Approx(s.start()[1]).epsilon(1e-4));
  CHECK_THROWS_AS(average_position(f, Mask::Exterior, 2.0), RangeError);
}

TEST_CASE("specular reflection about a shifted boundary point is recovered exactly") {
  packet::PacketSpec spec;
  spec.m0 = 75;
  spec.k0 = 75;
  const double chi = spec.chi(), R = spec.radius, l = 0.02;
  const double phi = l / R;
  const Point d{std::sin(chi), std::cos(chi)};
  const Point st = spec.start();
  const Point P{R * std::sin(phi), R * std::cos(phi)};
  const Point u{std::sin(chi - phi), -std::cos(chi - phi)};
  std::vector<TrajectorySample> pre, post;
  for (double t : {0.4, 0.5, 0.6}) pre.push_back({t, {st[0] + t * d[0], st[1] + t * d[1]}, Mask::Whole});
  for (double t : {1.4, 1.5, 1.6}) post.push_back({t, {P[0] + (t - 1.0) * u[0], P[1] + (t - 1.0) * u[1]}, Mask::Interior});
  const auto fit = gh_fit(pre, post, spec);
  CHECK(fit.l_gh == doctest::Approx(l).epsilon(1e-9));
  CHECK(fit.chi_r_factor == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.delay == doctest::Approx(l / (75.0 / R)).epsilon(1e-9));

  SUBCASE("mirror image gives the same shift") {
    packet::PacketSpec ms = spec;
    ms.m0 = -75;
    auto flip = [](std::vector<TrajectorySample> v) {
      for (auto& s : v) s.position[0] = -s.position[0];
      return v;
    };
    const auto mf = gh_fit(flip(pre), flip(post), ms);
    CHECK(mf.l_gh == doctest::Approx(fit.l_gh).epsilon(1e-12));
    CHECK(mf.chi_r_factor == doctest::Approx(fit.chi_r_factor).epsilon(1e-12));
  }
  SUBCASE("rotated impact point gives the same shift") {
    packet::PacketSpec rs = spec;
    rs.impact_angle = 0.7;
    const Orientation o = Orientation::of(rs);
    auto rot = [&](std::vector<TrajectorySample> v) {
      for (auto& s : v) s.position = o.to_world(s.position);
      return v;
    };
    const auto rf = gh_fit(rot(pre), rot(post), rs);
    CHECK(rf.l_gh == doctest::Approx(l).epsilon(1e-9));
  }
  SUBCASE("scattered samples are rejected") {
    post[1].position[0] += 0.1;
    CHECK_THROWS_AS(gh_fit(pre, post, spec), FitError);
  }
}

TEST_CASE("emission origin of a track through the image point has zero delay") {
  const double R = 2.0, alpha = -0.045, delta = 0.3;
  const Point target{-(R + delta) * std::sin(alpha), (R + delta) * std::cos(alpha)};
  const Point v{0.9, 0.05};
  std::vector<TrajectorySample> track;
  for (double t : {7.5, 10.0}) track.push_back({t, {target[0] + (t - 1.0) * v[0], target[1] + (t - 1.0) * v[1]}, Mask::Exterior});
  const auto eo = emission_origin(track, alpha, delta, R);
  CHECK(std::abs(eo.delay) < 1e-12);
  CHECK(eo.target[0] == doctest::Approx(target[0]));
  CHECK_FALSE(eo.speed_warning);
  track.push_back({12.0, {target[0] + 20.0 * v[0], target[1] + 20.0 * v[1]}, Mask::Exterior});
  CHECK(emission_origin(track, alpha, delta, R).speed_warning);
}

TEST_CASE("plane wave Husimi equals 2 sqrt(pi mu) exp(-mu k_h^2)") {
  const auto g = small_grid();
  const double k = 4.0, a = 0.3;  // propagation angle relative to the line normal at alpha = 0
  const auto f = frame_from(g, [&](double x, double y) { return std::polar(1.0, k * (x * std::cos(a) + y * std::sin(a))); });
  HusimiGrid hg;
  hg.d_lo = 2.0;
  hg.d_hi = 2.5;
  hg.d_step = 0.1;
  hg.h_lo = -0.5;
  hg.h_hi = 0.5;
  hg.h_step = 0.1;
  hg.mu = 0.15 * 0.15 / 2.0;
  const auto h = emission_husimi(f, 0.0, hg, 2.0);
  const double kh = k * std::sin(a);
  const double expect = 2.0 * std::sqrt(pi * hg.mu) * std::exp(-hg.mu * kh * kh);
  for (int i = 0; i < h.n_d; ++i)
    for (int j = 0; j < h.n_h; ++j) CHECK(h.at(i, j) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("mirroring the field flips alpha and h") {
  const auto g = small_grid();
  const auto f = frame_from(g, [](double x, double y) {
    const double dx = x - 3.2, dy = y - 0.7;
    return std::exp(-4.0 * (dx * dx + dy * dy)) * std::polar(1.0, 5.0 * x + 1.5 * y);
  });
  const auto m = mirror_y(f);
  HusimiGrid hg;
  hg.d_lo = 2.5;
  hg.d_hi = 4.0;
  hg.d_step = 0.05;
  hg.h_lo = -1.5;
  hg.h_hi = 1.5;
  hg.h_step = 0.05;
  const auto a = emission_husimi(f, 0.12, hg, 2.0);
  const auto b = emission_husimi(m, -0.12, hg, 2.0);
  double peak = 0.0, worst = 0.0;
  for (int i = 0; i < a.n_d; ++i)
    for (int j = 0; j < a.n_h; ++j) {
      peak = std::max(peak, a.at(i, j));
      worst = std::max(worst, std::abs(a.at(i, j) - b.at(i, a.n_h - 1 - j)));
    }
  CHECK(worst <= 1e-10 * peak);
  CHECK(a.strength == doctest::Approx(b.strength).epsilon(1e-10));
  CHECK(a.h0 == doctest::Approx(-b.h0).epsilon(1e-8));

  const auto alphas = alpha_grid(-0.2, 0.2, 0.05);
  const auto da = tunneling_direction(f, f, alphas, hg, 2.0);
  const auto db = tunneling_direction(m, m, alphas, hg, 2.0);
  CHECK(da.alpha_max_f == doctest::Approx(-db.alpha_max_f).epsilon(1e-8));
}

TEST_CASE("Husimi serial and parallel are bitwise identical") {
  const auto g = small_grid();
  const auto f = frame_from(g, [](double x, double y) { return std::exp(-(x - 3.0) * (x - 3.0) - y * y) * std::polar(1.0, 3.0 * x); });
  HusimiGrid hg;
  hg.d_lo = 2.0;
  hg.d_hi = 4.0;
  hg.h_lo = -1.0;
  hg.h_hi = 1.0;
  const auto s = emission_husimi(f, 0.05, hg, 2.0, {}, false, Exec::Serial);
  const auto p = emission_husimi(f, 0.05, hg, 2.0, {}, false, Exec::Parallel, 4);
  REQUIRE(s.values.size() == p.values.size());
  CHECK(std::memcmp(s.values.data(), p.values.data(), s.values.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(&s.strength, &p.strength, sizeof(double)) == 0);
}

TEST_CASE("transmission angle of a radial track is zero") {
  std::vector<TrajectorySample> track;
  const double ang = 0.3;
  for (double t : {1.0, 1.2, 1.4}) {
    const double r = 2.2 + t;
    track.push_back({t, {r * std::sin(ang), r * std::cos(ang)}, Mask::Exterior});
  }
  CHECK(transmission_angle_deg(track, 2.0) == doctest::Approx(0.0).epsilon(1e-6));
  // A track tilted by 30 degrees from the normal where it crosses the circle.
  track.clear();
  const Point exit{0.0, 2.0};
  const Point dir{std::sin(pi / 6), std::cos(pi / 6)};
  for (double t : {0.1, 0.2, 0.3}) track.push_back({t, {exit[0] + t * dir[0], exit[1] + t * dir[1]}, Mask::Exterior});
  CHECK(transmission_angle_deg(track, 2.0) == doctest::Approx(30.0).epsilon(1e-9));
}

TEST_CASE("interior fraction and lobe edge") {
  packet::PacketSpec s;
  s.m0 = 0;
  s.k0 = 40;
  s.sigma = 60;
  packet::GridSpec g;
  g.n_r = 300;
  g.r_max = 3.0;
  g.n_theta = 256;
  const auto f = packet::gaussian_frame(s, g, 0.0);
  const double total = f.probability(0.0, 2.0);
  CHECK(interior_fraction(f, 2.0, total) == doctest::Approx(1.0));
  CHECK_THROWS_AS(interior_fraction(f, 2.0, 0.0), DomainError);
}
