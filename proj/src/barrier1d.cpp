#include "curvewave/barrier1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "curvewave/corefn.hpp"
#include "curvewave/errors.hpp"

namespace curvewave::barrier1d {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

void check_step_domain(double e, double v0) {
  if (!(v0 > 0.0)) throw DomainError("step: V0 must be positive");
  if (!(e > 0.0 && e < v0)) throw DomainError("step: requires 0 < E < V0, got E = " + std::to_string(e));
}

double wrap_to(double phase, double ref) { return phase + 2.0 * pi * std::round((ref - phase) / (2.0 * pi)); }

// Log-derivative of the exterior radial function at R (with respect to r).
cplx exterior_log_derivative(const ModifiedEffBarrier& bar, double e) {
  const auto& p = bar.pot;
  const double r = p.radius;
  const double two_m = 2.0 * p.mass / (p.hbar * p.hbar);
  if (e < p.v0) {
    const double kappa = std::sqrt(two_m * (p.v0 - e));
    return kappa * corefn::bessel_k_triple(bar.m, kappa * r).log_derivative();
  }
  const double k_out = std::sqrt(two_m * (e - p.v0));
  if (!(k_out > 0.0)) throw DomainError("modified barrier: E sits exactly at V0");
  return k_out * corefn::hankel1_triple(bar.m, cplx{k_out * r, 0.0}).log_derivative();
}

PhaseCurve unwrap(std::vector<double> e, std::vector<double> phase, std::vector<double> modulus) {
  for (std::size_t i = 1; i < phase.size(); ++i) phase[i] = wrap_to(phase[i], phase[i - 1]);
  return {std::move(e), std::move(phase), std::move(modulus)};
}

std::vector<double> energy_grid(double e_lo, double e_hi, double step) {
  if (!(step > 0.0) || !(e_hi > e_lo)) throw DomainError("phase curve: invalid energy range");
  const int n = static_cast<int>(std::floor((e_hi - e_lo) / step + 1e-9)) + 1;
  if (n < 3) throw DomainError("phase curve: need at least three energies");
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i)] = e_lo + i * step;
  return e;
}

double interp(const PhaseCurve& c, double e) {
  const auto& x = c.energy;
  if (e < x.front() || e > x.back()) throw DomainError("phase curve: energy outside the sampled range");
  const auto it = std::upper_bound(x.begin(), x.end(), e);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()), x.size() - 1);
  const std::size_t j = i - 1;
  const double w = (e - x[j]) / (x[i] - x[j]);
  return c.phase[j] + w * (c.phase[i] - c.phase[j]);
}

// Composite trapezoid of f on [a, b] with n nodes.
template <class F>
cplx trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / (n - 1);
  cplx s{};
  for (int i = 0; i < n; ++i) s += ((i == 0 || i == n - 1) ? 0.5 : 1.0) * f(a + i * h);
  return s * h;
}

template <class F>
cplx window_integral(F&& integrand, const Window& w, const QuadratureOptions& q) {
  if (!(w.sigma > 0.0)) throw DomainError("window: sigma must be positive");
  if (q.nodes < 600) throw DomainError("window: at least 600 quadrature nodes required");
  const double a = w.k0 - 6.0 * w.sigma;
  const double b = w.k0 + 6.0 * w.sigma;
  auto f = [&](double k) { return std::exp(-(k - w.k0) * (k - w.k0) / (w.sigma * w.sigma)) * integrand(k); };
  const cplx coarse = trapezoid(f, a, b, q.nodes);
  const cplx fine = trapezoid(f, a, b, 2 * q.nodes - 1);
  const double scale = w.sigma * std::sqrt(pi);
  if (std::abs(fine - coarse) > q.tolerance * scale)
    throw ConvergenceError("tunneling packet: quadrature changed by " + std::to_string(std::abs(fine - coarse) / scale) +
                           " on doubling");
  return fine;
}

}  // namespace

double step_phase(double e, double v0) {
  check_step_domain(e, v0);
  return 2.0 * std::atan(std::sqrt(e / (v0 - e))) - pi;
}

double wigner_delay(double e, double v0, double hbar) {
  check_step_domain(e, v0);
  return hbar / v0 * (std::sqrt((v0 - e) / e) + std::sqrt(e / (v0 - e)));
}

// ------------------------------------------------------------ modified barrier

double ModifiedEffBarrier::plateau_level() const {
  if (plateau >= 0.0) return plateau;
  return pot.hbar * pot.hbar * m * m / (2.0 * pot.mass * pot.radius * pot.radius);
}

ModifiedReflection reflection_modified(const ModifiedEffBarrier& bar, double e) {
  bar.pot.validate();
  if (bar.m < 0) throw DomainError("modified barrier: m must be non-negative");
  const double floor = bar.plateau_level();
  if (!(e > floor)) throw DomainError("modified barrier: E must exceed the plateau " + std::to_string(floor));
  ModifiedReflection out;
  out.q = std::sqrt(2.0 * bar.pot.mass * (e - floor)) / bar.pot.hbar;
  const cplx l = exterior_log_derivative(bar, e);
  out.f = (kI * out.q - l) / (kI * out.q + l);
  out.phi_r = std::arg(out.f);
  // Current of (1 + F) Z(r)/Z(R) at r = R over the incident current q.
  out.transmitted_flux = std::norm(1.0 + out.f) * l.imag() / out.q;
  return out;
}

GhTheory gh_theory(double m0, double k0, const PotentialSpec& pot) {
  pot.validate();
  const ModifiedEffBarrier bar{static_cast<int>(std::lround(std::abs(m0))), pot, -1.0};
  const double e0 = pot.hbar * pot.hbar * k0 * k0 / (2.0 * pot.mass);
  if (!(e0 < pot.v0)) throw DomainError("gh_theory: requires E0 < V0");
  auto slope = [&](double h) {
    const cplx up = reflection_modified(bar, e0 + h).f;
    const cplx dn = reflection_modified(bar, e0 - h).f;
    return std::arg(up / dn) / (2.0 * h);
  };
  const double h = 1e-3 * pot.v0;
  const double d1 = slope(h);
  const double d2 = slope(h / 2.0);
  GhTheory g;
  g.richardson = (4.0 * d2 - d1) / 3.0;
  if (std::abs(d1 - g.richardson) > 1e-3 * std::abs(g.richardson))
    throw ConvergenceError("gh_theory: finite difference not converged at step 1e-3 V0");
  g.delay = pot.hbar * d1;
  g.delay_s0 = g.delay * k0;
  g.l_gh = pot.hbar * std::abs(m0) / (pot.mass * pot.radius) * g.delay;
  return g;
}

// ------------------------------------------------------------ rectangular

void RectBarrier::validate() const {
  if (!(x_a <= x_b)) throw DomainError("rect barrier: requires x_a <= x_b");
  if (!(v_min < v_max)) throw DomainError("rect barrier: requires v_min < v_max");
  if (!(hbar > 0.0 && mass > 0.0)) throw DomainError("rect barrier: hbar and mass must be positive");
}

namespace {

// Two-interface matching; the exit wavenumber may be imaginary (closed exit).
void rect_solve(const RectBarrier& bar, double e, cplx& t, cplx& r, double& k, cplx& k_exit) {
  bar.validate();
  if (!(e > 0.0)) throw DomainError("rect barrier: E must be positive");
  const double c = 2.0 * bar.mass / (bar.hbar * bar.hbar);
  k = std::sqrt(c * e);
  k_exit = std::sqrt(cplx{c * (e - bar.v_min), 0.0});
  const cplx q = std::sqrt(cplx{c * (e - bar.v_max), 0.0});

  // (psi, psi') carried from x_b back to x_a; sin(qw)/q stays regular at the barrier top.
  const double w = bar.x_b - bar.x_a;
  const cplx qw = q * w;
  const cplx cs = std::cos(qw);
  const cplx sn = std::abs(qw) < 1e-8 ? w * (1.0 - qw * qw / 6.0) : std::sin(qw) / q;
  const cplx psi_b = 1.0, dpsi_b = kI * k_exit;
  const cplx psi_a = cs * psi_b - sn * dpsi_b;
  const cplx dpsi_a = q * q * sn * psi_b + cs * dpsi_b;
  const cplx a0 = 0.5 * (psi_a + dpsi_a / (kI * k));
  const cplx b0 = 0.5 * (psi_a - dpsi_a / (kI * k));
  t = 1.0 / a0;
  r = b0 / a0;
}

}  // namespace

RectScattering rect_transmission(const RectBarrier& bar, double e) {
  if (!(e > bar.v_min)) throw DomainError("rect barrier: E must exceed v_min for a propagating exit");
  RectScattering out;
  cplx k_exit;
  rect_solve(bar, e, out.t, out.r, out.k, k_exit);
  out.k_exit = k_exit.real();
  out.phi_t = std::arg(out.t);
  out.phi_r = std::arg(out.r);
  out.flux_error = std::norm(out.r) + out.k_exit / out.k * std::norm(out.t) - 1.0;
  return out;
}

cplx rect_reflection(const RectBarrier& bar, double e) {
  cplx t, r, k_exit;
  double k;
  rect_solve(bar, e, t, r, k, k_exit);
  return r;
}

// ------------------------------------------------------------ phase curves

double PhaseCurve::total_variation() const {
  double tv = 0.0;
  for (std::size_t i = 1; i < phase.size(); ++i) tv += std::abs(phase[i] - phase[i - 1]);
  return tv;
}

PhaseCurve rect_phase_curve(const RectBarrier& bar, Coefficient which, double e_lo, double e_hi, double step) {
  auto e = energy_grid(e_lo, e_hi, step);
  std::vector<double> ph(e.size()), mod(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const cplx c = which == Coefficient::Transmission ? rect_transmission(bar, e[i]).t : rect_reflection(bar, e[i]);
    ph[i] = std::arg(c);
    mod[i] = std::abs(c);
  }
  return unwrap(std::move(e), std::move(ph), std::move(mod));
}

PhaseCurve modified_phase_curve(const ModifiedEffBarrier& bar, double e_lo, double e_hi, double step) {
  auto e = energy_grid(e_lo, e_hi, step);
  std::vector<double> ph(e.size()), mod(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto s = reflection_modified(bar, e[i]);
    ph[i] = s.phi_r;
    mod[i] = std::abs(s.f);
  }
  return unwrap(std::move(e), std::move(ph), std::move(mod));
}

double delay_from_phase(const PhaseCurve& curve, double e0, double hbar) {
  const auto& x = curve.energy;
  const auto& p = curve.phase;
  if (x.size() < 3) throw DomainError("delay_from_phase: curve too short");
  if (e0 < x[1] || e0 > x[x.size() - 2]) throw DomainError("delay_from_phase: E0 too close to the curve ends");
  auto d = [&](std::size_t i) {
    for (std::size_t j = i - 1; j <= i; ++j)
      if (std::abs(p[j + 1] - p[j]) > pi / 2.0) throw RangeError("delay_from_phase: unwrap discontinuity near E0");
    return (p[i + 1] - p[i - 1]) / (x[i + 1] - x[i - 1]);
  };
  const auto it = std::upper_bound(x.begin(), x.end(), e0);
  std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - x.begin()), 2, x.size() - 2);
  const std::size_t lo = hi - 1;
  const double w = std::clamp((e0 - x[lo]) / (x[hi] - x[lo]), 0.0, 1.0);
  return hbar * ((1.0 - w) * d(lo) + w * d(hi));
}

double delay_from_phase_secant(const PhaseCurve& curve, double e_lo, double e_hi, double hbar) {
  if (!(e_hi > e_lo)) throw DomainError("delay_from_phase_secant: empty window");
  return hbar * (interp(curve, e_hi) - interp(curve, e_lo)) / (e_hi - e_lo);
}

// ------------------------------------------------------------ 1D packets

cplx tunneling_packet_1d(const Window& w, const RectBarrier& bar, double x, double t, const QuadratureOptions& q) {
  bar.validate();
  if (x < bar.x_b) throw DomainError("tunneling packet: x must lie beyond x_b");
  const double c = bar.hbar * bar.hbar / (2.0 * bar.mass);
  return window_integral(
      [&](double k) -> cplx {
        const double e = c * k * k;
        if (!(k > 0.0) || !(e > bar.v_min)) return {};
        const auto s = rect_transmission(bar, e);
        return s.t * std::exp(kI * (s.k_exit * (x - bar.x_b) - e * t / bar.hbar));
      },
      w, q);
}

cplx tunneling_packet_1d(const Window& w, const ModifiedEffBarrier& bar, double x, double t,
                         const QuadratureOptions& q) {
  const auto& p = bar.pot;
  if (x < p.radius) throw DomainError("tunneling packet: x must lie outside R");
  const double floor = bar.plateau_level();
  const double c = p.hbar * p.hbar / (2.0 * p.mass);
  return window_integral(
      [&](double k) -> cplx {
        const double e = floor + c * k * k;
        if (!(k > 0.0) || !(e > p.v0 * (1.0 + 1e-12))) return {};
        const auto s = reflection_modified(bar, e);
        const double k_out = std::sqrt(2.0 * p.mass * (e - p.v0)) / p.hbar;
        return (1.0 + s.f) * corefn::hankel1_ratio(bar.m, cplx{k_out * x, 0.0}, cplx{k_out * p.radius, 0.0}) *
               std::exp(-kI * e * t / p.hbar);
      },
      w, q);
}

double peak_time(const std::function<cplx(double)>& psi_of_t, double t_lo, double t_hi, int scan) {
  if (!(t_hi > t_lo) || scan < 3) throw DomainError("peak_time: invalid scan");
  const double h = (t_hi - t_lo) / (scan - 1);
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i < scan; ++i) {
    const double v = std::norm(psi_of_t(t_lo + i * h));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double a = t_lo + std::max(0, best - 1) * h;
  const double b = t_lo + std::min(scan - 1, best + 1) * h;
  const auto r = boost::math::tools::brent_find_minima([&](double t) { return -std::norm(psi_of_t(t)); }, a, b, 40);
  return r.first;
}

void write_phase_csv(std::ostream& os, const PhaseCurve& curve) {
  os << "E,phase,abs\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.energy.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g\n", curve.energy[i], curve.phase[i], curve.modulus[i]);
    os << buf;
  }
}

void write_packet_csv(std::ostream& os, const std::function<cplx(double)>& psi_of_x, double x_lo, double x_hi,
                      int samples) {
  if (samples < 2) throw DomainError("packet csv: need at least two samples");
  os << "x,prob\n";
  char buf[64];
  for (int i = 0; i < samples; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (samples - 1);
    std::snprintf(buf, sizeof buf, "%.10g,%.12g\n", x, std::norm(psi_of_x(x)));
    os << buf;
  }
}

}  // namespace curvewave::barrier1d
