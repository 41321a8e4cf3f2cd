#include "curvewave/spectrum.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "curvewave/corefn.hpp"
#include "curvewave/errors.hpp"
#include "curvewave/parallel.hpp"

namespace curvewave::spectrum {
namespace {

using std::numbers::pi;
using corefn::bessel_j_triple;
using corefn::bessel_k_triple;
using corefn::hankel1_triple;

constexpr int kNewtonIterations = 80;
constexpr double kDedupDistance = 1e-8;
constexpr double kResidualLimit = 1e-10;

// Bound-mode determinant with J and K in scaled form; the scale factors are
// positive so the sign is that of the true determinant.
double bound_determinant(const PotentialSpec& pot, int m, double k) {
  const double R = pot.radius;
  const double kv = pot.k_v();
  const double kappa = std::sqrt(std::max(kv * kv - k * k, 0.0));
  const auto J = bessel_j_triple(m, cplx{k * R, 0.0});
  const double j = J.center.real();
  const double jp = 0.5 * (J.below.real() - J.above.real());
  const auto K = bessel_k_triple(m, kappa * R);
  return jp - (kappa / k) * j * K.log_derivative();
}

struct NewtonEval {
  cplx g;
  cplx dg;
};

// g(k) = J'(kR) - (q/k) J(kR) L(qR) with L = H'/H; free of the poles that the
// ratio form J'/J - (q/k)L would have at zeros of J.
NewtonEval newton_eval(const PotentialSpec& pot, int m, cplx k) {
  const double R = pot.radius;
  const double kv = pot.k_v();
  const cplx z = k * R;
  const cplx q = std::sqrt(k * k - kv * kv);
  const cplx w = q * R;
  const auto J = bessel_j_triple(m, z);
  const cplx j = J.center;
  const cplx jp = 0.5 * (J.below - J.above);
  const double mm = static_cast<double>(m) * m;
  const cplx jpp = -jp / z - (1.0 - mm / (z * z)) * j;
  const auto H = hankel1_triple(m, w);
  const cplx L = H.log_derivative();
  const cplx Lp = -L / w - (1.0 - mm / (w * w)) - L * L;
  const cplx ratio = q / k;
  const cplx dratio = kv * kv / (q * k * k);
  NewtonEval e;
  e.g = jp - ratio * j * L;
  e.dg = R * jpp - dratio * j * L - ratio * R * jp * L - R * j * Lp;
  return e;
}

std::vector<std::pair<double, double>> sign_brackets(const std::vector<double>& grid,
                                                     const std::vector<double>& values) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (values[i] == 0.0) {
      out.emplace_back(grid[i], grid[i]);
    } else if (values[i] * values[i + 1] < 0.0) {
      out.emplace_back(grid[i], grid[i + 1]);
    }
  }
  return out;
}

std::vector<double> uniform_grid(double a, double b, double step) {
  std::vector<double> g;
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) g.push_back(a + (b - a) * i / n);
  g.push_back(b);
  return g;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void PotentialSpec::validate() const {
  if (!(radius > 0.0)) throw DomainError("potential radius must be positive");
  if (!(v0 > 0.0)) throw DomainError("potential step V0 must be positive");
  if (!(mass > 0.0) || !(hbar > 0.0)) throw DomainError("mass and hbar must be positive");
}

double PotentialSpec::k_v() const { return std::sqrt(2.0 * mass * v0) / hbar; }
double PotentialSpec::k_b(int m) const { return m / radius; }
double PotentialSpec::k_t(int m) const {
  const double kv = k_v();
  return std::sqrt(kv * kv + static_cast<double>(m) * m / (radius * radius));
}
cplx PotentialSpec::energy(cplx k) const { return hbar * hbar * k * k / (2.0 * mass); }

std::string to_string(ModeClass c) {
  switch (c) {
    case ModeClass::Bound: return "bound";
    case ModeClass::Tunneling: return "tunneling";
    case ModeClass::Leaky: return "leaky";
  }
  return "unknown";
}

ModeClass mode_class_from_string(const std::string& s) {
  if (s == "bound") return ModeClass::Bound;
  if (s == "tunneling") return ModeClass::Tunneling;
  if (s == "leaky") return ModeClass::Leaky;
  throw FormatError("unknown mode class '" + s + "'");
}

double effective_potential(const PotentialSpec& pot, int m, double r) {
  if (!(r > 0.0)) throw DomainError("effective_potential: r must be positive");
  const double centrifugal = pot.hbar * pot.hbar * m * m / (2.0 * pot.mass * r * r);
  return r < pot.radius ? centrifugal : pot.v0 + centrifugal;
}

cplx exterior_wavenumber(const PotentialSpec& pot, cplx k) {
  const double kv = pot.k_v();
  return std::sqrt(k * k - kv * kv);
}

ModeClass classify(const PotentialSpec& pot, int m, cplx k) {
  if (k.imag() == 0.0 && k.real() < pot.k_v()) return ModeClass::Bound;
  if (k.real() < pot.k_t(m)) return ModeClass::Tunneling;
  return ModeClass::Leaky;
}

cplx characteristic(const PotentialSpec& pot, int m, cplx k) {
  if (k == cplx{}) throw DomainError("characteristic: k must be non-zero");
  const double R = pot.radius;
  const double kv = pot.k_v();
  const auto J = bessel_j_triple(m, k * R);
  const cplx j = J.center;
  const cplx jp = 0.5 * (J.below - J.above);
  cplx ratio;
  cplx L;
  if (k.imag() == 0.0 && k.real() < kv) {
    const double kappa = std::sqrt(kv * kv - k.real() * k.real());
    ratio = kappa / k;
    L = bessel_k_triple(m, kappa * R).log_derivative();
  } else {
    const cplx q = exterior_wavenumber(pot, k);
    if (q == cplx{}) throw DomainError("characteristic: k at the step threshold k_V");
    ratio = q / k;
    L = hankel1_triple(m, q * R).log_derivative();
  }
  const cplx a = jp;
  const cplx b = ratio * j * L;
  const double scale = std::abs(a) + std::abs(b);
  if (scale == 0.0) return {};
  return (a - b) / scale;
}

BoundSearch find_bound_modes_detailed(const PotentialSpec& pot, int m) {
  pot.validate();
  if (m < 0) throw DomainError("find_bound_modes: negative m");
  BoundSearch out;
  const double kv = pot.k_v();
  const double lo = std::max(pot.k_b(m), 1e-9 * kv);
  const double hi = kv * (1.0 - 1e-13);
  if (lo >= hi) return out;

  auto f = [&](double k) { return bound_determinant(pot, m, k); };
  auto scan = [&](double step) {
    auto grid = uniform_grid(lo, hi, step);
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
    return sign_brackets(grid, vals);
  };
  auto coarse = scan(pi / (4.0 * pot.radius));
  const auto fine = scan(std::min(0.05, pi / pot.radius / 10.0));
  out.coarse_sign_changes = static_cast<int>(coarse.size());
  out.fine_sign_changes = static_cast<int>(fine.size());
  const auto& brackets = fine.size() > coarse.size() ? fine : coarse;

  int n = 0;
  for (const auto& [a, b] : brackets) {
    double root = a;
    if (a != b) {
      std::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(f, a, b, f(a), f(b),
                                                 boost::math::tools::eps_tolerance<double>(50), iters);
      root = 0.5 * (r.first + r.second);
    }
    out.modes.push_back(make_mode(pot, m, ++n, cplx{root, 0.0}));
  }
  return out;
}

std::vector<EigenMode> find_bound_modes(const PotentialSpec& pot, int m) {
  return find_bound_modes_detailed(pot, m).modes;
}

ResonanceSearch find_resonances(const PotentialSpec& pot, int m, double re_lo, double re_hi) {
  pot.validate();
  if (m < 0) throw DomainError("find_resonances: negative m");
  const double kv = pot.k_v();
  if (re_hi <= kv) throw DomainError("find_resonances: window must lie above k_V");
  ResonanceSearch out;
  const double lo = std::max({re_lo, kv * (1.0 + 1e-9), pot.k_b(m)});
  if (lo >= re_hi) return out;
  const double step = pi / (16.0 * pot.radius);
  const auto grid = uniform_grid(lo, re_hi + pi / (2.0 * pot.radius), step);
  std::vector<double> mag(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) mag[i] = std::abs(characteristic(pot, m, grid[i]));

  std::vector<double> seeds;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    if (mag[i] <= mag[i - 1] && mag[i] < mag[i + 1]) seeds.push_back(grid[i]);

  const double max_step = pi / (2.0 * pot.radius);
  std::vector<cplx> roots;
  for (double seed : seeds) {
    cplx k{seed, 0.0};
    cplx k_prev{};
    cplx g_prev{};
    bool have_prev = false;
    bool converged = false;
    for (int it = 0; it < kNewtonIterations; ++it) {
      NewtonEval e;
      try {
        e = newton_eval(pot, m, k);
      } catch (const Error&) {
        break;
      }
      cplx dk;
      if (std::isfinite(std::abs(e.dg)) && e.dg != cplx{}) {
        dk = e.g / e.dg;
      } else if (have_prev && e.g != g_prev) {
        dk = e.g * (k - k_prev) / (e.g - g_prev);  // secant fallback
      } else {
        dk = cplx{1e-6 * std::abs(k), 0.0};
      }
      if (std::abs(dk) > max_step) dk *= max_step / std::abs(dk);
      k_prev = k;
      g_prev = e.g;
      have_prev = true;
      k -= dk;
      if (std::abs(dk) <= 1e-14 * std::abs(k)) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      out.diagnostics.push_back({m, seed, k, "newton did not converge"});
      continue;
    }
    // Deep tunneling modes have |Im k| below the arithmetic noise floor.
    if (k.imag() > 0.0 && k.imag() < 1e-12 * std::abs(k)) k = cplx{k.real(), -0.0};
    if (k.real() <= kv) {
      out.diagnostics.push_back({m, seed, k, "converged below k_V (bound mode)"});
      continue;
    }
    if (k.imag() > 0.0) {
      out.diagnostics.push_back({m, seed, k, "converged to Im k > 0"});
      continue;
    }
    if (std::abs(k.imag()) >= k.real()) {
      out.diagnostics.push_back({m, seed, k, "rejected: |Im k| >= Re k"});
      continue;
    }
    if (k.real() < lo || k.real() > re_hi) continue;  // belongs to a neighbouring window
    const double resid = std::abs(characteristic(pot, m, k));
    if (!(resid <= kResidualLimit)) {
      out.diagnostics.push_back({m, seed, k, "residual " + fmt17(resid)});
      continue;
    }
    const bool duplicate = std::any_of(roots.begin(), roots.end(),
                                       [&](cplx r) { return std::abs(r - k) < kDedupDistance * std::max(1.0, std::abs(k)); });
    if (!duplicate) roots.push_back(k);
  }
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  int n = 0;
  for (cplx k : roots) out.modes.push_back(make_mode(pot, m, ++n, k));
  return out;
}

cplx mode_norm(const EigenMode& mode, const PotentialSpec& pot) {
  const double R = pot.radius;
  const int m = mode.m;
  const auto J = bessel_j_triple(m, mode.k * R);
  const cplx j = J.center;
  const double half = R * R / 2.0;
  const cplx interior = half * (j * j - J.below * J.above);
  cplx exterior;
  if (mode.cls == ModeClass::Bound) {
    const double kappa = std::sqrt(pot.k_v() * pot.k_v() - mode.k.real() * mode.k.real());
    const auto K = bessel_k_triple(m, kappa * R);
    exterior = j * j * half * (K.neighbour_product() - 1.0);
  } else {
    const auto H = hankel1_triple(m, exterior_wavenumber(pot, mode.k) * R);
    exterior = -half * j * j * (1.0 - H.neighbour_product());
  }
  const cplx norm = pi * (interior + exterior) * std::exp(2.0 * J.log_scale);
  if (!(std::abs(norm) >= 1e-14 * pi * R * R / 2.0))
    throw DomainError("mode_norm: near-defective mode (m=" + std::to_string(m) + ", n=" + std::to_string(mode.n) + ")");
  return norm;
}

cplx outside_amplitude(const EigenMode& mode, const PotentialSpec& pot) {
  const double R = pot.radius;
  const auto J = bessel_j_triple(mode.m, mode.k * R);
  if (mode.cls == ModeClass::Bound) {
    const double kappa = std::sqrt(pot.k_v() * pot.k_v() - mode.k.real() * mode.k.real());
    const auto K = bessel_k_triple(mode.m, kappa * R);
    return J.center / K.center * std::exp(J.log_scale - K.log_scale);
  }
  const auto H = hankel1_triple(mode.m, exterior_wavenumber(pot, mode.k) * R);
  return J.center / H.center * std::exp(J.log_scale - H.log_scale);
}

double delta_j(const EigenMode& mode, const PotentialSpec& pot) {
  const double re_e = mode.energy.real();
  if (mode.cls == ModeClass::Bound || re_e <= pot.v0)
    throw DomainError("delta_j: requires Re E > V0 (m=" + std::to_string(mode.m) + ")");
  const double k_out = std::sqrt(2.0 * pot.mass * (re_e - pot.v0)) / pot.hbar;
  return mode.m / k_out - pot.radius;
}

EigenMode make_mode(const PotentialSpec& pot, int m, int n, cplx k) {
  EigenMode e;
  e.m = m;
  e.n = n;
  e.k = k;
  e.energy = pot.energy(k);
  e.gamma = std::max(0.0, -2.0 * e.energy.imag());
  e.cls = classify(pot, m, k);
  e.c = outside_amplitude(e, pot);
  e.norm = mode_norm(e, pot);
  return e;
}

std::vector<const EigenMode*> ModeTable::for_m(int m) const {
  std::vector<const EigenMode*> out;
  auto it = std::lower_bound(modes.begin(), modes.end(), m, [](const EigenMode& e, int v) { return e.m < v; });
  for (; it != modes.end() && it->m == m; ++it) out.push_back(&*it);
  return out;
}

int ModeTable::m_min() const { return modes.empty() ? 0 : modes.front().m; }
int ModeTable::m_max() const { return modes.empty() ? -1 : modes.back().m; }
double ModeTable::re_k_max() const {
  double v = 0.0;
  for (const auto& e : modes) v = std::max(v, e.k.real());
  return v;
}

ModeTable solve_table(const PotentialSpec& pot, int m_lo, int m_hi, double k_max, int jobs) {
  pot.validate();
  if (m_lo < 0 || m_hi < m_lo) throw DomainError("solve_table: invalid m range");
  const int count = m_hi - m_lo + 1;
  std::vector<std::vector<EigenMode>> per_m(static_cast<std::size_t>(count));
  std::vector<std::vector<SeedFailure>> diag(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const double kv = pot.k_v();

#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(jobs))
  for (int i = 0; i < count; ++i) {
    const int m = m_lo + i;
    const auto ui = static_cast<std::size_t>(i);
    try {
      auto bound = find_bound_modes(pot, m);
      std::vector<EigenMode> all;
      for (auto& e : bound)
        if (e.k.real() <= k_max) all.push_back(e);
      if (k_max > kv) {
        auto res = find_resonances(pot, m, kv, k_max);
        for (auto& e : res.modes) all.push_back(e);
        diag[ui] = std::move(res.diagnostics);
      }
      int n = 0;
      for (auto& e : all) e.n = ++n;
      per_m[ui] = std::move(all);
    } catch (...) {
      errors[ui] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ModeTable table;
  table.pot = pot;
  for (int i = 0; i < count; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    table.modes.insert(table.modes.end(), per_m[ui].begin(), per_m[ui].end());
    table.diagnostics.insert(table.diagnostics.end(), diag[ui].begin(), diag[ui].end());
  }
  return table;
}

void write_mode_table(std::ostream& os, const ModeTable& table) {
  const auto& p = table.pot;
  os << "# curvewave-modes v1 R=" << fmt17(p.radius) << " V0=" << fmt17(p.v0) << " mstar=" << fmt17(p.mass)
     << " hbar=" << fmt17(p.hbar) << "\n";
  for (const auto& e : table.modes) {
    os << e.m << ' ' << e.n << ' ' << fmt17(e.k.real()) << ' ' << fmt17(e.k.imag()) << ' ' << fmt17(e.norm.real())
       << ' ' << fmt17(e.norm.imag()) << ' ' << fmt17(e.c.real()) << ' ' << fmt17(e.c.imag()) << ' '
       << to_string(e.cls) << "\n";
  }
}

ModeTable read_mode_table(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("mode table: empty input");
  ModeTable table;
  auto& p = table.pot;
  if (std::sscanf(header.c_str(), "# curvewave-modes v1 R=%lf V0=%lf mstar=%lf hbar=%lf", &p.radius, &p.v0, &p.mass,
                  &p.hbar) != 4)
    throw FormatError("mode table: bad header '" + header + "'");
  p.validate();
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    EigenMode e;
    double kr, ki, nr, ni, cr, ci;
    std::string cls;
    if (!(ls >> e.m >> e.n >> kr >> ki >> nr >> ni >> cr >> ci >> cls))
      throw FormatError("mode table: malformed row at line " + std::to_string(lineno));
    e.k = {kr, ki};
    e.norm = {nr, ni};
    e.c = {cr, ci};
    e.cls = mode_class_from_string(cls);
    e.energy = p.energy(e.k);
    e.gamma = std::max(0.0, -2.0 * e.energy.imag());
    table.modes.push_back(e);
  }
  std::stable_sort(table.modes.begin(), table.modes.end(),
                   [](const EigenMode& a, const EigenMode& b) { return a.m != b.m ? a.m < b.m : a.n < b.n; });
  return table;
}

void save_mode_table(const std::string& path, const ModeTable& table) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_mode_table(os, table);
}

ModeTable load_mode_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open mode table '" + path + "'");
  return read_mode_table(is);
}

}  // namespace curvewave::spectrum
