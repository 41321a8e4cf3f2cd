#include "curvewave/packet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>

#include "curvewave/corefn.hpp"
#include "curvewave/errors.hpp"

namespace curvewave::packet {
namespace {

using std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
const double kSqrt2Pi = std::sqrt(2.0 * pi);

static_assert(std::endian::native == std::endian::little, "binary field export assumes a little-endian host");

// FFTW planning is not thread-safe; execution with new arrays is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

class Fft {
 public:
  Fft(int n, int sign) : n_(n) {
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    plan_ = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void run(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan_, p, p);
  }
  [[nodiscard]] int size() const { return n_; }

 private:
  int n_;
  fftw_plan plan_;
};

int next_pow2(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

struct RadialRule {
  std::vector<double> r;
  std::vector<double> w;
};

RadialRule gauss_panels(double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& x = Rule::abscissa();
  const auto& wt = Rule::weights();
  RadialRule rule;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.r.push_back(mid - 0.5 * h * x[i]);
      rule.w.push_back(0.5 * h * wt[i]);
      rule.r.push_back(mid + 0.5 * h * x[i]);
      rule.w.push_back(0.5 * h * wt[i]);
    }
  }
  return rule;
}

// Lagrange weights for the six nodes starting at i0 evaluated at u (in units of dr).
std::array<double, 6> lagrange6(double u, int i0) {
  std::array<double, 6> w{};
  for (int a = 0; a < 6; ++a) {
    double num = 1.0, den = 1.0;
    for (int b = 0; b < 6; ++b) {
      if (b == a) continue;
      num *= u - (i0 + b);
      den *= static_cast<double>(a - b);
    }
    w[static_cast<std::size_t>(a)] = num / den;
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------- PacketSpec

void PacketSpec::validate() const {
  if (!(k0 > 0.0)) throw DomainError("packet: k0 must be positive");
  if (!(sigma > 0.0)) throw DomainError("packet: sigma must be positive");
  if (!(radius > 0.0)) throw DomainError("packet: radius must be positive");
  if (!(std::abs(m0) / (k0 * radius) < 1.0)) throw DomainError("packet: requires |m0| < k0 R");
  if (!(1.0 / std::sqrt(sigma) < radius / 5.0)) throw DomainError("packet: width 1/sqrt(sigma) must be below R/5");
}

double PacketSpec::chi() const { return std::asin(m0 / (k0 * radius)); }
double PacketSpec::e0() const { return hbar * hbar * k0 * k0 / (2.0 * mass); }

std::array<double, 2> PacketSpec::impact() const {
  return {radius * std::sin(impact_angle), radius * std::cos(impact_angle)};
}

std::array<double, 2> PacketSpec::direction() const {
  const double a = std::sin(chi());
  const double b = std::cos(chi());
  const double cb = std::cos(impact_angle);
  const double sb = std::sin(impact_angle);
  return {a * cb + b * sb, -a * sb + b * cb};
}

std::array<double, 2> PacketSpec::start() const {
  const auto c = impact();
  const auto d = direction();
  const double travel = speed() * s0();
  return {c[0] - travel * d[0], c[1] - travel * d[1]};
}

cplx gaussian_free(const PacketSpec& spec, double x, double y, double t) {
  const double tg = (t - 1.0) * spec.s0();
  const auto c = spec.impact();
  const auto d = spec.direction();
  const double dx = x - c[0];
  const double dy = y - c[1];
  const cplx den{1.0, spec.sigma * spec.hbar * tg / spec.mass};
  const cplx expo = (-(spec.sigma / 2.0) * (dx * dx + dy * dy) + kI * spec.k0 * (d[0] * dx + d[1] * dy) -
                     kI * spec.e0() * tg / spec.hbar) /
                    den;
  return std::sqrt(spec.sigma / pi) / den * std::exp(expo);
}

// ----------------------------------------------------------------- Expansion

ExpansionCounts Expansion::counts() const {
  ExpansionCounts c;
  for (const auto& e : entries) {
    switch (e.cls) {
      case ModeClass::Bound: ++c.bound; break;
      case ModeClass::Tunneling: ++c.tunneling; break;
      case ModeClass::Leaky: ++c.leaky; break;
    }
  }
  return c;
}

ExpansionCounts Expansion::counts_cos_sin(double thr) const {
  ExpansionCounts c;
  auto bump = [&](ModeClass cls) {
    switch (cls) {
      case ModeClass::Bound: ++c.bound; break;
      case ModeClass::Tunneling: ++c.tunneling; break;
      case ModeClass::Leaky: ++c.leaky; break;
    }
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& e = raw[i];
    if (e.m == 0) {
      if (std::abs(e.coeff) * threshold_scale >= thr) bump(e.cls);
      continue;
    }
    if (e.branch != 1) continue;
    cplx minus{};
    if (i + 1 < raw.size() && raw[i + 1].mode == e.mode) minus = raw[i + 1].coeff;
    const cplx a_cos = (e.coeff + minus) / std::sqrt(2.0);
    const cplx a_sin = kI * (e.coeff - minus) / std::sqrt(2.0);
    if (std::abs(a_cos) * threshold_scale >= thr) bump(e.cls);
    if (std::abs(a_sin) * threshold_scale >= thr) bump(e.cls);
  }
  return c;
}

Expansion expand(const PacketSpec& spec, const ModeTable& modes, double threshold, const ExpandOptions& opt) {
  spec.validate();
  if (!(threshold >= 0.0)) throw DomainError("expand: threshold must be non-negative");
  const auto& pot = modes.pot;
  const double R = pot.radius;
  Expansion out;
  out.threshold = threshold;
  out.threshold_scale = opt.convention == ThresholdConvention::Fourier ? 1.0 / kSqrt2Pi : 1.0;
  if (modes.modes.empty()) return out;

  const int m_max = modes.m_max();
  const int n_theta = opt.n_theta > 0 ? opt.n_theta : next_pow2(4 * m_max + 64);
  if (n_theta <= 2 * m_max) throw DomainError("expand: n_theta too small for the table's orders");

  // Angular projections F_M(r) = (2 pi)^-1/2 int Psi exp(-i M theta) dtheta on the radial nodes.
  const RadialRule rule = gauss_panels(0.0, R, opt.radial_panels);
  const std::size_t nr = rule.r.size();
  const auto un = static_cast<std::size_t>(n_theta);
  std::vector<cplx> proj(nr * un);
  Fft fwd(n_theta, FFTW_FORWARD);
  const int jobs = resolve_jobs(opt.jobs);
  const bool par = opt.exec == Exec::Parallel;

#pragma omp parallel for schedule(static) num_threads(jobs) if (par)
  for (std::size_t i = 0; i < nr; ++i) {
    cplx* row = proj.data() + i * un;
    for (int j = 0; j < n_theta; ++j) {
      const double th = 2.0 * pi * j / n_theta;
      row[j] = gaussian_free(spec, rule.r[i] * std::cos(th), rule.r[i] * std::sin(th), 0.0);
    }
    fwd.run(row);
    const double scale = kSqrt2Pi / n_theta;
    for (int j = 0; j < n_theta; ++j) row[j] *= scale;
  }
  double peak = 0.0;
  for (const auto& v : proj) peak = std::max(peak, std::abs(v));
  const double negligible = 1e-13 * peak;

  auto column = [&](int order) { return static_cast<std::size_t>(((order % n_theta) + n_theta) % n_theta); };

  const std::size_t n_modes = modes.modes.size();
  std::vector<std::array<cplx, 2>> coeff(n_modes);
  std::vector<std::exception_ptr> errors(n_modes);

#pragma omp parallel for schedule(dynamic, 4) num_threads(jobs) if (par)
  for (std::size_t k = 0; k < n_modes; ++k) {
    try {
      const auto& mode = modes.modes[k];
      const RadialProfile profile(mode, pot);
      const std::size_t cp = column(mode.m);
      const std::size_t cm = column(-mode.m);
      cplx plus{}, minus{};
      for (std::size_t i = 0; i < nr; ++i) {
        const cplx fp = proj[i * un + cp];
        const cplx fm = proj[i * un + cm];
        if (std::abs(fp) < negligible && std::abs(fm) < negligible) continue;
        const cplx phi = profile(rule.r[i]) * (rule.w[i] * rule.r[i]);
        plus += phi * fp;
        minus += phi * fm;
      }
      coeff[k] = {plus, minus};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Entries in (m, n, branch) order; branch +1 first.
  const double k_edge = modes.re_k_max() - pi / R;
  const int table_m_min = modes.m_min();
  for (std::size_t k = 0; k < n_modes; ++k) {
    const auto& mode = modes.modes[k];
    const bool last_of_m = (k + 1 == n_modes) || modes.modes[k + 1].m != mode.m;
    for (int b = 0; b < (mode.m == 0 ? 1 : 2); ++b) {
      ExpansionEntry e;
      e.mode = k;
      e.m = mode.m;
      e.n = mode.n;
      e.branch = b == 0 ? 1 : -1;
      e.coeff = coeff[k][static_cast<std::size_t>(b)];
      e.cls = mode.cls;
      out.raw.push_back(e);
      const double mag = std::abs(e.coeff);
      if (mag * out.threshold_scale < threshold) continue;
      if (opt.check_coverage) {
        if (mode.m == table_m_min && table_m_min > 0)
          throw CoverageError("mode table lower m edge " + std::to_string(mode.m) + " carries |coeff| above threshold");
        if (mode.m == m_max)
          throw CoverageError("mode table upper m edge " + std::to_string(mode.m) + " carries |coeff| above threshold");
        if (last_of_m && mode.k.real() > k_edge)
          throw CoverageError("mode table k edge (m=" + std::to_string(mode.m) + ", Re k=" +
                              std::to_string(mode.k.real()) + ") carries |coeff| above threshold");
      }
      if (mode.cls == ModeClass::Bound)
        out.bound_weight += mag * mag;
      else
        out.resonance_weight += mag * mag;
      out.entries.push_back(e);
    }
  }
  if (!out.entries.empty()) {
    out.m_min = out.entries.front().m;
    out.m_max = out.entries.front().m;
    for (const auto& e : out.entries) {
      out.m_min = std::min(out.m_min, e.m);
      out.m_max = std::max(out.m_max, e.m);
    }
  }
  return out;
}

// ------------------------------------------------------------- RadialProfile

RadialProfile::RadialProfile(const EigenMode& mode, const PotentialSpec& pot) : mode_(mode), pot_(pot) {
  const double R = pot.radius;
  inv_sqrt_norm_ = 1.0 / std::sqrt(mode.norm / pi);
  j_at_boundary_ = corefn::bessel_j(mode.m, mode.k * R);
  if (mode.cls == ModeClass::Bound) {
    kappa_ = std::sqrt(std::max(pot.k_v() * pot.k_v() - mode.k.real() * mode.k.real(), 0.0));
    const auto K = corefn::bessel_k_triple(mode.m, kappa_ * R);
    den_mantissa_ = K.center;
    den_log_ = K.log_scale;
  } else {
    q_ = spectrum::exterior_wavenumber(pot, mode.k);
    const auto H = corefn::hankel1_triple(mode.m, q_ * R);
    den_mantissa_ = H.center;
    den_log_ = H.log_scale;
  }
}

cplx RadialProfile::operator()(double r) const {
  if (r <= pot_.radius) return corefn::bessel_j(mode_.m, mode_.k * r) * inv_sqrt_norm_;
  if (mode_.cls == ModeClass::Bound) {
    // K tails past ~40 e-foldings are below double resolution of the interior.
    if (kappa_ * (r - pot_.radius) > 745.0) return {};
    const auto K = corefn::bessel_k_triple(mode_.m, kappa_ * r);
    return j_at_boundary_ * (K.center / den_mantissa_) * std::exp(K.log_scale - den_log_) * inv_sqrt_norm_;
  }
  const auto H = corefn::hankel1_triple(mode_.m, q_ * r);
  return j_at_boundary_ * (H.center / den_mantissa_) * std::exp(H.log_scale - den_log_) * inv_sqrt_norm_;
}

// --------------------------------------------------------------- grid, cache

double GridSpec::theta(int j) const { return 2.0 * pi * j / n_theta; }

ProfileCache::ProfileCache(const Expansion& expansion, const ModeTable& modes, const GridSpec& grid, Exec exec,
                           int jobs)
    : expansion_(&expansion), modes_(&modes), grid_(grid) {
  if (grid.n_r < 8 || grid.n_theta < 8 || !(grid.r_max > 0.0)) throw DomainError("grid: invalid dimensions");
  const std::size_t ne = expansion.entries.size();
  const auto nr = static_cast<std::size_t>(grid.n_r);
  values_.assign(ne * nr, cplx{});
  for (const auto& e : expansion.entries) max_order_ = std::max(max_order_, e.m);

  // Both branches of one mode share a profile; compute once per distinct mode.
  std::vector<std::size_t> first(ne);
  for (std::size_t e = 0; e < ne; ++e)
    first[e] = (e > 0 && expansion.entries[e - 1].mode == expansion.entries[e].mode) ? first[e - 1] : e;
  std::vector<std::size_t> unique;
  for (std::size_t e = 0; e < ne; ++e)
    if (first[e] == e) unique.push_back(e);

  std::vector<std::exception_ptr> errors(unique.size());
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic, 2) num_threads(resolve_jobs(jobs)) if (par)
  for (std::size_t u = 0; u < unique.size(); ++u) {
    try {
      const std::size_t e = unique[u];
      const RadialProfile profile(modes.modes[expansion.entries[e].mode], modes.pot);
      cplx* dst = values_.data() + e * nr;
      for (std::size_t i = 0; i < nr; ++i) dst[i] = profile(grid.r(static_cast<int>(i)));
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t e = 0; e < ne; ++e)
    if (first[e] != e) std::copy_n(values_.data() + first[e] * nr, nr, values_.data() + e * nr);
}

// ---------------------------------------------------------------- FieldFrame

cplx FieldFrame::harmonic(int i, int order) const {
  if (order < -max_order || order > max_order) return {};
  const std::size_t width = 2 * static_cast<std::size_t>(max_order) + 1;
  return harmonics[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(order + max_order)];
}

cplx FieldFrame::at(double x, double y) const {
  const double r = std::hypot(x, y);
  if (r > grid.r_max) return {};
  const double th = std::atan2(y, x);
  const double u = r / grid.dr();
  const int i0 = std::clamp(static_cast<int>(std::floor(u)) - 2, 0, grid.n_r - 6);
  const auto w = lagrange6(u, i0);
  const std::size_t width = 2 * static_cast<std::size_t>(max_order) + 1;
  std::vector<cplx> radial(width, cplx{});
  for (int a = 0; a < 6; ++a) {
    const cplx* row = harmonics.data() + static_cast<std::size_t>(i0 + a) * width;
    const double wa = w[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < width; ++c) radial[c] += wa * row[c];
  }
  const cplx step = std::polar(1.0, th);
  cplx phase = std::polar(1.0, -max_order * th);
  cplx sum{};
  for (std::size_t c = 0; c < width; ++c) {
    sum += radial[c] * phase;
    phase *= step;
  }
  return sum / kSqrt2Pi;
}

double FieldFrame::probability(double r_lo, double r_hi) const {
  // Parseval: int |Psi|^2 dtheta = sum_M |R_M|^2.
  const std::size_t width = 2 * static_cast<std::size_t>(max_order) + 1;
  const double dr = grid.dr();
  double total = 0.0;
  for (int i = 0; i < grid.n_r; ++i) {
    const double r = grid.r(i);
    if (r < r_lo || r > r_hi) continue;
    double ring = 0.0;
    const cplx* row = harmonics.data() + static_cast<std::size_t>(i) * width;
    for (std::size_t c = 0; c < width; ++c) ring += std::norm(row[c]);
    const bool edge = (i == grid.n_r - 1) || (r - dr < r_lo) || (r + dr > r_hi);
    total += (edge ? 0.5 : 1.0) * ring * r * dr;
  }
  return total;
}

namespace {

void synthesize(FieldFrame& f, Exec exec, int jobs) {
  const int n_theta = f.grid.n_theta;
  if (n_theta <= 2 * f.max_order) throw DomainError("grid: n_theta must exceed twice the largest angular order");
  const auto un = static_cast<std::size_t>(n_theta);
  const std::size_t width = 2 * static_cast<std::size_t>(f.max_order) + 1;
  f.values.assign(static_cast<std::size_t>(f.grid.n_r) * un, cplx{});
  Fft bwd(n_theta, FFTW_BACKWARD);
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs)) if (par)
  for (int i = 0; i < f.grid.n_r; ++i) {
    cplx* row = f.values.data() + static_cast<std::size_t>(i) * un;
    const cplx* h = f.harmonics.data() + static_cast<std::size_t>(i) * width;
    for (int order = -f.max_order; order <= f.max_order; ++order) {
      const auto col = static_cast<std::size_t>(((order % n_theta) + n_theta) % n_theta);
      row[col] = h[order + f.max_order] / kSqrt2Pi;
    }
    bwd.run(row);
  }
}

}  // namespace

FieldFrame evolve(const ProfileCache& cache, double t, const PacketSpec& spec, Exec exec, int jobs) {
  if (t < 0.0) throw DomainError("evolve: t must be non-negative (resonance terms grow backwards in time)");
  const auto& exp = cache.expansion();
  const auto& modes = cache.modes();
  FieldFrame f;
  f.grid = cache.grid();
  f.t = t;
  f.tau = t * spec.s0();
  f.max_order = cache.max_order();
  const std::size_t ne = exp.entries.size();
  std::vector<cplx> weight(ne);
  std::vector<std::size_t> col(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& entry = exp.entries[e];
    const cplx energy = modes.modes[entry.mode].energy;
    const cplx phase = f.tau == 0.0 ? cplx{1.0, 0.0} : std::exp(-kI * energy * f.tau / modes.pot.hbar);
    weight[e] = entry.coeff * phase;
    col[e] = static_cast<std::size_t>(entry.signed_order() + f.max_order);
  }
  const std::size_t width = 2 * static_cast<std::size_t>(f.max_order) + 1;
  f.harmonics.assign(static_cast<std::size_t>(f.grid.n_r) * width, cplx{});
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs)) if (par)
  for (int i = 0; i < f.grid.n_r; ++i) {
    cplx* row = f.harmonics.data() + static_cast<std::size_t>(i) * width;
    for (std::size_t e = 0; e < ne; ++e) row[col[e]] += weight[e] * cache.at(e, i);
  }
  synthesize(f, exec, jobs);
  return f;
}

FieldFrame reconstruct(const ProfileCache& cache, const PacketSpec& spec, Exec exec, int jobs) {
  return evolve(cache, 0.0, spec, exec, jobs);
}

FieldFrame gaussian_frame(const PacketSpec& spec, const GridSpec& grid, double t) {
  FieldFrame f;
  f.grid = grid;
  f.t = t;
  f.tau = t * spec.s0();
  f.max_order = grid.n_theta / 2 - 1;
  const auto un = static_cast<std::size_t>(grid.n_theta);
  const std::size_t width = 2 * static_cast<std::size_t>(f.max_order) + 1;
  f.values.assign(static_cast<std::size_t>(grid.n_r) * un, cplx{});
  f.harmonics.assign(static_cast<std::size_t>(grid.n_r) * width, cplx{});
  Fft fwd(grid.n_theta, FFTW_FORWARD);
  std::vector<cplx> tmp(un);
  for (int i = 0; i < grid.n_r; ++i) {
    const double r = grid.r(i);
    for (int j = 0; j < grid.n_theta; ++j) {
      const double th = grid.theta(j);
      tmp[static_cast<std::size_t>(j)] = gaussian_free(spec, r * std::cos(th), r * std::sin(th), t);
    }
    std::copy(tmp.begin(), tmp.end(), f.values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * un));
    fwd.run(tmp.data());
    cplx* h = f.harmonics.data() + static_cast<std::size_t>(i) * width;
    for (int order = -f.max_order; order <= f.max_order; ++order) {
      const auto c = static_cast<std::size_t>(((order % grid.n_theta) + grid.n_theta) % grid.n_theta);
      h[order + f.max_order] = tmp[c] * (kSqrt2Pi / grid.n_theta);
    }
  }
  return f;
}

double fidelity(const FieldFrame& a, const FieldFrame& b, double r_hi) {
  if (a.grid.n_r != b.grid.n_r || a.grid.n_theta != b.grid.n_theta || a.grid.r_max != b.grid.r_max)
    throw DomainError("fidelity: frames on different grids");
  cplx overlap{};
  double na = 0.0, nb = 0.0;
  const auto un = static_cast<std::size_t>(a.grid.n_theta);
  for (int i = 0; i < a.grid.n_r; ++i) {
    const double r = a.grid.r(i);
    if (r >= r_hi) break;
    for (std::size_t j = 0; j < un; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * un + j;
      overlap += std::conj(a.values[idx]) * b.values[idx] * r;
      na += std::norm(a.values[idx]) * r;
      nb += std::norm(b.values[idx]) * r;
    }
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::norm(overlap) / (na * nb);
}

// ------------------------------------------------------------------- export

void export_binary(std::ostream& os, const FieldFrame& frame, const CartesianDescriptor& d) {
  if (d.nx <= 0 || d.ny <= 0) throw DomainError("export: empty Cartesian descriptor");
  char header[64];
  std::memset(header, ' ', sizeof header);
  const int len = std::snprintf(header, sizeof header, "curvewave-field v1 %d %d %.6g %.6g %.6g %.6g %.6g", d.nx, d.ny,
                                d.x_origin, d.y_origin, d.dx, d.dy, frame.t);
  if (len < 0 || len >= 63) throw FormatError("export: header does not fit in 64 bytes");
  header[len] = ' ';
  header[63] = '\n';
  os.write(header, sizeof header);
  for (int iy = 0; iy < d.ny; ++iy) {
    for (int ix = 0; ix < d.nx; ++ix) {
      const cplx v = frame.at(d.x_origin + ix * d.dx, d.y_origin + iy * d.dy);
      const double pair[2] = {v.real(), v.imag()};
      os.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  }
}

void export_binary(const std::string& path, const FieldFrame& frame, const CartesianDescriptor& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  export_binary(os, frame, d);
}

BinaryField import_binary(std::istream& is) {
  char header[65] = {};
  if (!is.read(header, 64)) throw FormatError("field file: short header");
  BinaryField f;
  auto& d = f.desc;
  if (std::sscanf(header, "curvewave-field v1 %d %d %lf %lf %lf %lf %lf", &d.nx, &d.ny, &d.x_origin, &d.y_origin,
                  &d.dx, &d.dy, &f.t) != 7)
    throw FormatError("field file: bad header");
  const auto count = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
  f.values.resize(count);
  for (auto& v : f.values) {
    double pair[2];
    if (!is.read(reinterpret_cast<char*>(pair), sizeof pair)) throw FormatError("field file: truncated data");
    v = {pair[0], pair[1]};
  }
  return f;
}

void export_profile_csv(std::ostream& os, const FieldFrame& frame, double x_c, double y_c, double ux, double uy,
                        double half_length, int samples) {
  if (samples < 2) throw DomainError("profile: need at least two samples");
  const double norm = std::hypot(ux, uy);
  ux /= norm;
  uy /= norm;
  os << "s,x,y,re,im,prob\n";
  char buf[200];
  for (int i = 0; i < samples; ++i) {
    const double s = -half_length + 2.0 * half_length * i / (samples - 1);
    const double x = x_c + s * ux;
    const double y = y_c + s * uy;
    const cplx v = frame.at(x, y);
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.12g,%.12g,%.12g\n", s, x, y, v.real(), v.imag(), std::norm(v));
    os << buf;
  }
}

}  // namespace curvewave::packet
