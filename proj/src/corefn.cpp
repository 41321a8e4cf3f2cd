#include "curvewave/corefn.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "curvewave/errors.hpp"

namespace curvewave::corefn {
namespace {

using std::numbers::pi;
constexpr double kEuler = 0.57721566490153286061;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr cplx kI{0.0, 1.0};

// Crossover between the Hankel asymptotic series and the small-argument
// routes for orders 0 and 1.
constexpr double kAsymptoticRadius = 17.0;
constexpr double kMaxArgument = 1e4;

// Rescaling threshold for the recurrences; 2^-830 is exact in binary.
constexpr double kBig = 0x1p830;
constexpr double kShrink = 0x1p-830;
const double kShrinkLog = 830.0 * std::numbers::ln2;

std::string describe(int m, cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << "order " << m << ", argument (" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

void check_arguments(int m, cplx z, const char* fn) {
  if (m < 0) throw DomainError(std::string(fn) + ": negative order " + std::to_string(m));
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError(std::string(fn) + ": non-finite argument");
  if (std::abs(z) > kMaxArgument)
    throw DomainError(std::string(fn) + ": |z| above 1e4 at " + describe(m, z));
}

// Orders 0 and 1 of H^(1) for |z| >= kAsymptoticRadius, with e^{-Im z}
// moved into log_scale.
void hankel_asymptotic01(cplx z, cplx& h0, cplx& h1, double& log_scale) {
  const cplx inv_z = 1.0 / z;
  const cplx front = std::sqrt(2.0 / (pi * z));
  std::array<cplx, 2> out{};
  for (int nu = 0; nu < 2; ++nu) {
    const double mu = 4.0 * nu * nu;
    cplx term = 1.0;
    cplx sum = 1.0;
    double last = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 80; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= (mu - odd * odd) / (8.0 * k) * kI * inv_z;
      const double mag = std::abs(term);
      if (mag > last) break;  // asymptotic series started to diverge
      sum += term;
      last = mag;
      if (mag < 0.1 * kEps * std::abs(sum)) break;
    }
    const double phase = z.real() - nu * pi / 2.0 - pi / 4.0;
    out[nu] = front * std::polar(1.0, phase) * sum;
  }
  h0 = out[0];
  h1 = out[1];
  log_scale = -z.imag();
}

// Miller backward recurrence normalised with J_0 + 2 sum J_2k = 1.
// Returns J_0 .. J_nmax (nmax >= 1).
std::vector<cplx> miller_j(cplx z, int nmax) {
  const double az = std::abs(z);
  int start = static_cast<int>(std::ceil(std::max<double>(nmax, az))) + 40;
  start += start % 2;
  std::vector<cplx> j(static_cast<std::size_t>(start) + 2, cplx{});
  j[static_cast<std::size_t>(start)] = 1e-30;
  for (int n = start; n >= 1; --n) {
    const auto un = static_cast<std::size_t>(n);
    j[un - 1] = (2.0 * n / z) * j[un] - j[un + 1];
    if (std::abs(j[un - 1]) > kBig) {
      for (std::size_t i = un - 1; i <= static_cast<std::size_t>(start); ++i) j[i] *= kShrink;
    }
  }
  cplx norm = j[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * j[static_cast<std::size_t>(k)];
  j.resize(static_cast<std::size_t>(std::max(nmax, start - 1)) + 1);
  for (auto& v : j) v /= norm;
  return j;
}

// Y_0 and Y_1 from Neumann series over Miller values.
void neumann_y01(cplx z, const std::vector<cplx>& j, cplx& y0, cplx& y1) {
  const cplx lg = std::log(z / 2.0) + kEuler;
  cplx s0{}, s1{};
  const int top = static_cast<int>(j.size()) - 2;
  for (int k = 1; 2 * k + 1 <= top; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const auto uk = static_cast<std::size_t>(2 * k);
    s0 += sign * j[uk] / static_cast<double>(k);
    s1 += sign * (j[uk - 1] - j[uk + 1]) / static_cast<double>(k);
  }
  y0 = (2.0 / pi) * (lg * j[0] - 2.0 * s0);
  y1 = (2.0 / pi) * (-j[0] / z + lg * j[1] + s1);
}

void hankel01(cplx z, cplx& h0, cplx& h1, double& log_scale) {
  if (std::abs(z) >= kAsymptoticRadius) {
    hankel_asymptotic01(z, h0, h1, log_scale);
    return;
  }
  if (z.imag() > 0.0) {
    // H^(1)_nu(z) = (2/(pi i)) e^{-i nu pi/2} K_nu(-i z); J + iY would cancel here.
    const cplx w = -kI * z;
    cplx k0, k1;
    bessel_k01_scaled(w, k0, k1);
    const cplx rot = std::polar(1.0, z.real());
    h0 = 2.0 / (pi * kI) * k0 * rot;
    h1 = -2.0 / pi * k1 * rot;
    log_scale = -z.imag();
    return;
  }
  const auto j = miller_j(z, 1);
  cplx y0, y1;
  neumann_y01(z, j, y0, y1);
  h0 = j[0] + kI * y0;
  h1 = j[1] + kI * y1;
  log_scale = 0.0;
}

Scaled j_series(int m, cplx z) {
  if (z == cplx{}) return {m == 0 ? cplx{1.0} : cplx{}, 0.0};
  const cplx q = -z * z / 4.0;
  cplx term = 1.0;
  cplx sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (m + k));
    sum += term;
    if (std::abs(term) < 0.1 * kEps * std::abs(sum)) break;
  }
  const cplx lead = static_cast<double>(m) * std::log(z / 2.0);
  const double log_scale = lead.real() - std::lgamma(m + 1.0);
  return {sum * std::polar(1.0, lead.imag()), log_scale};
}

cplx rescale(const Scaled& s, double to) { return s.mantissa * std::exp(s.log_scale - to); }

OrderTriple j_triple_lower(int m, cplx z) {
  // Im z <= 0 here.
  const double az = std::abs(z);
  OrderTriple t;
  if (az * az <= 2.0 * (m + 1)) {
    const Scaled c = j_series(m, z);
    const Scaled a = j_series(m + 1, z);
    t.center = c.mantissa;
    t.log_scale = c.log_scale;
    t.above = rescale(a, c.log_scale);
    if (m == 0) {
      t.below = -t.above;
    } else {
      t.below = rescale(j_series(m - 1, z), c.log_scale);
    }
    return t;
  }
  if (az < kAsymptoticRadius) {
    const auto j = miller_j(z, m + 1);
    const auto um = static_cast<std::size_t>(m);
    t.center = j[um];
    t.above = j[um + 1];
    t.below = (m == 0) ? -j[1] : j[um - 1];
    return t;
  }
  // Ratio J_{m+1}/J_m by backward continued fraction.
  const int start = static_cast<int>(std::ceil(std::max<double>(m, az) + 30.0 + 10.0 * std::cbrt(az)));
  cplx rho{};
  for (int n = start; n >= m + 1; --n) {
    cplx den = 2.0 * n / z - rho;
    if (den == cplx{}) den = cplx{1e-300};
    rho = 1.0 / den;
  }
  // Wronskian against H^(2)(z) = conj(H^(1)(conj z)).
  const OrderTriple h = hankel1_triple(m, std::conj(z));
  const cplx h2m = std::conj(h.center);
  const cplx h2p = std::conj(h.above);
  t.center = -2.0 * kI / (pi * z) / (rho * h2m - h2p);
  t.log_scale = -h.log_scale;
  t.above = rho * t.center;
  t.below = (m == 0) ? -t.above : (2.0 * m / z) * t.center - t.above;
  return t;
}

}  // namespace

cplx Scaled::value() const {
  if (mantissa == cplx{}) return {};
  const double lg = std::log(std::abs(mantissa)) + log_scale;
  if (lg > 709.0) throw RangeError("cylinder function overflows double range");
  return mantissa * std::exp(log_scale);
}

void bessel_k01_scaled(cplx w, cplx& k0, cplx& k1) {
  if (w == cplx{}) throw DomainError("K_0/K_1 singular at the origin");
  if (w.real() < 0.0) throw DomainError("K_0/K_1 scaled: Re w must be non-negative");
  if (std::abs(w) <= 2.0) {
    const cplx q = w * w / 4.0;
    cplx t0 = 1.0;        // (w^2/4)^k / (k!)^2
    cplx t1 = 1.0;        // (w^2/4)^k / (k!(k+1)!)
    cplx i0 = 1.0, i1 = 1.0;
    cplx s0{};            // sum H_k t0
    cplx s1 = 2.0 * (-kEuler) + 1.0;  // psi(1)+psi(2) for k = 0
    double harmonic = 0.0;
    for (int k = 1; k < 200; ++k) {
      t0 *= q / (static_cast<double>(k) * k);
      t1 *= q / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
      i0 += t0;
      i1 += t1;
      s0 += harmonic * t0;
      const double psi_sum = 2.0 * (-kEuler) + 2.0 * harmonic + 1.0 / (k + 1);
      s1 += psi_sum * t1;
      if (std::abs(t0) < 0.1 * kEps * std::abs(i0)) break;
    }
    i1 *= w / 2.0;
    const cplx lg = std::log(w / 2.0);
    const cplx ew = std::exp(w);
    k0 = (-(lg + kEuler) * i0 + s0) * ew;
    k1 = (1.0 / w + lg * i1 - (w / 4.0) * s1) * ew;
    return;
  }
  // Steed's continued fraction (Temme's CF2) at order zero.
  cplx b = 2.0 * (1.0 + w);
  cplx d = 1.0 / b;
  cplx h = d;
  cplx delh = d;
  cplx q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  cplx q = a1, c = a1;
  double a = -a1;
  cplx s = 1.0 + q * delh;
  int i = 1;
  for (; i < 100000; ++i) {
    a -= 2.0 * i;
    c = -a * c / (i + 1.0);
    const cplx qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const cplx dels = q * delh;
    s += dels;
    if (std::abs(dels) < kEps * std::abs(s)) break;
  }
  if (i >= 100000) throw ConvergenceError("K_0/K_1 continued fraction did not converge");
  h *= a1;
  k0 = std::sqrt(pi / (2.0 * w)) / s;
  k1 = k0 * (w + 0.5 - h) / w;
}

OrderTriple hankel1_triple(int m, cplx z) {
  check_arguments(m, z, "hankel1");
  if (z == cplx{}) throw DomainError("hankel1: H^(1) diverges at the origin (" + describe(m, z) + ")");
  cplx h0, h1;
  double ls = 0.0;
  hankel01(z, h0, h1, ls);
  OrderTriple t;
  t.log_scale = ls;
  if (m == 0) {
    t.below = -h1;
    t.center = h0;
    t.above = h1;
    return t;
  }
  cplx prev = h0;   // H_{n-1}
  cplx cur = h1;    // H_n
  for (int n = 1; n < m; ++n) {
    const cplx next = (2.0 * n / z) * cur - prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      prev *= kShrink;
      cur *= kShrink;
      t.log_scale += kShrinkLog;
    }
  }
  t.below = prev;
  t.center = cur;
  t.above = (2.0 * m / z) * cur - prev;
  return t;
}

OrderTriple bessel_j_triple(int m, cplx z) {
  check_arguments(m, z, "bessel_j");
  if (z.imag() > 0.0) {
    OrderTriple t = j_triple_lower(m, std::conj(z));
    t.below = std::conj(t.below);
    t.center = std::conj(t.center);
    t.above = std::conj(t.above);
    return t;
  }
  return j_triple_lower(m, z);
}

RealTriple bessel_k_triple(int m, double x) {
  if (m < 0) throw DomainError("bessel_k: negative order " + std::to_string(m));
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive, got " + std::to_string(x));
  cplx k0c, k1c;
  bessel_k01_scaled(cplx{x, 0.0}, k0c, k1c);
  const double k0 = k0c.real();
  const double k1 = k1c.real();
  RealTriple t;
  t.log_scale = -x;
  if (m == 0) {
    t.below = k1;
    t.center = k0;
    t.above = k1;
    return t;
  }
  double prev = k0;
  double cur = k1;
  for (int n = 1; n < m; ++n) {
    const double next = prev + (2.0 * n / x) * cur;
    prev = cur;
    cur = next;
    if (cur > kBig) {
      prev *= kShrink;
      cur *= kShrink;
      t.log_scale += kShrinkLog;
    }
  }
  t.below = prev;
  t.center = cur;
  t.above = prev + (2.0 * m / x) * cur;
  return t;
}

Scaled bessel_j_scaled(int m, cplx z) {
  const auto t = bessel_j_triple(m, z);
  return {t.center, t.log_scale};
}

Scaled hankel1_scaled(int m, cplx z) {
  const auto t = hankel1_triple(m, z);
  return {t.center, t.log_scale};
}

cplx bessel_j(int m, cplx z) {
  try {
    return bessel_j_scaled(m, z).value();
  } catch (const RangeError&) {
    throw RangeError("bessel_j overflow at " + describe(m, z));
  }
}

cplx hankel1(int m, cplx z) {
  try {
    return hankel1_scaled(m, z).value();
  } catch (const RangeError&) {
    throw RangeError("hankel1 overflow at " + describe(m, z));
  }
}

double bessel_k(int m, double x) {
  const auto t = bessel_k_triple(m, x);
  const double lg = std::log(t.center) + t.log_scale;
  if (lg > 709.0) throw RangeError("bessel_k overflow at " + describe(m, cplx{x, 0.0}));
  return t.center * std::exp(t.log_scale);
}

CylinderEval bessel_j_eval(int m, cplx z) {
  const auto t = bessel_j_triple(m, z);
  const cplx scale = std::exp(cplx{t.log_scale, 0.0});
  if (std::log(std::abs(t.center) + std::abs(t.below)) + t.log_scale > 709.0)
    throw RangeError("bessel_j overflow at " + describe(m, z));
  return {m, z, t.center * scale, 0.5 * (t.below - t.above) * scale};
}

CylinderEval hankel1_eval(int m, cplx z) {
  const auto t = hankel1_triple(m, z);
  if (std::log(std::abs(t.center) + std::abs(t.above)) + t.log_scale > 709.0)
    throw RangeError("hankel1 overflow at " + describe(m, z));
  const cplx scale = std::exp(cplx{t.log_scale, 0.0});
  return {m, z, t.center * scale, 0.5 * (t.below - t.above) * scale};
}

cplx hankel1_ratio(int m, cplx z_num, cplx z_den) {
  const auto a = hankel1_triple(m, z_num);
  const auto b = hankel1_triple(m, z_den);
  return a.center / b.center * std::exp(a.log_scale - b.log_scale);
}

double bessel_k_ratio(int m, double x_num, double x_den) {
  const auto a = bessel_k_triple(m, x_num);
  const auto b = bessel_k_triple(m, x_den);
  return a.center / b.center * std::exp(a.log_scale - b.log_scale);
}

}  // namespace curvewave::corefn
