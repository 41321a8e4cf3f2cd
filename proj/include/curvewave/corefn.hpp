#pragma once

// Integer-order cylinder functions of complex argument: J_m, H^(1)_m and the
// real-argument modified function K_m.
//
// Region map used by the implementation (|z| is the modulus of the argument):
//   J_m   |z|^2 <= 2(m+1)      ascending series
//         |z| < 17             Miller backward recurrence, sum normalisation
//         otherwise            continued fraction for J_{m+1}/J_m closed by
//                              the Wronskian against H^(2)
//   H^(1) |z| >= 17            Hankel asymptotic series for orders 0,1
//         |z| < 17, Im z <= 0  Miller J_0,J_1 plus Neumann series for Y_0,Y_1
//         |z| < 17, Im z > 0   K_0,K_1 of -iz
//         all orders           forward recurrence (stable for H^(1))
//   K     x <= 2 series, otherwise Steed's continued fraction; forward
//         recurrence in the order.
// Large orders are carried in scaled form so nothing overflows internally.

#include <complex>

namespace curvewave::corefn {

using cplx = std::complex<double>;

/// mantissa * exp(log_scale).
struct Scaled {
  cplx mantissa{};
  double log_scale = 0.0;

  /// Unscaled value; throws RangeError when it does not fit in a double.
  [[nodiscard]] cplx value() const;
};

/// Orders m-1, m, m+1 sharing one scale factor exp(log_scale).
/// For m = 0 the lower entry is Z_{-1} (= -Z_1 for J and H, K_1 for K).
struct OrderTriple {
  cplx below{};
  cplx center{};
  cplx above{};
  double log_scale = 0.0;

  /// Z'_m / Z_m for J and H^(1).
  [[nodiscard]] cplx log_derivative() const { return (below - above) / (2.0 * center); }
  /// Z_{m-1} Z_{m+1} / Z_m^2, the scale-free piece of the norm integrals.
  [[nodiscard]] cplx neighbour_product() const { return (below / center) * (above / center); }
};

struct RealTriple {
  double below = 0.0;
  double center = 0.0;
  double above = 0.0;
  double log_scale = 0.0;

  /// K'_m / K_m.
  [[nodiscard]] double log_derivative() const { return -(below + above) / (2.0 * center); }
  [[nodiscard]] double neighbour_product() const { return (below / center) * (above / center); }
};

struct CylinderEval {
  int order = 0;
  cplx argument{};
  cplx value{};
  cplx derivative{};
};

// Plain values. Preconditions: m >= 0, |z| <= 1e4. Overflow -> RangeError.
cplx bessel_j(int m, cplx z);
cplx hankel1(int m, cplx z);        // z == 0 -> DomainError
double bessel_k(int m, double x);   // x <= 0 -> DomainError

CylinderEval bessel_j_eval(int m, cplx z);
CylinderEval hankel1_eval(int m, cplx z);

OrderTriple bessel_j_triple(int m, cplx z);
OrderTriple hankel1_triple(int m, cplx z);
RealTriple bessel_k_triple(int m, double x);

Scaled bessel_j_scaled(int m, cplx z);
Scaled hankel1_scaled(int m, cplx z);

/// H^(1)_m(z_num) / H^(1)_m(z_den) without forming either value.
cplx hankel1_ratio(int m, cplx z_num, cplx z_den);
/// K_m(x_num) / K_m(x_den).
double bessel_k_ratio(int m, double x_num, double x_den);

/// Exponentially scaled K_0(w) e^w and K_1(w) e^w for Re w >= 0, w != 0.
void bessel_k01_scaled(cplx w, cplx& k0, cplx& k1);

}  // namespace curvewave::corefn
