#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <vector>

#include "curvewave/spectrum.hpp"

namespace curvewave::barrier1d {

using cplx = std::complex<double>;
using spectrum::PotentialSpec;

/// Planar step reflection phase 2 atan sqrt(E/(V0-E)) - pi.
double step_phase(double e, double v0);
/// hbar dphi/dE of the step phase, minimum 2 hbar / V0 at E = V0/2.
double wigner_delay(double e, double v0, double hbar = 1.0);

/// Effective radial barrier with the interior replaced by a flat plateau.
struct ModifiedEffBarrier {
  int m = 120;
  PotentialSpec pot;
  double plateau = -1.0;  // negative: hbar^2 m^2 / (2 m* R^2), continuous from inside

  [[nodiscard]] double plateau_level() const;
  [[nodiscard]] double barrier_top() const { return pot.v0 + plateau_level(); }
};

struct ModifiedReflection {
  cplx f{};            // amplitude of exp(-iq(r-R)) for unit exp(iq(r-R))
  double phi_r = 0.0;  // arg F in (-pi, pi]
  double q = 0.0;      // plateau wavenumber
  double transmitted_flux = 0.0;  // exterior current / incident current at r = R
};

ModifiedReflection reflection_modified(const ModifiedEffBarrier& bar, double e);

struct GhTheory {
  double delay = 0.0;       // hbar dphi_R/dE at E0, internal time
  double delay_s0 = 0.0;    // in units of s0 = 1/k0
  double l_gh = 0.0;
  double richardson = 0.0;  // extrapolated derivative used as the check
};

/// Centered difference with step 1e-3 V0; throws ConvergenceError when the
/// Richardson estimate disagrees by more than 1e-3 relative.
GhTheory gh_theory(double m0, double k0, const PotentialSpec& pot);

struct RectBarrier {
  double v_max = 100.0;
  double v_min = 60.0;
  double x_a = 0.0;
  double x_b = 1.0;
  double hbar = 1.0;
  double mass = 1.0;
  void validate() const;
};

struct RectScattering {
  cplx t{};  // transmitted amplitude of exp(ik'(x - x_b)) for incident exp(ik(x - x_a))
  cplx r{};  // reflected amplitude of exp(-ik(x - x_a))
  double phi_t = 0.0;
  double phi_r = 0.0;
  double k = 0.0;
  double k_exit = 0.0;
  double flux_error = 0.0;  // |r|^2 + (k'/k)|t|^2 - 1
};

RectScattering rect_transmission(const RectBarrier& bar, double e);
/// Reflection amplitude for any E > 0 (evanescent exit below v_min).
cplx rect_reflection(const RectBarrier& bar, double e);

/// Phase sampled on an increasing energy grid with cumulative 2 pi unwrapping.
struct PhaseCurve {
  std::vector<double> energy;
  std::vector<double> phase;
  std::vector<double> modulus;
  [[nodiscard]] double total_variation() const;
};

enum class Coefficient { Transmission, Reflection };

PhaseCurve rect_phase_curve(const RectBarrier& bar, Coefficient which, double e_lo, double e_hi, double step);
PhaseCurve modified_phase_curve(const ModifiedEffBarrier& bar, double e_lo, double e_hi, double step);

/// hbar dphi/dE at e0 by centered difference on the curve.
double delay_from_phase(const PhaseCurve& curve, double e0, double hbar = 1.0);
/// hbar (phi(e_hi) - phi(e_lo)) / (e_hi - e_lo), the linearised slope across a window.
double delay_from_phase_secant(const PhaseCurve& curve, double e_lo, double e_hi, double hbar = 1.0);

struct Window {
  double k0 = 0.0;
  double sigma = 1.0;  // W(k) = exp(-(k - k0)^2 / sigma^2)
};

struct QuadratureOptions {
  int nodes = 600;
  double tolerance = 1e-6;  // relative to int W dk
};

/// Transmitted packet beyond a rectangular barrier; only propagating exit
/// components (E > v_min) contribute.
cplx tunneling_packet_1d(const Window& w, const RectBarrier& bar, double x, double t, const QuadratureOptions& q = {});
/// Transmitted packet beyond the modified barrier; k is the plateau wavenumber
/// and only components above V0 contribute.
cplx tunneling_packet_1d(const Window& w, const ModifiedEffBarrier& bar, double x, double t,
                         const QuadratureOptions& q = {});

/// Time of the maximum of |Psi(x, t)|^2 on [t_lo, t_hi] (scan plus Brent refinement).
double peak_time(const std::function<cplx(double)>& psi_of_t, double t_lo, double t_hi, int scan = 400);

void write_phase_csv(std::ostream& os, const PhaseCurve& curve);
void write_packet_csv(std::ostream& os, const std::function<cplx(double)>& psi_of_x, double x_lo, double x_hi,
                      int samples);

}  // namespace curvewave::barrier1d
