#pragma once

#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace curvewave::spectrum {

using cplx = std::complex<double>;

struct PotentialSpec {
  double radius = 2.0;
  double v0 = 5000.0;
  double mass = 1.0;
  double hbar = 1.0;

  void validate() const;
  /// sqrt(2 m* V0)/hbar, the wavenumber at the step height.
  [[nodiscard]] double k_v() const;
  /// m/R: inner classical turning point reaches R.
  [[nodiscard]] double k_b(int m) const;
  /// Wavenumber at the top of the barrier V_eff(R+).
  [[nodiscard]] double k_t(int m) const;
  [[nodiscard]] cplx energy(cplx k) const;
};

enum class ModeClass { Bound, Tunneling, Leaky };

std::string to_string(ModeClass c);
ModeClass mode_class_from_string(const std::string& s);

struct EigenMode {
  int m = 0;
  int n = 0;
  cplx k{};
  cplx energy{};
  double gamma = 0.0;
  cplx c{};     // exterior amplitude J_m(kR)/Z_m(qR)
  cplx norm{};  // pi * int_0^inf r Phi^2 dr with Phi = J_m(kr) inside
  ModeClass cls = ModeClass::Bound;
};

double effective_potential(const PotentialSpec& pot, int m, double r);

/// Exterior wavenumber: kappa (returned as i*kappa) below the step, the
/// principal root sqrt(k^2 - k_V^2) otherwise.
cplx exterior_wavenumber(const PotentialSpec& pot, cplx k);

ModeClass classify(const PotentialSpec& pot, int m, cplx k);

/// Normalised matching determinant; O(1) away from roots, zero at modes.
cplx characteristic(const PotentialSpec& pot, int m, cplx k);

struct BoundSearch {
  std::vector<EigenMode> modes;
  int coarse_sign_changes = 0;
  int fine_sign_changes = 0;
};

BoundSearch find_bound_modes_detailed(const PotentialSpec& pot, int m);
std::vector<EigenMode> find_bound_modes(const PotentialSpec& pot, int m);

struct SeedFailure {
  int m = 0;
  double seed = 0.0;
  cplx last{};
  std::string reason;
};

struct ResonanceSearch {
  std::vector<EigenMode> modes;
  std::vector<SeedFailure> diagnostics;  // non-converged or rejected seeds
};

/// Complex roots with Re k in [re_lo, re_hi]; re_lo is clipped to just above k_V.
ResonanceSearch find_resonances(const PotentialSpec& pot, int m, double re_lo, double re_hi);

/// Analytic norm (see EigenMode::norm). Throws DomainError for a defective mode.
cplx mode_norm(const EigenMode& mode, const PotentialSpec& pot);

/// Exterior amplitude J_m(kR)/Z_m(qR); underflows to zero for deep modes.
cplx outside_amplitude(const EigenMode& mode, const PotentialSpec& pot);

/// Image distance m/sqrt(2m*(Re E - V0))/hbar - R. Leaky modes give a value <= 0.
double delta_j(const EigenMode& mode, const PotentialSpec& pot);

/// Fill energy, gamma, class, c and norm from m and k.
EigenMode make_mode(const PotentialSpec& pot, int m, int n, cplx k);

struct ModeTable {
  PotentialSpec pot;
  std::vector<EigenMode> modes;  // ascending (m, n)
  std::vector<SeedFailure> diagnostics;

  [[nodiscard]] std::vector<const EigenMode*> for_m(int m) const;
  [[nodiscard]] int m_min() const;
  [[nodiscard]] int m_max() const;
  [[nodiscard]] double re_k_max() const;
};

/// Solve all m in [m_lo, m_hi] up to Re k <= k_max. Parallel over m when
/// jobs != 1; the result is independent of the worker count.
ModeTable solve_table(const PotentialSpec& pot, int m_lo, int m_hi, double k_max, int jobs = 0);

void write_mode_table(std::ostream& os, const ModeTable& table);
ModeTable read_mode_table(std::istream& is);
void save_mode_table(const std::string& path, const ModeTable& table);
ModeTable load_mode_table(const std::string& path);

}  // namespace curvewave::spectrum
