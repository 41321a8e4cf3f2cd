#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "curvewave/parallel.hpp"
#include "curvewave/spectrum.hpp"

namespace curvewave::packet {

using cplx = std::complex<double>;
using spectrum::EigenMode;
using spectrum::ModeClass;
using spectrum::ModeTable;
using spectrum::PotentialSpec;

struct PacketSpec {
  double m0 = 75.0;
  double k0 = 75.0;
  double sigma = 100.0;
  double radius = 2.0;  // impact point sits at radius * (sin beta, cos beta)
  double impact_angle = 0.0;  // beta, measured clockwise from +y
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const;
  [[nodiscard]] double chi() const;  // asin(m0 / (k0 R))
  [[nodiscard]] double e0() const;
  [[nodiscard]] double s0() const { return 1.0 / k0; }
  [[nodiscard]] double t0() const { return -1.0 / k0; }
  [[nodiscard]] double speed() const { return hbar * k0 / mass; }
  [[nodiscard]] std::array<double, 2> impact() const;
  [[nodiscard]] std::array<double, 2> direction() const;  // unit vector of k0
  [[nodiscard]] std::array<double, 2> start() const;      // mean position at launch
};

/// Closed-form free Gaussian at scaled time t (units of s0; launch at t=0,
/// impact at t=1).
cplx gaussian_free(const PacketSpec& spec, double x, double y, double t);

struct ExpansionEntry {
  std::size_t mode = 0;  // index into ModeTable::modes
  int m = 0;
  int n = 0;
  int branch = 1;  // angular factor exp(i * branch * m * theta)
  cplx coeff{};
  ModeClass cls = ModeClass::Bound;
  [[nodiscard]] int signed_order() const { return branch * m; }
};

struct ExpansionCounts {
  int bound = 0;
  int tunneling = 0;
  int leaky = 0;
  [[nodiscard]] int total() const { return bound + tunneling + leaky; }
};

/// Scale at which the truncation threshold is applied. Coefficients are always
/// stored in the orthonormal basis Phi(r) e^{i m theta} / sqrt(2 pi).
/// Fourier: threshold compares |coeff| / sqrt(2 pi), the coefficient of the
/// radially normalised mode times e^{i m theta} in a plain Fourier series.
enum class ThresholdConvention { Orthonormal, Fourier };

struct Expansion {
  std::vector<ExpansionEntry> entries;  // ascending (m, n, branch), |coeff| >= threshold
  std::vector<ExpansionEntry> raw;      // every computed overlap, same order
  double threshold = 0.0;
  double threshold_scale = 1.0;  // |coeff| * threshold_scale is compared to threshold
  double bound_weight = 0.0;  // sum |a|^2 over bound entries
  double resonance_weight = 0.0;
  int m_min = 0;
  int m_max = 0;

  [[nodiscard]] ExpansionCounts counts() const;
  /// Counts in the real cos/sin basis: each retained combination counts once.
  [[nodiscard]] ExpansionCounts counts_cos_sin(double threshold) const;
};

struct ExpandOptions {
  int n_theta = 0;         // 0: smallest power of two >= 4 m_max + 64
  int radial_panels = 40;  // composite 20-point Gauss-Legendre on [0, R]
  ThresholdConvention convention = ThresholdConvention::Fourier;
  Exec exec = Exec::Parallel;
  int jobs = 0;
  bool check_coverage = true;
};

/// Overlaps of the packet at t=0 with every mode of the table, both angular
/// branches; entries with |coeff| < threshold are dropped.
Expansion expand(const PacketSpec& spec, const ModeTable& modes, double threshold, const ExpandOptions& opt = {});

/// Normalised radial profile of a mode, J_m(kr)/sqrt(N) inside and the
/// matched exterior function outside (N = norm / pi).
class RadialProfile {
 public:
  RadialProfile(const EigenMode& mode, const PotentialSpec& pot);
  [[nodiscard]] cplx operator()(double r) const;

 private:
  EigenMode mode_;
  PotentialSpec pot_;
  cplx inv_sqrt_norm_{};
  cplx j_at_boundary_{};  // J_m(kR)
  cplx den_mantissa_{};   // Z_m(qR) = den_mantissa_ * exp(den_log_)
  double den_log_ = 0.0;
  cplx q_{};
  double kappa_ = 0.0;
};

struct GridSpec {
  int n_r = 1200;
  int n_theta = 1024;
  double r_max = 8.0;
  [[nodiscard]] double dr() const { return r_max / (n_r - 1); }
  [[nodiscard]] double r(int i) const { return i * dr(); }
  [[nodiscard]] double theta(int j) const;
};

/// Radial profiles of all expansion entries on the radial grid.
class ProfileCache {
 public:
  ProfileCache(const Expansion& expansion, const ModeTable& modes, const GridSpec& grid, Exec exec = Exec::Parallel,
               int jobs = 0);
  [[nodiscard]] const GridSpec& grid() const { return grid_; }
  [[nodiscard]] const Expansion& expansion() const { return *expansion_; }
  [[nodiscard]] const ModeTable& modes() const { return *modes_; }
  /// Profile of entry e at radial node i.
  [[nodiscard]] cplx at(std::size_t e, int i) const { return values_[e * static_cast<std::size_t>(grid_.n_r) + static_cast<std::size_t>(i)]; }
  [[nodiscard]] int max_order() const { return max_order_; }

 private:
  const Expansion* expansion_;
  const ModeTable* modes_;
  GridSpec grid_;
  std::vector<cplx> values_;
  int max_order_ = 0;
};

/// Field sampled on the polar grid plus its angular harmonics R_M(r), which
/// allow evaluation at arbitrary points.
struct FieldFrame {
  GridSpec grid;
  double t = 0.0;   // scaled time (units of s0)
  double tau = 0.0; // internal time t * s0
  int max_order = 0;
  std::vector<cplx> values;    // n_r x n_theta, row-major in r
  std::vector<cplx> harmonics; // n_r x (2 max_order + 1), column M + max_order

  [[nodiscard]] cplx value(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.n_theta) + static_cast<std::size_t>(j)]; }
  [[nodiscard]] cplx harmonic(int i, int order) const;
  /// Interpolated in r (six-point Lagrange), exact angular sum.
  [[nodiscard]] cplx at(double x, double y) const;
  [[nodiscard]] double probability(double r_lo, double r_hi) const;
};

/// Psi(t) = sum_i coeff_i exp(-i E_i tau / hbar) phi_i; t in units of s0, t >= 0.
FieldFrame evolve(const ProfileCache& cache, double t, const PacketSpec& spec, Exec exec = Exec::Parallel,
                  int jobs = 0);
FieldFrame reconstruct(const ProfileCache& cache, const PacketSpec& spec, Exec exec = Exec::Parallel, int jobs = 0);

/// Free Gaussian sampled on the same grid (reference for fidelity checks).
FieldFrame gaussian_frame(const PacketSpec& spec, const GridSpec& grid, double t);

/// |<a|b>|^2 / (|a|^2 |b|^2) over r < r_hi.
double fidelity(const FieldFrame& a, const FieldFrame& b, double r_hi);

struct CartesianDescriptor {
  int nx = 0;
  int ny = 0;
  double x_origin = 0.0;
  double y_origin = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

void export_binary(std::ostream& os, const FieldFrame& frame, const CartesianDescriptor& d);
void export_binary(const std::string& path, const FieldFrame& frame, const CartesianDescriptor& d);

struct BinaryField {
  CartesianDescriptor desc;
  double t = 0.0;
  std::vector<cplx> values;
};
BinaryField import_binary(std::istream& is);

/// CSV of |Psi|^2 along a line through (x_c, y_c) in direction (ux, uy).
void export_profile_csv(std::ostream& os, const FieldFrame& frame, double x_c, double y_c, double ux, double uy,
                        double half_length, int samples);

}  // namespace curvewave::packet
