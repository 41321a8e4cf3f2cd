#pragma once

#include <array>
#include <string>
#include <vector>

#include "curvewave/packet.hpp"

namespace curvewave::observables {

using packet::FieldFrame;
using packet::PacketSpec;
using Point = std::array<double, 2>;

enum class Mask { Whole, Interior, Exterior };
std::string to_string(Mask m);

/// Exterior lobe starts this far outside the boundary, past the evanescent skirt.
constexpr double kExteriorMargin = 0.05;

struct TrajectorySample {
  double t = 0.0;
  Point position{};
  Mask mask = Mask::Whole;
};

/// Probability-weighted centroid over the masked part of the polar grid,
/// optionally clipped at r_outer.
Point average_position(const FieldFrame& frame, Mask mask, double radius, double r_outer = 1e300);
TrajectorySample sample(const FieldFrame& frame, Mask mask, double radius, double r_outer = 1e300);

/// Outer edge of the first exterior shell: the first minimum of the radial
/// density r * int |Psi|^2 dtheta past its first maximum outside R + margin.
/// Beyond the causal front a resonance sum grows exponentially, so exterior
/// observables are clipped here.
double lobe_outer_radius(const FieldFrame& frame, double radius);

struct GhFit {
  double l_gh = 0.0;
  double chi_r_factor = 0.0;
  double chi_r = 0.0;
  double delay = 0.0;  // l_gh / v_theta, internal time units
  Point origin{};      // where the fitted outgoing ray leaves the boundary
  Point direction{};   // unit outgoing direction
  double residual_pre = 0.0;
  double residual_post = 0.0;
};

/// Incoming ray fixed by the packet (direction chi through the launch point);
/// outgoing ray fitted to the post samples and traced back to the circle.
GhFit gh_fit(const std::vector<TrajectorySample>& pre, const std::vector<TrajectorySample>& post,
             const PacketSpec& spec);

/// Probability inside r < R relative to `reference`, the norm of the launched
/// packet (the exterior of a resonance sum is not normalisable).
double interior_fraction(const FieldFrame& frame, double radius, double reference);

/// Frame with the impact point rotated back to the top of the circle. Angles
/// (alpha) are measured in this frame; handedness = sign(m0) only fixes the
/// sign of lateral shifts.
struct Orientation {
  int handedness = 1;
  double beta = 0.0;  // impact angle, clockwise from +y

  static Orientation of(const PacketSpec& spec);
  [[nodiscard]] Point to_world(Point p) const;
  [[nodiscard]] Point to_local(Point p) const;
};

struct HusimiGrid {
  double d_lo = 2.0, d_hi = 7.0, d_step = 0.02;
  double h_lo = 1.0, h_hi = 4.0, h_step = 0.01;
  double mu = 0.15 * 0.15 / 2.0;
};

struct HusimiFrame {
  double alpha = 0.0;
  double t = 0.0;
  HusimiGrid grid;
  int n_d = 0;
  int n_h = 0;
  std::vector<double> values;  // n_d x n_h
  double d0 = 0.0;
  double h0 = 0.0;
  double strength = 0.0;  // trapezoid double integral
  double gap = 0.0;       // h0 - R
  double edge_ratio = 0.0;  // largest boundary value / peak
  [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_h) + static_cast<std::size_t>(j)]; }
  /// Centroid mapped back to the plane.
  [[nodiscard]] Point centroid_xy(const Orientation& o) const;
};

/// H_E(D,h;alpha) = |int dh' Psi(x(h'), y(h')) xi(h,h')|^2 with the Gaussian
/// window xi of variance parameter mu. strict: throw RangeError when the lobe
/// touches the boundary of the (D,h) window (edge value > 1% of the peak).
HusimiFrame emission_husimi(const FieldFrame& frame, double alpha, const HusimiGrid& grid, double radius,
                            const Orientation& o = {}, bool strict = false, Exec exec = Exec::Parallel, int jobs = 0);

struct DirectionResult {
  double alpha_t = 0.0;        // crossing of the two Delta(alpha) curves
  double alpha_max_f = 0.0;    // maximum of f(alpha) at the first time
  double delta = 0.0;          // Delta at the crossing
  bool crossing_found = false;
  std::vector<double> alphas;
  std::vector<double> f_first;
  std::vector<double> delta_first;
  std::vector<double> delta_second;
};

std::vector<double> alpha_grid(double lo = -0.15, double hi = 0.05, double step = 0.005);

DirectionResult tunneling_direction(const FieldFrame& first, const FieldFrame& second, const std::vector<double>& alphas,
                                    const HusimiGrid& grid, double radius, const Orientation& o = {},
                                    Exec exec = Exec::Parallel, int jobs = 0);

/// sum |b|^2 gamma Delta_j / sum |b|^2 gamma over tunneling entries.
double delta_predicted(const packet::Expansion& exp, const packet::ModeTable& modes);

struct EmissionOrigin {
  double t_star = 0.0;
  double delay = 0.0;     // t_star - 1, units of s0
  Point at_t1{};          // back-extrapolated position at t = 1
  Point target{};         // (x_T, y_T)
  Point velocity{};       // per unit scaled time
  bool speed_warning = false;
};

EmissionOrigin emission_origin(const std::vector<TrajectorySample>& track, double alpha_t, double delta,
                               double radius, const Orientation& o = {});

/// Direction of motion of the exterior lobe (least-squares velocity over the
/// track), as the angle in degrees from the outward normal where the track
/// leaves the circle.
double transmission_angle_deg(const std::vector<TrajectorySample>& track, double radius, const Orientation& o = {});

}  // namespace curvewave::observables
