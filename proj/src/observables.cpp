#include "curvewave/observables.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <utility>

#include "curvewave/errors.hpp"

namespace curvewave::observables {

namespace {

constexpr double pi = std::numbers::pi;

bool in_mask(Mask m, double r, double radius) {
  switch (m) {
    case Mask::Whole: return true;
    case Mask::Interior: return r < radius;
    case Mask::Exterior: return r > radius + kExteriorMargin;
  }
  return false;
}

double dot(Point a, Point b) { return a[0] * b[0] + a[1] * b[1]; }
double norm(Point a) { return std::hypot(a[0], a[1]); }

// Trapezoid weight of node i out of n.
double trap(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

// Least squares P(t) = P(t_mean) + v (t - t_mean) in the local frame.
std::pair<Point, Point> linear_track(const std::vector<TrajectorySample>& track, const Orientation& o) {
  double tm = 0.0;
  Point pm{0.0, 0.0};
  for (const auto& s : track) {
    const Point p = o.to_local(s.position);
    tm += s.t;
    pm = {pm[0] + p[0], pm[1] + p[1]};
  }
  const double n = static_cast<double>(track.size());
  tm /= n;
  pm = {pm[0] / n, pm[1] / n};
  double stt = 0.0;
  Point stp{0.0, 0.0};
  for (const auto& s : track) {
    const Point p = o.to_local(s.position);
    stt += (s.t - tm) * (s.t - tm);
    stp = {stp[0] + (s.t - tm) * (p[0] - pm[0]), stp[1] + (s.t - tm) * (p[1] - pm[1])};
  }
  if (!(stt > 0.0)) throw FitError("track: samples share one time");
  // Shift the anchor to t = 0 so callers can evaluate P(t) = p0 + v t.
  const Point v{stp[0] / stt, stp[1] / stt};
  return {{pm[0] - v[0] * tm, pm[1] - v[1] * tm}, v};
}

int count_nodes(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw DomainError("husimi: empty or ill-ordered range");
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

}  // namespace

std::string to_string(Mask m) {
  switch (m) {
    case Mask::Whole: return "whole";
    case Mask::Interior: return "interior";
    case Mask::Exterior: return "exterior";
  }
  return "?";
}

// ----------------------------------------------------------------- centroids

Point average_position(const FieldFrame& frame, Mask mask, double radius, double r_outer) {
  const auto& g = frame.grid;
  std::vector<double> cos_t(static_cast<std::size_t>(g.n_theta)), sin_t(cos_t.size());
  for (int j = 0; j < g.n_theta; ++j) {
    cos_t[static_cast<std::size_t>(j)] = std::cos(g.theta(j));
    sin_t[static_cast<std::size_t>(j)] = std::sin(g.theta(j));
  }
  double w_all = 0.0, w_in = 0.0, sx = 0.0, sy = 0.0;
  for (int i = 0; i < g.n_r; ++i) {
    const double r = g.r(i);
    const double wr = r * trap(i, g.n_r);
    double ring = 0.0, rx = 0.0, ry = 0.0;
    for (int j = 0; j < g.n_theta; ++j) {
      const double p = std::norm(frame.value(i, j));
      ring += p;
      rx += p * cos_t[static_cast<std::size_t>(j)];
      ry += p * sin_t[static_cast<std::size_t>(j)];
    }
    w_all += wr * ring;
    if (!in_mask(mask, r, radius) || r > r_outer) continue;
    w_in += wr * ring;
    sx += wr * r * rx;
    sy += wr * r * ry;
  }
  if (!(w_in > 1e-6 * w_all)) throw RangeError("average_position: masked probability too small for a centroid (mask " + to_string(mask) + ")");
  return {sx / w_in, sy / w_in};
}

TrajectorySample sample(const FieldFrame& frame, Mask mask, double radius, double r_outer) {
  return {frame.t, average_position(frame, mask, radius, r_outer), mask};
}

double lobe_outer_radius(const FieldFrame& frame, double radius) {
  const auto& g = frame.grid;
  const std::size_t width = 2 * static_cast<std::size_t>(frame.max_order) + 1;
  std::vector<double> rho(static_cast<std::size_t>(g.n_r), 0.0);
  for (int i = 0; i < g.n_r; ++i) {
    const packet::cplx* row = frame.harmonics.data() + static_cast<std::size_t>(i) * width;
    double ring = 0.0;
    for (std::size_t c = 0; c < width; ++c) ring += std::norm(row[c]);
    rho[static_cast<std::size_t>(i)] = ring * g.r(i);
  }
  // Smooth over ~0.05 to keep interference ripples from posing as minima.
  const int half = std::max(1, static_cast<int>(std::lround(0.025 / g.dr())));
  auto smooth = [&](int i) {
    double s = 0.0;
    int n = 0;
    for (int a = std::max(0, i - half); a <= std::min(g.n_r - 1, i + half); ++a, ++n) s += rho[static_cast<std::size_t>(a)];
    return s / n;
  };
  int i = static_cast<int>(std::ceil((radius + kExteriorMargin) / g.dr()));
  if (i >= g.n_r - 1) return g.r_max;
  double prev = smooth(i);
  bool rising = false;
  for (++i; i < g.n_r; ++i) {
    const double cur = smooth(i);
    if (cur > prev) rising = true;
    else if (rising && cur < prev) {
      // descend to the valley floor
      while (i + 1 < g.n_r && smooth(i + 1) <= smooth(i)) ++i;
      return g.r(i);
    }
    prev = cur;
  }
  return g.r_max;
}

double interior_fraction(const FieldFrame& frame, double radius, double reference) {
  if (!(reference > 0.0)) throw DomainError("interior_fraction: reference norm must be positive");
  return frame.probability(0.0, radius) / reference;
}

// --------------------------------------------------------------- orientation

Orientation Orientation::of(const PacketSpec& spec) {
  return {spec.m0 < 0.0 ? -1 : 1, spec.impact_angle};
}

Point Orientation::to_world(Point p) const {
  const double c = std::cos(beta), s = std::sin(beta);
  return {p[0] * c + p[1] * s, -p[0] * s + p[1] * c};
}

Point Orientation::to_local(Point p) const {
  const double c = std::cos(beta), s = std::sin(beta);
  return {p[0] * c - p[1] * s, p[0] * s + p[1] * c};
}

// -------------------------------------------------------------------- GH fit

GhFit gh_fit(const std::vector<TrajectorySample>& pre, const std::vector<TrajectorySample>& post,
             const PacketSpec& spec) {
  if (pre.size() < 3 || post.size() < 3) throw FitError("gh_fit: need at least three samples before and after the bounce");
  spec.validate();
  const auto o = Orientation::of(spec);
  const double R = spec.radius;
  const double chi = spec.chi();
  const Point d_in{std::sin(chi), std::cos(chi)};
  const Point start = o.to_local(spec.start());

  GhFit fit;
  for (const auto& s : pre) {
    const Point p = o.to_local(s.position);
    const Point rel{p[0] - start[0], p[1] - start[1]};
    fit.residual_pre = std::max(fit.residual_pre, std::abs(rel[0] * d_in[1] - rel[1] * d_in[0]));
  }

  // Total least squares line through the outgoing samples.
  std::vector<Point> q;
  for (const auto& s : post) q.push_back(o.to_local(s.position));
  Point c{0.0, 0.0};
  for (const auto& p : q) c = {c[0] + p[0], c[1] + p[1]};
  c = {c[0] / q.size(), c[1] / q.size()};
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : q) {
    sxx += (p[0] - c[0]) * (p[0] - c[0]);
    sxy += (p[0] - c[0]) * (p[1] - c[1]);
    syy += (p[1] - c[1]) * (p[1] - c[1]);
  }
  const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Point u{std::cos(ang), std::sin(ang)};
  const Point travel{q.back()[0] - q.front()[0], q.back()[1] - q.front()[1]};
  if (dot(u, travel) < 0.0) u = {-u[0], -u[1]};
  for (const auto& p : q)
    fit.residual_post = std::max(fit.residual_post, std::abs((p[0] - c[0]) * u[1] - (p[1] - c[1]) * u[0]));

  if (fit.residual_pre > 1e-2 * R || fit.residual_post > 1e-2 * R)
    throw FitError("gh_fit: samples are not collinear (residuals " + std::to_string(fit.residual_pre) + ", " +
                   std::to_string(fit.residual_post) + ")");

  // Trace the outgoing ray back to the boundary: |c + s u| = R with s < 0.
  const double b = dot(c, u);
  const double disc = b * b - (dot(c, c) - R * R);
  if (disc < 0.0) throw FitError("gh_fit: outgoing ray misses the boundary");
  const double s = -b - std::sqrt(disc);
  const Point P{c[0] + s * u[0], c[1] + s * u[1]};

  const double theta_p = std::atan2(P[0], P[1]);  // clockwise from +y
  fit.l_gh = o.handedness * R * theta_p;
  const Point inward{-P[0] / norm(P), -P[1] / norm(P)};
  fit.chi_r = std::acos(std::clamp(dot(u, inward), -1.0, 1.0));
  fit.chi_r_factor = fit.chi_r / std::abs(chi);
  const double v_theta = spec.hbar * std::abs(spec.m0) / (spec.mass * R);
  fit.delay = fit.l_gh / v_theta;
  fit.origin = o.to_world(P);
  fit.direction = o.to_world(u);
  return fit;
}

// ------------------------------------------------------------------- Husimi

Point HusimiFrame::centroid_xy(const Orientation& o) const {
  const double c = std::cos(alpha), s = std::sin(alpha);
  return o.to_world({d0 * c - h0 * s, d0 * s + h0 * c});
}

HusimiFrame emission_husimi(const FieldFrame& frame, double alpha, const HusimiGrid& grid, double radius,
                            const Orientation& o, bool strict, Exec exec, int jobs) {
  if (!(grid.mu > 0.0)) throw DomainError("husimi: mu must be positive");
  HusimiFrame hf;
  hf.alpha = alpha;
  hf.t = frame.t;
  hf.grid = grid;
  hf.n_d = count_nodes(grid.d_lo, grid.d_hi, grid.d_step);
  hf.n_h = count_nodes(grid.h_lo, grid.h_hi, grid.h_step);

  // Quadrature in h' no coarser than sqrt(mu)/6; output rows are every sub-th node.
  const double sq = std::sqrt(grid.mu);
  const int sub = std::max(1, static_cast<int>(std::ceil(grid.h_step * 6.0 / sq - 1e-12)));
  const double dq = grid.h_step / sub;
  const int halo = static_cast<int>(std::ceil(6.0 * sq / dq));
  const int n_q = (hf.n_h - 1) * sub + 1 + 2 * halo;
  std::vector<double> kernel(2 * static_cast<std::size_t>(halo) + 1);
  const double amp = 1.0 / std::pow(grid.mu * pi, 0.25);
  for (int a = -halo; a <= halo; ++a)
    kernel[static_cast<std::size_t>(a + halo)] = amp * std::exp(-(a * dq) * (a * dq) / (2.0 * grid.mu)) * dq;

  const double ca = std::cos(alpha), sa = std::sin(alpha);
  hf.values.assign(static_cast<std::size_t>(hf.n_d) * static_cast<std::size_t>(hf.n_h), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(hf.n_d));
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(jobs)) if (par)
  for (int i = 0; i < hf.n_d; ++i) {
    try {
      const double D = grid.d_lo + i * grid.d_step;
      std::vector<packet::cplx> line(static_cast<std::size_t>(n_q));
      for (int q = 0; q < n_q; ++q) {
        const double h = grid.h_lo + (q - halo) * dq;
        const Point p = o.to_world({D * ca - h * sa, D * sa + h * ca});
        line[static_cast<std::size_t>(q)] = frame.at(p[0], p[1]);
      }
      for (int j = 0; j < hf.n_h; ++j) {
        const int centre = j * sub + halo;
        packet::cplx acc{};
        for (int a = -halo; a <= halo; ++a)
          acc += kernel[static_cast<std::size_t>(a + halo)] * line[static_cast<std::size_t>(centre + a)];
        hf.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(hf.n_h) + static_cast<std::size_t>(j)] = std::norm(acc);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  double total = 0.0, sd = 0.0, sh = 0.0, peak = 0.0, edge = 0.0;
  for (int i = 0; i < hf.n_d; ++i) {
    const double D = grid.d_lo + i * grid.d_step;
    for (int j = 0; j < hf.n_h; ++j) {
      const double h = grid.h_lo + j * grid.h_step;
      const double v = hf.at(i, j);
      const double w = trap(i, hf.n_d) * trap(j, hf.n_h);
      total += w * v;
      sd += w * v * D;
      sh += w * v * h;
      peak = std::max(peak, v);
      if (i == 0 || j == 0 || i == hf.n_d - 1 || j == hf.n_h - 1) edge = std::max(edge, v);
    }
  }
  hf.strength = total * grid.d_step * grid.h_step;
  if (!(total > 0.0)) throw RangeError("husimi: no intensity inside the (D, h) window");
  hf.d0 = sd / total;
  hf.h0 = sh / total;
  hf.gap = hf.h0 - radius;
  hf.edge_ratio = edge / peak;
  if (strict && hf.edge_ratio > 0.01)
    throw RangeError("husimi: lobe reaches the window boundary (edge/peak = " + std::to_string(hf.edge_ratio) + ")");
  return hf;
}

std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw DomainError("alpha_grid: invalid range");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = lo + i * step;
  return a;
}

DirectionResult tunneling_direction(const FieldFrame& first, const FieldFrame& second, const std::vector<double>& alphas,
                                    const HusimiGrid& grid, double radius, const Orientation& o, Exec exec, int jobs) {
  if (alphas.size() < 3) throw DomainError("tunneling_direction: need at least three angles");
  DirectionResult res;
  res.alphas = alphas;
  const std::size_t n = alphas.size();
  res.f_first.assign(n, 0.0);
  res.delta_first.assign(n, 0.0);
  res.delta_second.assign(n, 0.0);
  std::vector<std::exception_ptr> errors(2 * n);
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(jobs)) if (par)
  for (std::size_t task = 0; task < 2 * n; ++task) {
    try {
      const std::size_t a = task % n;
      if (task < n) {
        const auto h = emission_husimi(first, alphas[a], grid, radius, o, false, Exec::Serial);
        res.f_first[a] = h.strength;
        res.delta_first[a] = h.gap;
      } else {
        res.delta_second[a] = emission_husimi(second, alphas[a], grid, radius, o, false, Exec::Serial).gap;
      }
    } catch (...) {
      errors[task] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Maximum of f, refined by a parabola through the neighbours.
  const auto imax = static_cast<std::size_t>(std::max_element(res.f_first.begin(), res.f_first.end()) - res.f_first.begin());
  res.alpha_max_f = alphas[imax];
  if (imax > 0 && imax + 1 < n) {
    const double fm = res.f_first[imax - 1], f0 = res.f_first[imax], fp = res.f_first[imax + 1];
    const double den = fm - 2.0 * f0 + fp;
    if (den < 0.0) res.alpha_max_f += 0.5 * (fm - fp) / den * (alphas[imax + 1] - alphas[imax]);
  }

  // Crossing of the two Delta curves nearest the f maximum.
  double best = 1e300;
  for (std::size_t a = 0; a + 1 < n; ++a) {
    const double g0 = res.delta_first[a] - res.delta_second[a];
    const double g1 = res.delta_first[a + 1] - res.delta_second[a + 1];
    if (g0 == 0.0 || g0 * g1 < 0.0) {
      const double w = g0 == 0.0 ? 0.0 : g0 / (g0 - g1);
      const double at = alphas[a] + w * (alphas[a + 1] - alphas[a]);
      if (std::abs(at - res.alpha_max_f) < best) {
        best = std::abs(at - res.alpha_max_f);
        res.alpha_t = at;
        res.delta = res.delta_first[a] + w * (res.delta_first[a + 1] - res.delta_first[a]);
        res.crossing_found = true;
      }
    }
  }
  return res;
}

double delta_predicted(const packet::Expansion& exp, const packet::ModeTable& modes) {
  double num = 0.0, den = 0.0;
  for (const auto& e : exp.entries) {
    if (e.cls != spectrum::ModeClass::Tunneling) continue;
    const auto& mode = modes.modes.at(e.mode);
    const double w = std::norm(e.coeff) * mode.gamma;
    num += w * spectrum::delta_j(mode, modes.pot);
    den += w;
  }
  if (!(den > 0.0)) throw DomainError("delta_predicted: no tunneling weight in the expansion");
  return num / den;
}

// ----------------------------------------------------------- emission origin

EmissionOrigin emission_origin(const std::vector<TrajectorySample>& track, double alpha_t, double delta,
                               double radius, const Orientation& o) {
  if (track.size() < 2) throw FitError("emission_origin: need at least two exterior samples");
  const auto [p0, v] = linear_track(track, o);
  const double vv = dot(v, v);
  if (!(vv > 0.0)) throw FitError("emission_origin: exterior track is stationary");

  EmissionOrigin out;
  const Point p1{p0[0] + v[0], p0[1] + v[1]};
  const Point target{-(radius + delta) * std::sin(alpha_t), (radius + delta) * std::cos(alpha_t)};
  out.t_star = 1.0 + dot({target[0] - p1[0], target[1] - p1[1]}, v) / vv;
  out.delay = out.t_star - 1.0;
  out.at_t1 = o.to_world(p1);
  out.target = o.to_world(target);
  out.velocity = o.to_world(v);

  if (track.size() >= 3) {
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i + 1 < track.size(); ++i) {
      const Point a = track[i].position, b = track[i + 1].position;
      const double sp_i = norm({b[0] - a[0], b[1] - a[1]}) / std::abs(track[i + 1].t - track[i].t);
      lo = std::min(lo, sp_i);
      hi = std::max(hi, sp_i);
    }
    out.speed_warning = hi > 1.1 * lo;
  }
  return out;
}

double transmission_angle_deg(const std::vector<TrajectorySample>& track, double radius, const Orientation& o) {
  if (track.size() < 2) throw FitError("transmission_angle: need at least two samples");
  const auto [p0, vel] = linear_track(track, o);
  double tm = 0.0;
  for (const auto& s : track) tm += s.t;
  tm /= static_cast<double>(track.size());
  const Point pm{p0[0] + vel[0] * tm, p0[1] + vel[1] * tm};
  const double len = norm(vel);
  if (!(len > 0.0)) throw FitError("transmission_angle: exterior track is stationary");
  const Point v{vel[0] / len, vel[1] / len};
  // Where the track leaves the circle; tangential tracks use the closest point.
  const double bq = dot(pm, v);
  const double disc = bq * bq - (dot(pm, pm) - radius * radius);
  double s = -bq;
  if (disc >= 0.0 && -bq + std::sqrt(disc) < 0.0) s = -bq + std::sqrt(disc);
  const Point exit{pm[0] + s * v[0], pm[1] + s * v[1]};
  const Point nrm{exit[0] / norm(exit), exit[1] / norm(exit)};
  return std::acos(std::clamp(dot(v, nrm), -1.0, 1.0)) * 180.0 / pi;
}

}  // namespace curvewave::observables
