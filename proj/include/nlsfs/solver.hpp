#pragma once

#include <functional>
#include <sstream>

#include "analysis.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "profiles.hpp"

namespace nlsfs {

enum class Scheme { strang_rk4, lie };

// physical: u on the grid. lens: V on the grid with u = M(t) D(t) V, which turns the
// equation into i V_t + (2t)^{-2} Delta V = (2t)^{-1} e^{-i th} F(e^{i th} V), th = t|y|^2 - pi d/4.
enum class Frame { physical, lens };

struct SolverConfig {
  Grid grid = Grid::cartesian(1, 256, 20);
  double dt = 0.01;
  Scheme scheme = Scheme::strang_rk4;
  Frame frame = Frame::physical;
  double t_start = 64, t_end = 8;
  HomogeneousNonlinearity nonlinearity;
  int samples_per_octave = 8;
  double overflow_factor = 1e6;  // abort when sup|u| grows past this multiple of the start value
  double alias_limit = 1e-6;     // abort when the outer 10% of the box holds this share of the mass
  bool record_residuals = true;
};

inline const char* frame_name(Frame f) { return f == Frame::lens ? "lens" : "physical"; }

// |dt| max|xi|^2 for the physical frame, the same for the lens clock in the lens frame
inline double stability_number(const SolverConfig& c, double t) {
  double k2 = c.grid.k_max() * c.grid.k_max() * (c.grid.radial_kind() ? 1 : c.grid.dim);
  if (c.frame == Frame::lens) return std::abs(c.dt) * k2 / (4 * t * t);
  return std::abs(c.dt) * k2;
}

namespace detail {

inline void check_solver(const SolverConfig& c) {
  if (!(c.dt > 0)) throw config_error("solver: dt must be positive");
  if (!c.nonlinearity.direct && c.nonlinearity.symbol.coeffs.empty())
    throw config_error("solver: nonlinearity has neither a closed form nor coefficients");
  if (c.samples_per_octave < 1) throw config_error("solver: samples_per_octave must be positive");
}

// right-hand side of the pointwise ODE, z' = rhs(t, z, |y|^2)
inline cplx nonlinear_rhs(const SolverConfig& c, double t, cplx z, double y2) {
  const auto& F = c.nonlinearity;
  if (c.frame == Frame::physical) return -I * F(z);
  cplx ph = std::polar(1.0, t * y2 - 0.25 * pi * c.grid.dim);
  return -I / (2 * t) * std::conj(ph) * F(ph * z);
}

inline void nonlinear_substep(Field& u, double t, double dt, const SolverConfig& c) {
  std::vector<double> y2 = c.frame == Frame::lens ? c.grid.x2() : std::vector<double>();
  parallel_for(u.size(), [&](std::size_t i) {
    double q = y2.empty() ? 0.0 : y2[i];
    cplx z = u[i];
    cplx k1 = nonlinear_rhs(c, t, z, q);
    cplx k2 = nonlinear_rhs(c, t + 0.5 * dt, z + 0.5 * dt * k1, q);
    cplx k3 = nonlinear_rhs(c, t + 0.5 * dt, z + 0.5 * dt * k2, q);
    cplx k4 = nonlinear_rhs(c, t + dt, z + dt * k3, q);
    u[i] = z + dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  });
}

inline Field linear_flow(const Field& u, double ta, double tb, Frame f) {
  double tau = f == Frame::physical ? tb - ta : 1.0 / (4 * ta) - 1.0 / (4 * tb);
  return free_propagate(u, tau);
}

inline double sup_abs(const Field& u) {
  double m = 0;
  for (auto& z : u.v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace detail

// One step from t to t + dt (dt < 0 steps backward).
inline Field step(const Field& u, double t, double dt, const SolverConfig& c) {
  if (dt == 0) throw config_error("step: dt must be nonzero");
  if (!(c.grid == u.grid)) throw config_error("step: field does not live on the solver grid");
  if (c.frame == Frame::lens && (t <= 0 || t + dt <= 0)) throw config_error("step: lens frame needs t > 0");
  Field v;
  if (c.scheme == Scheme::strang_rk4) {
    v = detail::linear_flow(u, t, t + 0.5 * dt, c.frame);
    detail::nonlinear_substep(v, t, dt, c);
    v = detail::linear_flow(v, t + 0.5 * dt, t + dt, c.frame);
  } else {
    v = u;
    detail::nonlinear_substep(v, t, dt, c);
    v = detail::linear_flow(v, t, t + dt, c.frame);
  }
  for (auto& z : v.v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw numeric_error("step: non-finite value at t=" + std::to_string(t + dt));
  return v;
}

// ||i u_t + Delta u - F(u)||_2 at t with u_t by the centered difference over +-h. In the lens
// frame the lens-form residual is returned; M D is unitary so the norm is the same.
inline double residual_norm(const Field& u_minus, const Field& u, const Field& u_plus, double t, double h,
                            const SolverConfig& c) {
  Field lap = apply_multiplier(u, [](double k2) { return cplx(-k2); });
  double a = c.frame == Frame::lens ? 1.0 / (4 * t * t) : 1.0;
  Field r(u.grid);
  std::vector<double> y2 = c.frame == Frame::lens ? u.grid.x2() : std::vector<double>();
  for (std::size_t i = 0; i < u.size(); ++i) {
    cplx ut = (u_plus[i] - u_minus[i]) / (2 * h);
    // nonlinear_rhs = -i N, so N = i rhs
    cplx N = I * detail::nonlinear_rhs(c, t, u[i], y2.empty() ? 0.0 : y2[i]);
    r[i] = I * ut + a * lap[i] - N;
  }
  return l2_norm(r);
}

struct RunResult {
  Trajectory traj;
  Series mass;
  double mass_drift_rate = 0;  // max relative mass change per unit time
  int steps = 0;
};

// Integrates from t_start to each time in `samples` (visited in order) and records the states.
inline RunResult integrate(const Field& u0, const std::vector<double>& samples, const SolverConfig& c) {
  detail::check_solver(c);
  RunResult out;
  out.traj.frame = frame_name(c.frame);
  Field u = u0;
  double t = c.t_start;
  double m0 = l2_norm(u0);
  double s0 = std::max(detail::sup_abs(u0), 1e-300);
  auto record = [&](double tt, const Field& prev, double h) {
    std::optional<double> res;
    if (c.record_residuals) {
      Field next = step(u, tt, h, c);
      double hh = std::abs(h);
      // prev sits at tt - h (the state before the last substep)
      res = h < 0 ? residual_norm(next, u, prev, tt, hh, c) : residual_norm(prev, u, next, tt, hh, c);
    }
    double edge = detail::edge_share(u);
    if (edge > c.alias_limit) {
      std::ostringstream os;
      os << "aliasing: share " << edge << " of the mass in the outer box at t=" << tt;
      throw numeric_error(os.str());
    }
    out.traj.add(tt, u, res);
    double m = l2_norm(u);
    out.mass.emplace_back(tt, m);
    if (tt != c.t_start) out.mass_drift_rate = std::max(out.mass_drift_rate, std::abs(m / m0 - 1) / std::abs(tt - c.t_start));
  };
  double h_first = samples.size() > 1 ? (samples[1] - samples[0]) : -c.dt;
  h_first = std::copysign(std::min(std::abs(h_first), c.dt), h_first);
  bool first = true;
  for (double ts : samples) {
    double gap = ts - t;
    Field prev = u;
    double h = h_first;
    if (gap != 0) {
      int n = std::max(1, int(std::ceil(std::abs(gap) / c.dt - 1e-9)));
      h = gap / n;
      for (int k = 0; k < n; ++k) {
        prev = u;
        u = step(u, t + k * h, h, c);
        ++out.steps;
        if (detail::sup_abs(u) > c.overflow_factor * s0) {
          std::ostringstream os;
          os << "overflow: sup|u| = " << detail::sup_abs(u) << " at t=" << t + (k + 1) * h;
          throw numeric_error(os.str());
        }
      }
      t = ts;
    } else if (first && c.record_residuals) {
      prev = step(u, t, -h, c);
    }
    first = false;
    record(ts, prev, h);
  }
  return out;
}

// Leading profile used for the start state and the distance: the stationary-phase form
// u_p = M(t) D(t) w, or U(t) F^{-1} w = M(t) D(t) U(-1/4t) w, which also carries the linear
// dispersive correction (U(-1/4t) - 1) w.
enum class LeadingProfile { stationary_phase, free };

struct FinalStateRun : RunResult {
  Series distance;          // ||u(t) - u_lead(t)||_2
  Series distance_profile;  // ||u(t) - u_lead(t) - V(t)||_2 (equals distance when V is not used)
};

namespace detail {

inline Field profile_state(const FinalData& data, double g1, double t, const SolverConfig& c,
                           const ProfileOptions& o, LeadingProfile lead = LeadingProfile::stationary_phase) {
  if (c.frame == Frame::lens) {
    Field w = make_w_hat(data, g1, t, c.grid, o);
    return lead == LeadingProfile::free ? free_propagate(w, -1 / (4 * t)) : w;
  }
  if (lead == LeadingProfile::free)
    return lens_to_physical(free_propagate(make_w_hat(data, g1, t, profile_grid(c.grid, t), o), -1 / (4 * t)), t,
                            c.grid);
  return make_up(data, g1, t, c.grid, o);
}

inline Field calV_state(const FinalData& data, const FourierSymbol& symbol, double g1, double t,
                        const SolverConfig& c, const ProfileOptions& o) {
  if (c.frame == Frame::lens)
    return Field(c.grid,
                 physical_to_lens(make_calV_closed_form(data, symbol, g1, t, c.grid.scaled(2 * t), o).field, t).v);
  return make_calV_closed_form(data, symbol, g1, t, c.grid, o).field;
}

}  // namespace detail

// Backward run from the leading profile at t_start (+ V(t_start)) to t_end, sampled on a dyadic grid of times.
inline FinalStateRun integrate_final_state(const FinalData& data, const FourierSymbol& symbol, double g1,
                                           const SolverConfig& c, bool include_calV,
                                           const ProfileOptions& o = {},
                                           LeadingProfile lead = LeadingProfile::stationary_phase) {
  if (!(c.t_start > c.t_end) || !(c.t_end >= 2))
    throw config_error("integrate_final_state: need t_start > t_end >= 2");
  auto up = [&](double t) { return detail::profile_state(data, g1, t, c, o, lead); };
  Field u0 = up(c.t_start);
  if (include_calV) u0 += detail::calV_state(data, symbol, g1, c.t_start, c, o);
  auto times = dyadic_times(c.t_end, c.t_start, c.samples_per_octave);
  std::reverse(times.begin(), times.end());
  FinalStateRun out;
  static_cast<RunResult&>(out) = integrate(u0, times, c);
  for (std::size_t i = 0; i < out.traj.size(); ++i) {
    double t = out.traj.times[i];
    Field d = out.traj.states[i] - up(t);
    out.distance.emplace_back(t, l2_norm(d));
    if (include_calV) d -= detail::calV_state(data, symbol, g1, t, c, o);
    out.distance_profile.emplace_back(t, l2_norm(d));
  }
  return out;
}

struct PicardResult {
  Trajectory traj;                  // last iterate
  std::vector<double> differences;  // d_k = sup_t t^b ||v_k - v_{k-1}||_2, k = 1..iters
  std::vector<double> ratios;       // d_k / d_{k-1}, k = 2..iters
  bool diverged = false;
};

// Truncated-horizon fixed-point iteration
//   v -> u_p + i int_t^{T_max} U(t-s) (F(v) - F(u_p))(s) ds + E(t)
// on dyadic samples of [T, T_max]. The time integral uses Gauss nodes in log s on each sample
// interval with v interpolated linearly in log s.
inline PicardResult picard_iterate(const FinalData& data, const FourierSymbol& symbol, double g1,
                                   const SolverConfig& c, double T, double T_max, int iters,
                                   const ProfileOptions& o = {}, double b = 0.76, int quad_steps = 2,
                                   int nodes_per_interval = 8) {
  detail::check_solver(c);
  if (!(T >= 2) || !(T < T_max)) throw config_error("picard_iterate: need 2 <= T < T_max");
  if (iters < 2) throw config_error("picard_iterate: iters must be at least 2");
  auto times = dyadic_times(T, T_max, c.samples_per_octave);
  std::size_t nt = times.size();
  const Grid& g = c.grid;
  std::vector<double> y2 = c.frame == Frame::lens ? g.x2() : std::vector<double>();
  auto k2 = g.k2();
  auto clock = [&](double t) { return c.frame == Frame::lens ? -1.0 / (4 * t) : t; };

  std::vector<Field> prof(nt), ext(nt);
  parallel_for(nt, [&](std::size_t i) {
    double t = times[i];
    prof[i] = detail::profile_state(data, g1, t, c, o);
    Field e;
    if (t < T_max) {
      Grid P = c.frame == Frame::lens ? g : profile_grid(g, t);
      auto et = make_external_terms(data, symbol, g1, t, T_max, quad_steps, P, o);
      e = et.resonant + et.nonresonant;
      if (c.frame == Frame::physical) e = lens_to_physical(e, t, g);
    } else {
      e = Field(g);
    }
    ext[i] = std::move(e);
  });

  // the Duhamel integrand in the chosen frame
  auto source = [&](const Field& v, const Field& p, double s) {
    Field out(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
      double q = y2.empty() ? 0.0 : y2[j];
      out[j] = I * (detail::nonlinear_rhs(c, s, v[j], q) - detail::nonlinear_rhs(c, s, p[j], q));
    }
    return out;
  };
  const auto& rule = detail::gauss16();
  std::vector<double> gx, gw;
  if (nodes_per_interval == 16) {
    gx = rule.x, gw = rule.w;
  } else {
    gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(nodes_per_interval);
    for (int k = 0; k < nodes_per_interval; ++k) {
      double xi, wi;
      gsl_integration_glfixed_point(-1, 1, k, &xi, &wi, tab);
      gx.push_back(xi), gw.push_back(wi);
    }
    gsl_integration_glfixed_table_free(tab);
  }

  auto apply_phi = [&](const std::vector<Field>& v) {
    // J(t_i) = int_{t_i}^{T_max} U(-clock(s)) G(s) ds on the transform side
    std::vector<Field> out(nt);
    std::vector<Spectrum> piece(nt - 1);
    parallel_for(nt - 1, [&](std::size_t i) {
      double a = std::log(times[i]), bb = std::log(times[i + 1]);
      Spectrum acc{g, std::vector<cplx>(g.size())};
      for (std::size_t k = 0; k < gx.size(); ++k) {
        double lam = 0.5 * (1 + gx[k]);
        double s = std::exp(a + lam * (bb - a));
        double w = 0.5 * (bb - a) * gw[k] * s;
        Field vs = v[i], ps = prof[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
          vs[j] = (1 - lam) * v[i][j] + lam * v[i + 1][j];
          ps[j] = (1 - lam) * prof[i][j] + lam * prof[i + 1][j];
        }
        // the profile itself is known exactly at s
        Field pe = detail::profile_state(data, g1, s, c, o);
        for (std::size_t j = 0; j < g.size(); ++j) vs[j] += pe[j] - ps[j];
        Spectrum S = transform(source(vs, pe, s));
        double cs = clock(s);
        for (std::size_t m = 0; m < S.v.size(); ++m) acc.v[m] += w * std::polar(1.0, cs * k2[m]) * S.v[m];
      }
      piece[i] = std::move(acc);
    });
    Spectrum J{g, std::vector<cplx>(g.size())};
    for (std::size_t r = nt; r-- > 0;) {
      if (r + 1 < nt)
        for (std::size_t m = 0; m < J.v.size(); ++m) J.v[m] += piece[r].v[m];
      Spectrum S = J;
      double ct = clock(times[r]);
      for (std::size_t m = 0; m < S.v.size(); ++m) S.v[m] *= I * std::polar(1.0, -ct * k2[m]);
      out[r] = prof[r] + inverse_transform(S) + ext[r];
    }
    return out;
  };

  auto distance = [&](const std::vector<Field>& a, const std::vector<Field>& bvec) {
    double d = 0;
    for (std::size_t i = 0; i < nt; ++i) d = std::max(d, std::pow(times[i], b) * l2_norm(a[i] - bvec[i]));
    return d;
  };

  PicardResult out;
  std::vector<Field> v = prof;
  for (int k = 1; k <= iters; ++k) {
    auto next = apply_phi(v);
    double d = distance(next, v);
    out.differences.push_back(d);
    if (k >= 2) {
      double r = d / out.differences[k - 2];
      out.ratios.push_back(r);
      if (!(r <= 1)) out.diverged = true;
    }
    v = std::move(next);
    if (!std::isfinite(d)) {
      out.diverged = true;
      break;
    }
  }
  out.traj.frame = frame_name(c.frame);
  for (std::size_t i = 0; i < nt; ++i) out.traj.add(times[i], v[i]);
  return out;
}

// max |F_direct(u) - F_series(u)| on the sampled states against the coefficient tail bound
struct SeriesCheck {
  double max_gap = 0;
  double tail_bound = 0;
  bool ok() const { return max_gap <= tail_bound * (1 + 1e-9) + 1e-15; }
};

inline SeriesCheck check_series_truncation(const HomogeneousNonlinearity& F, int N, const Field& u) {
  if (!F.direct) throw config_error("check_series_truncation: needs a closed-form nonlinearity");
  SeriesCheck out;
  double tail = coefficient_tail(F.symbol, N);
  double p = F.degree();
  for (auto& z : u.v) {
    cplx a = F.direct(z), s = eval_series(F.symbol, z, N);
    out.max_gap = std::max(out.max_gap, std::abs(a - s));
    out.tail_bound = std::max(out.tail_bound, tail * std::pow(std::abs(z), p));
  }
  return out;
}

}  // namespace nlsfs
