#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fit.hpp"
#include "grid.hpp"

namespace nlsfs {

// Time samples of a solution (or of any field-valued curve), sorted by time.
struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  std::vector<double> residuals;  // optional, same length as times when present
  std::string config_hash;
  std::string frame = "physical";  // or "lens": states are V with u = M(t) D(t) V

  void add(double t, Field f, std::optional<double> residual = std::nullopt) {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    auto pos = it - times.begin();
    times.insert(it, t);
    states.insert(states.begin() + pos, std::move(f));
    if (residual) residuals.insert(residuals.begin() + pos, *residual);
  }
  std::size_t size() const { return times.size(); }
  const Field& at(double t, double tol = 1e-12) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= tol * std::max(1.0, std::abs(t))) return states[i];
    throw config_error("trajectory has no sample at t=" + std::to_string(t));
  }
};

// 8 points per octave on [t0, t1], both ends included
inline std::vector<double> dyadic_times(double t0, double t1, int per_octave = 8) {
  if (!(t0 > 0) || !(t1 >= t0)) throw config_error("dyadic_times: need 0 < t0 <= t1");
  int n = std::max(1, int(std::ceil(std::log2(t1 / t0) * per_octave - 1e-9)));
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(t0 * std::pow(t1 / t0, double(i) / n));
  if (t1 == t0) out.resize(1);
  return out;
}

inline double norm_lebesgue(const Field& f, double p) {
  if (!(p >= 1)) throw config_error("norm_lebesgue: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0;
    for (auto& z : f.v) m = std::max(m, std::abs(z));
    return m;
  }
  auto w = f.grid.x_weights();
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::pow(std::abs(f[i]), p);
  return std::pow(s, 1.0 / p);
}

// ||<xi>^m F(<x>^s f)||_2
inline double norm_sobolev(const Field& f, double m, double s) {
  Field g = s == 0 ? f : apply_pointwise(f, [s](double x2) { return std::pow(1 + x2, 0.5 * s); });
  Spectrum S = transform(g);
  auto k2 = S.grid.k2();
  auto w = S.grid.k_weights();
  double acc = 0;
  for (std::size_t i = 0; i < S.v.size(); ++i) acc += w[i] * std::pow(1 + k2[i], m) * std::norm(S.v[i]);
  return std::sqrt(acc);
}

struct HomogeneousNorm {
  double value = 0;
  double zero_cell_share = 0;  // estimated share of the squared norm in the dropped cell
  bool zero_mode_flag = false;
};

// ||xi|^m F f||_2 with the origin cell dropped. The dropped cell is estimated from a
// local power-law fit of |F f| on the two innermost shells.
inline HomogeneousNorm norm_homogeneous(const Field& f, double m) {
  Spectrum S = transform(f);
  const Grid& g = S.grid;
  auto k2 = g.k2();
  auto w = g.k_weights();
  double acc = 0;
  double dk = g.dk();
  double r1 = g.radial_kind() ? g.axis_k(0) : dk;
  double r2 = g.radial_kind() ? g.axis_k(1) : dk * std::sqrt(2.0);
  double a1 = 0, a2 = 0;
  int c1 = 0, c2 = 0;
  for (std::size_t i = 0; i < S.v.size(); ++i) {
    if (k2[i] == 0) continue;
    acc += w[i] * std::pow(k2[i], m) * std::norm(S.v[i]);
    double k = std::sqrt(k2[i]);
    if (std::abs(k - r1) < 1e-9 * r1) a1 += std::norm(S.v[i]), ++c1;
    if (std::abs(k - r2) < 1e-9 * r2) a2 += std::norm(S.v[i]), ++c2;
  }
  HomogeneousNorm out;
  out.value = std::sqrt(acc);
  if (c1 && c2 && a1 > 0 && a2 > 0) {
    a1 /= c1, a2 /= c2;
    double kappa2 = std::log(a2 / a1) / std::log(r2 / r1);  // |F f|^2 ~ A k^kappa2
    double A = a1 / std::pow(r1, kappa2);
    int d = g.dim;
    double omega = d == 1 ? 2.0 : d == 2 ? 2 * pi : 4 * pi;
    double rho = g.radial_kind() ? 0.5 * r1
                 : d == 1        ? 0.5 * dk
                 : d == 2        ? dk / std::sqrt(pi)
                                 : dk * std::cbrt(3.0 / (4 * pi));
    double e = kappa2 + 2 * m + d;
    double cell = e > 0 ? omega * A * std::pow(rho, e) / e : std::numeric_limits<double>::infinity();
    out.zero_cell_share = acc > 0 ? cell / (acc + cell) : 1.0;
    if (std::isinf(cell)) out.zero_cell_share = 1.0;
  }
  out.zero_mode_flag = out.zero_cell_share > 0.01;
  return out;
}

inline bool strichartz_admissible(double q, double r, int d = 3) {
  if (r < 2 || (d == 3 && r > 6)) return false;
  double lhs = std::isinf(q) ? 0.0 : 2.0 / q;
  return std::abs(lhs - d * (0.5 - 1.0 / r)) < 1e-12;
}

struct SpacetimeNorm {
  double value = 0;  // over the sampled horizon
  double tail = 0;   // extrapolated beyond the last sample
  double horizon = 0;
  double total() const { return std::isinf(value) ? value : std::pow(std::pow(value, q) + tail, 1.0 / q); }
  double q = 2;
};

// L^q in time of sampled spatial norms, trapezoid in log t on [t_lo, last sample].
inline SpacetimeNorm norm_spacetime(const Series& norms, double q, double t_lo) {
  SpacetimeNorm out;
  out.q = q;
  Series s;
  for (auto& p : norms)
    if (p.first >= t_lo * (1 - 1e-12)) s.push_back(p);
  if (s.empty()) throw config_error("norm_spacetime: no samples at or after t_lo");
  out.horizon = s.back().first;
  if (std::isinf(q)) {
    for (auto& p : s) out.value = std::max(out.value, p.second);
    return out;
  }
  double acc = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    double a = std::log(s[i - 1].first), b = std::log(s[i].first);
    double fa = std::pow(s[i - 1].second, q) * s[i - 1].first;
    double fb = std::pow(s[i].second, q) * s[i].first;
    acc += 0.5 * (b - a) * (fa + fb);
  }
  out.value = std::pow(acc, 1.0 / q);
  if (s.size() >= 4) {
    Series upper(s.begin() + s.size() / 2, s.end());
    bool positive = true;
    for (auto& p : upper) positive = positive && p.second > 0;
    if (positive && upper.size() >= 3) {
      auto fit = fit_decay(upper);
      double e = fit.slope * q + 1;
      double C = std::exp(fit.intercept);
      out.tail = e < 0 ? std::pow(C, q) * std::pow(out.horizon, e) / (-e)
                       : std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

inline SpacetimeNorm norm_spacetime(const Trajectory& traj, double q, double r, double t_lo,
                                    bool override_admissibility = false) {
  int d = traj.states.empty() ? 3 : traj.states.front().grid.dim;
  if (!override_admissibility && !strichartz_admissible(q, r, d))
    throw config_error("norm_spacetime: (q, r) is not an admissible pair: 2/q must equal d(1/2 - 1/r)");
  Series norms;
  for (std::size_t i = 0; i < traj.size(); ++i)
    norms.emplace_back(traj.times[i], norm_lebesgue(traj.states[i], r));
  return norm_spacetime(norms, q, t_lo);
}

struct RateVerdict {
  double b = 0;
  bool meets_uniqueness = false;  // b >= 3/4 - tol
  bool meets_full_rate = false;   // b >= delta/2 - tol
  std::string text;
};

inline RateVerdict rate_verdict(const DecayFit& fit, double delta, double tol = 0.1) {
  RateVerdict v;
  v.b = -fit.slope;
  v.meets_uniqueness = v.b >= 0.75 - tol;
  v.meets_full_rate = v.b >= 0.5 * delta - tol;
  v.text = std::string(v.meets_uniqueness ? "meets uniqueness threshold" : "below uniqueness threshold") +
           ", " + (v.meets_full_rate ? "meets delta/2 within tol" : "below delta/2");
  return v;
}

}  // namespace nlsfs
