#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "analysis.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "special.hpp"

namespace nlsfs {

struct ProfileOptions {
  // multiplies g_1 in the logarithmic phase and in the resonant external term; 0.5 matches
  // the dilation normalisation |D(t) f|^{2/d} = (2t)^{-1} |f|^{2/d}, 1.0 is the literal form
  double phase_factor = 0.5;
  int n_max = 21;
  double delta = 1.55;
};

// eps (|y|/w)^kappa exp(-|y|^2/w^2)
struct GaussianFamily {
  double eps = 0.05;
  double kappa = 2.0;
  double width = 1.0;

  cplx operator()(double r) const {
    double s = r / width;
    if (kappa == 0) return eps * std::exp(-s * s);
    if (s == 0) return 0.0;
    return eps * std::pow(s, kappa) * std::exp(-s * s);
  }
  double sup() const {
    if (kappa == 0) return eps;
    return eps * std::pow(0.5 * kappa, 0.5 * kappa) * std::exp(-0.5 * kappa);
  }
  // || |y|^{-delta} u ||_2 over R^d; infinite unless kappa > delta - d/2
  double hminus(double delta, int d) const {
    double a = kappa - delta + 0.5 * d;
    if (a <= 0) return std::numeric_limits<double>::infinity();
    double omega = d == 1 ? 2.0 : d == 2 ? 2 * pi : 4 * pi;
    double w2 = width * width;
    double v = eps * eps * std::pow(width, -2 * kappa) * 0.5 * omega * std::exp(std::lgamma(a)) *
               std::pow(0.5 * w2, a);
    return std::sqrt(v);
  }
};

// The final datum, as a function of the profile variable (the Fourier side of u_+).
class FinalData {
 public:
  int dim = 3;

  static FinalData gaussian(GaussianFamily g, int dim = 3) {
    if (!(g.eps >= 0) || !(g.width > 0) || !(g.kappa >= 0))
      throw config_error("final datum: need eps >= 0, width > 0, kappa >= 0");
    FinalData d;
    d.dim = dim;
    d.closed_ = g;
    d.fill_norms();
    return d;
  }
  static FinalData tabulated(Field samples) {
    FinalData d;
    d.dim = samples.grid.dim;
    d.table_ = std::move(samples);
    if (d.table_->grid.radial_kind()) {
      const Grid& g = d.table_->grid;
      std::vector<cplx> b(d.table_->v);
      for (int j = 0; j < g.n; ++j) b[j] *= g.axis_x(j);
      detail::dst_inplace(b);
      for (auto& x : b) x /= double(g.n + 1);
      d.sine_ = std::move(b);
    }
    d.fill_norms();
    return d;
  }

  const std::optional<GaussianFamily>& closed_form() const { return closed_; }
  const std::optional<Field>& table() const { return table_; }

  cplx at(const std::array<double, 3>& y) const {
    if (closed_) return (*closed_)(std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]));
    const Grid& g = table_->grid;
    if (g.radial_kind()) {
      double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
      if (r >= g.L) return 0.0;
      if (r < 1e-300) r = 1e-300;
      cplx acc = 0;
      for (int m = 0; m < g.n; ++m) acc += sine_[m] * std::sin(g.axis_k(m) * r);
      return acc / r;
    }
    std::vector<std::vector<double>> rows(g.dim);
    for (int a = 0; a < g.dim; ++a) rows[a] = detail::cardinal_row(g, y[a]);
    cplx acc = 0;
    for (std::size_t i = 0; i < table_->size(); ++i) {
      double w = 1;
      std::size_t r = i;
      for (int a = g.dim - 1; a >= 0; --a) {
        w *= rows[a][r % g.n];
        r /= g.n;
      }
      if (w != 0) acc += w * (*table_)[i];
    }
    return acc;
  }

  Field on(const Grid& g) const {
    if (g.dim != dim) throw config_error("final datum: dimension mismatch");
    if (closed_) return sample_radial(g, [&](double r) { return (*closed_)(r); });
    if (table_->grid == g) return *table_;
    if (table_->grid.kind == g.kind) return evaluate_scaled(*table_, g, 1.0);
    return sample(g, [&](const std::array<double, 3>& y) { return at(y); });
  }

  double sup_norm() const { return sup_; }
  double h02_norm() const { return h02_; }
  double hminus_norm(double delta) const {
    if (closed_) return closed_->hminus(delta, dim);
    const Grid& g = table_->grid;
    auto x2 = g.x2();
    auto w = g.x_weights();
    double acc = 0;
    for (std::size_t i = 0; i < table_->size(); ++i)
      if (x2[i] > 0) acc += w[i] * std::pow(x2[i], -delta) * std::norm((*table_)[i]);
    return std::sqrt(acc);
  }
  // H^{-delta} finiteness, the admissibility requirement on the datum
  void validate(double delta) const {
    if (closed_ && !std::isfinite(closed_->hminus(delta, dim)))
      throw config_error("final datum: H^-delta norm is infinite; need kappa > delta - d/2");
    if (!std::isfinite(sup_)) throw config_error("final datum: sup norm is not finite");
  }

 private:
  std::optional<GaussianFamily> closed_;
  std::optional<Field> table_;
  std::vector<cplx> sine_;
  double sup_ = 0, h02_ = 0;

  void fill_norms() {
    Field f;
    if (closed_) {
      double R = 10 * closed_->width;
      Grid g = dim == 3 ? Grid::radial(2047, R) : Grid::cartesian(dim, dim == 1 ? 1024 : 128, R);
      f = on(g);
      sup_ = closed_->sup();
    } else {
      f = *table_;
      sup_ = norm_lebesgue(f, std::numeric_limits<double>::infinity());
    }
    h02_ = norm_sobolev(f, 2, 0);
  }
};

// Profile grid P: D(t) maps P onto G point by point.
inline Grid profile_grid(const Grid& G, double t) { return G.scaled(1.0 / (2 * t)); }

// radial grid covering |x| <= 12 t + pad with spacing about h
inline Grid reference_grid(double t, double h = 0.025, double pad = 40) {
  double R = 12 * t + pad;
  int m = 1;
  while ((m + 1) * h < R) m = 2 * m + 1;
  return Grid::radial(m, R);
}

inline double resonant_rate(double g1, const ProfileOptions& o) { return o.phase_factor * g1; }

// u_+^ exp(-i mu |u_+^|^{2/d} log t), mu = phase_factor g_1
inline Field make_w_hat(const FinalData& data, double g1, double t, const Grid& P,
                        const ProfileOptions& o = {}) {
  if (!(t >= 1)) throw config_error("make_w_hat: t must be >= 1");
  Field u = data.on(P);
  double c = resonant_rate(g1, o) * std::log(t);
  double q = 2.0 / P.dim;
  for (auto& z : u.v) z *= std::polar(1.0, -c * std::pow(std::abs(z), q));
  return u;
}

// lens frame: u = M(t) D(t) V with V on the profile grid of G
inline Field lens_to_physical(const Field& V, double t, const Grid& G) {
  if (!(profile_grid(G, t) == V.grid)) throw config_error("lens_to_physical: grid mismatch");
  Field u(G, V.v);
  u *= dilation_prefactor(t, G.dim);
  double c = 1.0 / (4 * t);
  auto x2 = G.x2();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= std::polar(1.0, c * x2[i]);
  return u;
}

inline Field physical_to_lens(const Field& u, double t) {
  Grid P = profile_grid(u.grid, t);
  Field V(P, u.v);
  V *= 1.0 / dilation_prefactor(t, u.grid.dim);
  double c = -1.0 / (4 * t);
  auto x2 = u.grid.x2();
  for (std::size_t i = 0; i < V.size(); ++i) V[i] *= std::polar(1.0, c * x2[i]);
  return V;
}

inline Field make_up(const FinalData& data, double g1, double t, const Grid& G,
                     const ProfileOptions& o = {}) {
  return lens_to_physical(make_w_hat(data, g1, t, profile_grid(G, t), o), t, G);
}

inline Field make_phi_n(const Field& w_hat, int n) {
  double p = 1.0 + 2.0 / w_hat.grid.dim;
  Field out = w_hat;
  for (auto& z : out.v) z = monomial(z, n, p);
  return out;
}

// sum of |g_n| over |n| > N: stored modes plus a power-law extrapolation past the table
inline double coefficient_tail(const FourierSymbol& s, int N) {
  double tail = 0;
  for (auto& [n, g] : s.coeffs)
    if (std::abs(n) > N) tail += std::abs(g);
  int M = s.max_index();
  try {
    auto fit = coeff_decay_fit(s, std::max(3, M / 2), M);
    double q = -fit.slope;
    if (q <= 1) return std::numeric_limits<double>::infinity();
    // odd modes of both signs past max(M, N)
    tail += std::exp(fit.intercept) * std::pow(std::max(M, N), 1 - q) / (q - 1);
  } catch (const numeric_error&) {
  }
  return tail;
}

struct ProfileTerm {
  Field field;
  double tail_estimate = 0;       // truncation bound on the L^2 norm
  std::vector<int> aliased_modes;  // n whose intermediate field reached the box edge
  int terms = 0;
};

namespace detail {

inline std::vector<int> nonresonant_modes(const FourierSymbol& s, int N) {
  std::vector<int> out;
  for (auto& [n, g] : s.coeffs)
    if (n != 0 && n != 1 && std::abs(n) <= N && g != cplx{}) out.push_back(n);
  return out;
}

inline double edge_share(const Field& f, double frac = 0.9) {
  auto x2 = f.grid.x2();
  auto w = f.grid.x_weights();
  double lim = frac * f.grid.L, tot = 0, edge = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double e = w[i] * std::norm(f[i]);
    tot += e;
    bool out = f.grid.radial_kind() ? std::sqrt(x2[i]) > lim : false;
    if (!f.grid.radial_kind()) {
      auto p = f.grid.point(i);
      for (int a = 0; a < f.grid.dim; ++a) out = out || std::abs(p[a]) > lim;
    }
    if (out) edge += e;
  }
  return tot > 0 ? edge / tot : 0.0;
}

inline void require_3d(const Grid& G, const char* who) {
  if (G.dim != 3) throw config_error(std::string(who) + ": the second profile is defined for d = 3");
}

inline double calV_tail(const FinalData& data, const FourierSymbol& s, int N, const Grid& P) {
  // ||V_n||_2 <= |g_n|/2 || |u_+^|^{5/3} ||_2
  Field a = data.on(P);
  for (auto& z : a.v) z = std::pow(std::abs(z), 5.0 / 3.0);
  return 0.5 * l2_norm(a) * coefficient_tail(s, N);
}

}  // namespace detail

// (i n)^{3/2} with arg(i n) = 3 pi / 2 for n < 0. This is the branch under which the closed
// form equals the operator form and the direct Duhamel integral.
inline cplx in_pow_three_halves(int n) { return double(sgn(n)) * cpow_principal(cplx(0, n), 1.5); }

// -F^{-1} sum_n g_n / (2 (i n)^{3/2}) [ i^{-3n/2} phi_n e^{-i n t |.|^2} / (1 + i n (n-1) t |.|^2) ](xi / n)
inline ProfileTerm make_calV_closed_form(const FinalData& data, const FourierSymbol& symbol, double g1,
                                         double t, const Grid& G, const ProfileOptions& o = {}) {
  detail::require_3d(G, "make_calV_closed_form");
  auto modes = detail::nonresonant_modes(symbol, o.n_max);
  Spectrum S{G, std::vector<cplx>(G.size())};
  ProfileTerm out;
  out.terms = static_cast<int>(modes.size());
  if (!modes.empty()) {
    double mu = resonant_rate(g1, o) * std::log(t);
    auto k2 = G.k2();
    // lattice points of the transform side, as vectors
    std::vector<std::array<double, 3>> kv(G.size());
    for (std::size_t i = 0; i < kv.size(); ++i) {
      if (G.radial_kind()) {
        kv[i] = {G.axis_k(static_cast<int>(i)), 0, 0};
      } else {
        std::size_t r = i;
        for (int a = 2; a >= 0; --a) {
          kv[i][a] = G.axis_k(static_cast<int>(r % G.n));
          r /= G.n;
        }
      }
    }
    parallel_for(G.size(), [&](std::size_t i) {
      cplx acc = 0;
      for (int n : modes) {
        double s = 1.0 / n;
        cplx u = data.at({kv[i][0] * s, kv[i][1] * s, kv[i][2] * s});
        if (u == cplx{}) continue;
        cplx w = u * std::polar(1.0, -mu * std::pow(std::abs(u), 2.0 / 3.0));
        double e2 = k2[i] * s * s;
        cplx H = ipow(-1.5 * n) * monomial(w, n, 5.0 / 3.0) * std::polar(1.0, -n * t * e2) /
                 cplx(1.0, double(n) * (n - 1) * t * e2);
        acc += symbol[n] / (2.0 * in_pow_three_halves(n)) * H;
      }
      S.v[i] = -acc;
    });
  }
  out.field = inverse_transform(S);
  out.tail_estimate = detail::calV_tail(data, symbol, o.n_max, profile_grid(G, t));
  return out;
}

// -i D(t) sum_n g_n / (2 i^{3(n-1)/2}) E^n(t) D(n/2)^{-1} U(-n/4t) A_n(t) D(n/2) phi_n(t)
inline ProfileTerm make_calV_operator_form(const FinalData& data, const FourierSymbol& symbol, double g1,
                                           double t, const Grid& G, const ProfileOptions& o = {}) {
  detail::require_3d(G, "make_calV_operator_form");
  if (!(t >= 2)) throw config_error("make_calV_operator_form: t must be >= 2");
  Grid P = profile_grid(G, t);
  Field w = make_w_hat(data, g1, t, P, o);
  auto modes = detail::nonresonant_modes(symbol, o.n_max);
  ProfileTerm out;
  out.terms = static_cast<int>(modes.size());
  std::vector<Field> parts(modes.size());
  std::vector<char> aliased(modes.size(), 0);
  auto y2 = P.x2();
  parallel_for(modes.size(), [&](std::size_t k) {
    int n = modes[k];
    // D(n/2) phi_n lives on |n| P with the same samples up to (i n)^{-3/2}; the constant
    // cancels against D(n/2)^{-1} and the reflection for n < 0 commutes with U and A_n
    Grid Q = P.scaled(std::abs(n));
    Field q(Q, make_phi_n(w, n).v);
    double c = (1.0 - 1.0 / n) * t;
    q = apply_pointwise(q, [c](double x2) { return 1.0 / cplx(1.0, c * x2); });
    q = free_propagate(q, -n / (4 * t));
    aliased[k] = detail::edge_share(q) > 1e-12;  // amplitude share 1e-6
    Field r(P, std::move(q.v));
    cplx coef = -I * symbol[n] / (2.0 * ipow(1.5 * (n - 1)));
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= coef * std::polar(1.0, n * t * y2[j]);
    parts[k] = std::move(r);
  });
  Field acc(P);
  for (auto& p : parts) acc += p;
  for (std::size_t k = 0; k < modes.size(); ++k)
    if (aliased[k]) out.aliased_modes.push_back(modes[k]);
  out.field = Field(G, std::move(acc.v));
  out.field *= dilation_prefactor(t, 3);
  out.tail_estimate = detail::calV_tail(data, symbol, o.n_max, P);
  return out;
}

// -i sum_n g_n (t^{-1} - i (n-1)/n Delta)^{-1} |u_p|^{5/3-n} u_p^n
inline ProfileTerm make_vp(const FinalData& data, const FourierSymbol& symbol, double g1, double t,
                           const Grid& G, const ProfileOptions& o = {}) {
  detail::require_3d(G, "make_vp");
  Field up = make_up(data, g1, t, G, o);
  auto modes = detail::nonresonant_modes(symbol, o.n_max);
  ProfileTerm out;
  out.terms = static_cast<int>(modes.size());
  Spectrum S{G, std::vector<cplx>(G.size())};
  auto k2 = G.k2();
  for (int n : modes) {
    Spectrum m = transform(make_phi_n(up, n));
    double c = double(n - 1) / n;
    cplx a = -I * symbol[n];
    for (std::size_t i = 0; i < S.v.size(); ++i) S.v[i] += a * m.v[i] / cplx(1.0 / t, c * k2[i]);
  }
  out.field = inverse_transform(S);
  return out;
}

struct MttProfile {
  Field field;
  int excluded_cells = 0;
};

// sum_n g_n / (n (1-n)) |2t/x|^2 |u_p|^{5/3-n} u_p^n, the origin cell excluded
inline MttProfile make_mtt_profile(const FinalData& data, const FourierSymbol& symbol, double g1, double t,
                                   const Grid& G, const ProfileOptions& o = {}) {
  Field up = make_up(data, g1, t, G, o);
  auto modes = detail::nonresonant_modes(symbol, o.n_max);
  MttProfile out;
  out.field = Field(G);
  auto x2 = G.x2();
  double h2 = 0.25 * G.h() * G.h();
  double p = 1.0 + 2.0 / G.dim;
  for (std::size_t i = 0; i < G.size(); ++i) {
    if (x2[i] < h2) {
      ++out.excluded_cells;
      continue;
    }
    cplx acc = 0;
    for (int n : modes) acc += symbol[n] / double(n * (1 - n)) * monomial(up[i], n, p);
    out.field[i] = 4 * t * t / x2[i] * acc;
  }
  return out;
}

struct ExternalTerms {
  Field resonant;      // lens-frame E_r on the profile grid
  Field nonresonant;   // lens-frame E_nr
  double tail_resonant = 0, tail_nonresonant = 0;
  double quad_change = 0;  // relative change under panel doubling
  bool converged = true;
};

namespace detail {

struct LogNodes {
  std::vector<double> s, w;  // w includes ds = s d(log s)
};

inline LogNodes log_gauss_nodes(double a, double b, int panels) {
  const auto& rule = gauss16();
  LogNodes out;
  double la = std::log(a), lb = std::log(b), h = (lb - la) / panels;
  for (int p = 0; p < panels; ++p) {
    double c = la + (p + 0.5) * h;
    for (std::size_t k = 0; k < rule.x.size(); ++k) {
      double s = std::exp(c + 0.5 * h * rule.x[k]);
      out.s.push_back(s);
      out.w.push_back(0.5 * h * rule.w[k] * s);
    }
  }
  return out;
}

// lens-frame integrals over [a, b] of the two external-term integrands, in transform space
inline std::pair<Spectrum, Spectrum> external_integrals(const FinalData& data, const FourierSymbol& symbol,
                                                        double g1, double t, double a, double b,
                                                        int panels, const Grid& P,
                                                        const ProfileOptions& o) {
  auto nodes = log_gauss_nodes(a, b, panels);
  auto modes = nonresonant_modes(symbol, o.n_max);
  auto k2 = P.k2();
  auto y2 = P.x2();
  double p = 1.0 + 2.0 / P.dim;
  Spectrum Sr{P, std::vector<cplx>(P.size())}, Sn{P, std::vector<cplx>(P.size())};
  for (std::size_t q = 0; q < nodes.s.size(); ++q) {
    double s = nodes.s[q], w = nodes.w[q];
    Field ws = make_w_hat(data, g1, s, P, o);
    double tau = 1.0 / (4 * s) - 1.0 / (4 * t);
    if (g1 != 0) {
      Field G1 = ws;
      for (auto& z : G1.v) z = g1 * monomial(z, 1, p);
      Spectrum T = transform(G1);
      // -i pf [U(-1/4t) - U(1/4s - 1/4t)] G(w)(s) / s
      for (std::size_t i = 0; i < T.v.size(); ++i)
        Sr.v[i] += -I * o.phase_factor * w / s *
                   (std::polar(1.0, k2[i] / (4 * t)) - std::polar(1.0, -tau * k2[i])) * T.v[i];
    }
    if (!modes.empty()) {
      Field src(P);
      for (int n : modes) {
        cplx c = symbol[n] * ipow(-1.5 * (n - 1)) * 0.5 / s;
        for (std::size_t j = 0; j < src.size(); ++j)
          src[j] += c * std::polar(1.0, (n - 1) * s * y2[j]) * monomial(ws[j], n, p);
      }
      Spectrum T = transform(src);
      for (std::size_t i = 0; i < T.v.size(); ++i) Sn.v[i] += I * w * std::polar(1.0, -tau * k2[i]) * T.v[i];
    }
  }
  return {std::move(Sr), std::move(Sn)};
}

inline void add_spectra(Spectrum& a, const Spectrum& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

}  // namespace detail

// E_r(t) = R(t) w - i pf int_t^{T_max} U(t-s) R(s) G(w)(s) ds/s and
// E_nr(t) = i int_t^{T_max} U(t-s) N(u_p)(s) ds, both in the lens frame u = M(t) D(t) V.
// quad_steps is the number of 16-point Gauss panels per octave of [t, T_max].
inline ExternalTerms make_external_terms(const FinalData& data, const FourierSymbol& symbol, double g1,
                                         double t, double T_max, int quad_steps, const Grid& P,
                                         const ProfileOptions& o = {}) {
  if (!(t < T_max)) throw config_error("make_external_terms: need t < T_max");
  if (quad_steps < 1) throw config_error("make_external_terms: quad_steps must be positive");
  if (!(t >= 1)) throw config_error("make_external_terms: t must be >= 1");
  double mid = T_max / 2 > t ? T_max / 2 : t;
  int panels_low = std::max(1, int(std::ceil(quad_steps * std::log2(mid / t))));
  int panels_top = quad_steps;
  auto run = [&](int factor) {
    std::pair<Spectrum, Spectrum> low{Spectrum{P, std::vector<cplx>(P.size())},
                                      Spectrum{P, std::vector<cplx>(P.size())}};
    if (mid > t) low = detail::external_integrals(data, symbol, g1, t, t, mid, panels_low * factor, P, o);
    auto top = detail::external_integrals(data, symbol, g1, t, mid, T_max, panels_top * factor, P, o);
    return std::make_pair(low, top);
  };
  auto coarse = run(1);
  auto fine = run(2);
  ExternalTerms out;
  Spectrum Sr = fine.first.first, Sn = fine.first.second;
  detail::add_spectra(Sr, fine.second.first);
  detail::add_spectra(Sn, fine.second.second);
  Spectrum Cr = coarse.first.first, Cn = coarse.first.second;
  detail::add_spectra(Cr, coarse.second.first);
  detail::add_spectra(Cn, coarse.second.second);

  // boundary part (U(-1/4t) - 1) w(t)
  Field wt = make_w_hat(data, g1, t, P, o);
  Spectrum W = transform(wt);
  auto k2 = P.k2();
  for (std::size_t i = 0; i < W.v.size(); ++i) {
    cplx b = (std::polar(1.0, k2[i] / (4 * t)) - 1.0) * W.v[i];
    Sr.v[i] += b;
    Cr.v[i] += b;
  }
  out.resonant = inverse_transform(Sr);
  out.nonresonant = inverse_transform(Sn);
  double nr = l2_norm(out.resonant), nn = l2_norm(out.nonresonant);
  double dr = l2_norm(inverse_transform(Cr) - out.resonant);
  double dn = l2_norm(inverse_transform(Cn) - out.nonresonant);
  double ref = std::max({nr, nn, 1e-300});
  out.quad_change = std::max(dr, dn) / ref;
  out.converged = out.quad_change <= 1e-6;
  // last octave scaled by the geometric sum of the t^{-delta/2} rate
  double geo = 1.0 / (std::pow(2.0, 0.5 * o.delta) - 1.0);
  out.tail_resonant = l2_norm(fine.second.first) * geo;
  out.tail_nonresonant = l2_norm(fine.second.second) * geo;
  return out;
}

// Snapshot of the asymptotic objects at one time on a physical grid G (d = 3).
class ProfileBundle {
 public:
  double t = 0;
  Field w_hat, u_p, calV, v_p;

  ProfileBundle(const FinalData& data, const FourierSymbol& symbol, double g1, double t_, const Grid& G,
                const ProfileOptions& o = {})
      : t(t_), opts_(o) {
    w_hat = make_w_hat(data, g1, t, profile_grid(G, t), o);
    u_p = lens_to_physical(w_hat, t, G);
    calV = make_calV_closed_form(data, symbol, g1, t, G, o).field;
    v_p = make_vp(data, symbol, g1, t, G, o).field;
  }
  const Field& phi(int n) const {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = phi_.find(n);
    if (it == phi_.end()) it = phi_.emplace(n, make_phi_n(w_hat, n)).first;
    return it->second;
  }

 private:
  ProfileOptions opts_;
  mutable std::map<int, Field> phi_;
  std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
};

}  // namespace nlsfs
