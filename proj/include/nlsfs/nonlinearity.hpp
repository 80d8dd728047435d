#pragma once

#include <gsl/gsl_integration.h>

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "fit.hpp"
#include "special.hpp"

namespace nlsfs {

enum class Smoothness { smooth, holder };

struct PeriodicSymbol {
  std::function<cplx(double)> eval;
  Smoothness smoothness = Smoothness::smooth;
  double holder_exponent = 1.0;
  std::vector<double> kinks;  // non-smooth points in [0, 2pi)
};

inline PeriodicSymbol symbol_from_nonlinearity(std::function<cplx(cplx)> F,
                                               Smoothness hint = Smoothness::smooth,
                                               double beta = 1.0,
                                               std::vector<double> kinks = {}) {
  return {[F = std::move(F)](double th) { return F(std::polar(1.0, th)); }, hint, beta,
          std::move(kinks)};
}

inline PeriodicSymbol gauge_symbol() {
  return {[](double th) { return std::polar(1.0, th); }, Smoothness::smooth, 1.0, {}};
}

// |cos|^(alpha-1) cos
inline PeriodicSymbol cos_power_symbol(double alpha) {
  bool smooth = alpha == std::floor(alpha) && std::fmod(alpha, 2.0) == 1.0;
  return {[alpha](double th) -> cplx {
            double c = std::cos(th);
            return c == 0.0 ? 0.0 : std::pow(std::abs(c), alpha - 1.0) * c;
          },
          smooth ? Smoothness::smooth : Smoothness::holder, std::min(alpha, 1.0),
          {0.5 * pi, 1.5 * pi}};
}

// |sin|^(alpha-1) sin
inline PeriodicSymbol sin_power_symbol(double alpha) {
  bool smooth = alpha == std::floor(alpha) && std::fmod(alpha, 2.0) == 1.0;
  return {[alpha](double th) -> cplx {
            double s = std::sin(th);
            return s == 0.0 ? 0.0 : std::pow(std::abs(s), alpha - 1.0) * s;
          },
          smooth ? Smoothness::smooth : Smoothness::holder, std::min(alpha, 1.0),
          {0.0, pi}};
}

struct QuadResult {
  cplx value;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
  explicit GaussRule(int n) {
    gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(n);
    x.resize(n), w.resize(n);
    for (int i = 0; i < n; ++i)
      gsl_integration_glfixed_point(-1.0, 1.0, i, &x[i], &w[i], tab);
    gsl_integration_glfixed_table_free(tab);
  }
};

inline const GaussRule& gauss16() {
  static const GaussRule r(16);
  return r;
}

template <class Fn>
cplx gauss_panel(const Fn& f, double a, double b) {
  const auto& r = gauss16();
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
  return h * s;
}

inline constexpr double grading_ratio = 0.125;
inline constexpr int grading_levels = 22;

// panels uniform on [a,b], end panels geometrically refined toward both endpoints
template <class Fn>
cplx graded_interval(const Fn& f, double a, double b, int panels) {
  double H = (b - a) / panels;
  cplx s = 0.0;
  for (int p = 1; p + 1 < panels; ++p) s += gauss_panel(f, a + p * H, a + (p + 1) * H);
  auto graded = [&](double end, double dir) {
    double outer = H;
    for (int k = 0; k < grading_levels; ++k) {
      double inner = outer * grading_ratio;
      double lo = end + dir * inner, hi = end + dir * outer;
      s += dir > 0 ? gauss_panel(f, lo, hi) : gauss_panel(f, hi, lo);
      outer = inner;
    }
    s += dir > 0 ? gauss_panel(f, end, end + outer) : gauss_panel(f, end - outer, end);
  };
  graded(a, 1.0);
  graded(b, -1.0);
  return s;
}

inline cplx quad_holder(const PeriodicSymbol& g, int n, int panels) {
  std::vector<double> k = g.kinks;
  for (auto& v : k) v = std::fmod(std::fmod(v, 2 * pi) + 2 * pi, 2 * pi);
  std::sort(k.begin(), k.end());
  if (k.empty()) k.push_back(0.0);
  int m = static_cast<int>(k.size());
  auto f = [&](double th) { return g.eval(th) * std::polar(1.0, -n * th); };
  int per = std::max(2, (panels + m - 1) / m);
  cplx s = 0.0;
  for (int i = 0; i < m; ++i) {
    double a = k[i], b = (i + 1 < m) ? k[i + 1] : k[0] + 2 * pi;
    s += graded_interval(f, a, b, per);
  }
  return s / (2 * pi);
}

inline cplx quad_trapezoid(const PeriodicSymbol& g, int n, int points) {
  cplx s = 0.0;
  for (int j = 0; j < points; ++j) {
    double th = 2 * pi * j / points;
    s += g.eval(th) * std::polar(1.0, -n * th);
  }
  return s / static_cast<double>(points);
}

}  // namespace detail

inline constexpr double coefficient_tolerance = 1e-10;
inline constexpr double assumption_tolerance = 1e-8;

inline QuadResult coeff_quadrature(const PeriodicSymbol& g, int n, int panels) {
  if (panels < 8 * (std::abs(n) + 1))
    throw config_error("coeff_quadrature: panels must be at least 8(|n|+1)");
  auto rule = [&](int p) {
    return g.smoothness == Smoothness::smooth ? detail::quad_trapezoid(g, n, p)
                                              : detail::quad_holder(g, n, p);
  };
  cplx coarse = rule(panels), fine = rule(2 * panels);
  QuadResult r{fine, std::abs(fine - coarse), true};
  r.converged = r.error <= coefficient_tolerance;
  return r;
}

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > -1.0)) throw config_error("power coefficients require alpha > -1");
  if (alpha == std::floor(alpha) && std::fmod(std::abs(alpha), 2.0) == 1.0)
    throw config_error("power coefficients undefined for odd integer alpha (Gamma pole)");
}

// Gamma((a+2)/2) Gamma((n-a)/2) / (sqrt(pi) Gamma((1-a)/2) Gamma((n+a+2)/2))
inline double power_core(double alpha, int n) {
  using special::lgamma_signed;
  int s1, s2, s3, s4;
  double l1 = lgamma_signed(0.5 * (alpha + 2), s1);
  double l2 = lgamma_signed(0.5 * (n - alpha), s2);
  double l3 = lgamma_signed(0.5 * (1 - alpha), s3);
  double l4 = lgamma_signed(0.5 * (n + alpha + 2), s4);
  if (s2 == 0) return 0.0;  // not reached for admissible alpha and odd n
  if (s4 == 0) return 0.0;
  double v = std::exp(l1 + l2 - l3 - l4) / std::sqrt(pi);
  return s1 * s2 * s3 * s4 * v;
}

}  // namespace detail

inline cplx coeff_cos_power(double alpha, int n) {
  detail::check_alpha(alpha);
  if (n % 2 == 0) return 0.0;
  int m = (n - 1) / 2;
  double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return sign * detail::power_core(alpha, n);
}

// sine coefficient b_n = (1/2pi) int g sin(n th); the e^{in th} coefficient is -i b_n
inline cplx coeff_sin_power(double alpha, int n) {
  detail::check_alpha(alpha);
  if (n % 2 == 0) return 0.0;
  return detail::power_core(alpha, n);
}

struct FourierSymbol {
  std::map<int, cplx> coeffs;
  std::map<int, double> errors;
  int dimension = 3;
  std::vector<std::string> failures;

  double degree() const { return 1.0 + 2.0 / dimension; }
  int max_index() const {
    int m = 0;
    for (auto& [n, _] : coeffs) m = std::max(m, std::abs(n));
    return m;
  }
  cplx operator[](int n) const {
    auto it = coeffs.find(n);
    return it == coeffs.end() ? cplx{} : it->second;
  }
  FourierSymbol truncated(int N) const {
    FourierSymbol s;
    s.dimension = dimension;
    for (auto& [n, g] : coeffs)
      if (std::abs(n) <= N) s.coeffs[n] = g;
    for (auto& [n, e] : errors)
      if (std::abs(n) <= N) s.errors[n] = e;
    return s;
  }
  // symmetric in n, as demanded of every stored table
  bool symmetric_support() const {
    for (auto& [n, _] : coeffs)
      if (!coeffs.count(-n)) return false;
    return true;
  }
};

struct SymbolSource {
  enum class Kind { quadrature, cos_power, sin_power, combination } kind = Kind::cos_power;
  PeriodicSymbol g;
  double alpha = 5.0 / 3.0;
  int n_max = 21;
  std::vector<std::pair<cplx, SymbolSource>> parts;

  static SymbolSource quadrature(PeriodicSymbol g, int n_max) {
    SymbolSource s;
    s.kind = Kind::quadrature, s.g = std::move(g), s.n_max = n_max;
    return s;
  }
  static SymbolSource cos_power(double alpha, int n_max) {
    SymbolSource s;
    s.kind = Kind::cos_power, s.alpha = alpha, s.n_max = n_max;
    return s;
  }
  static SymbolSource sin_power(double alpha, int n_max) {
    SymbolSource s;
    s.kind = Kind::sin_power, s.alpha = alpha, s.n_max = n_max;
    return s;
  }
  static SymbolSource combination(std::vector<std::pair<cplx, SymbolSource>> parts) {
    SymbolSource s;
    s.kind = Kind::combination, s.parts = std::move(parts);
    return s;
  }
};

inline FourierSymbol build_symbol(const SymbolSource& src, int dimension = 3) {
  if (src.kind != SymbolSource::Kind::combination && src.n_max < 1)
    throw config_error("build_symbol: N_max must be at least 1");
  FourierSymbol s;
  s.dimension = dimension;
  switch (src.kind) {
    case SymbolSource::Kind::quadrature: {
      int N = src.n_max;
      std::vector<QuadResult> res(2 * N + 1);
      parallel_for(res.size(), [&](std::size_t i) {
        int n = static_cast<int>(i) - N;
        res[i] = coeff_quadrature(src.g, n, std::max(64, 8 * (std::abs(n) + 1)));
      });
      for (int n = -N; n <= N; ++n) {
        const auto& r = res[n + N];
        s.coeffs[n] = std::abs(r.value) < coefficient_tolerance ? cplx{} : r.value;
        s.errors[n] = r.error;
        if (!r.converged) s.failures.push_back("quadrature not converged at n=" + std::to_string(n));
      }
      break;
    }
    case SymbolSource::Kind::cos_power:
      for (int n = -src.n_max; n <= src.n_max; ++n) {
        s.coeffs[n] = coeff_cos_power(src.alpha, n);
        s.errors[n] = 0.0;
      }
      break;
    case SymbolSource::Kind::sin_power:
      for (int n = -src.n_max; n <= src.n_max; ++n) {
        s.coeffs[n] = -I * coeff_sin_power(src.alpha, n);
        s.errors[n] = 0.0;
      }
      break;
    case SymbolSource::Kind::combination:
      for (auto& [w, part] : src.parts) {
        FourierSymbol p = build_symbol(part, dimension);
        for (auto& [n, g] : p.coeffs) s.coeffs[n] += w * g;
        for (auto& [n, e] : p.errors) s.errors[n] += std::abs(w) * e;
        s.failures.insert(s.failures.end(), p.failures.begin(), p.failures.end());
      }
      break;
  }
  return s;
}

struct ResonantSplit {
  cplx g0, g1;
  FourierSymbol nonresonant;
  bool g0_flag = false;
  bool im_g1_flag = false;
};

inline ResonantSplit resonant_split(const FourierSymbol& s, double tol = assumption_tolerance) {
  ResonantSplit r;
  r.g0 = s[0];
  r.g1 = s[1];
  r.nonresonant.dimension = s.dimension;
  for (auto& [n, g] : s.coeffs)
    if (n != 0 && n != 1 && g != cplx{}) r.nonresonant.coeffs[n] = g;
  r.g0_flag = std::abs(r.g0) > tol;
  r.im_g1_flag = std::abs(r.g1.imag()) > tol;
  return r;
}

// Truncated symbol sum_{|n|<=N} g_n e^{in th}
inline cplx eval_symbol(const FourierSymbol& s, double theta, int N) {
  cplx z = std::polar(1.0, theta), acc = s[0];
  cplx zp = 1.0;
  for (int n = 1; n <= N; ++n) {
    zp *= z;
    auto ip = s.coeffs.find(n), im = s.coeffs.find(-n);
    if (ip != s.coeffs.end()) acc += ip->second * zp;
    if (im != s.coeffs.end()) acc += im->second * std::conj(zp);
  }
  return acc;
}

inline cplx eval_series(const FourierSymbol& s, cplx u, int N) {
  if (N > s.max_index())
    throw config_error("eval_series: N exceeds the largest stored coefficient index");
  double r = std::abs(u);
  if (r == 0.0) return 0.0;
  return std::pow(r, s.degree()) * eval_symbol(s, std::arg(u), N);
}

struct HomogeneousNonlinearity {
  FourierSymbol symbol;
  std::function<cplx(cplx)> direct;  // closed-form F, preferred when present
  int n_max = -1;                    // series truncation; -1 uses every stored mode
  bool prefer_series = false;

  double degree() const { return symbol.degree(); }
  int truncation() const { return n_max < 0 ? symbol.max_index() : n_max; }
  cplx operator()(cplx u) const {
    if (direct && !prefer_series) return direct(u);
    return eval_series(symbol, u, truncation());
  }
  // periodic symbol g(theta) = F(e^{i theta})
  cplx symbol_at(double theta) const {
    if (direct && !prefer_series) return direct(std::polar(1.0, theta));
    return eval_symbol(symbol, theta, truncation());
  }
  bool zero() const {
    if (direct) return false;
    for (auto& [n, g] : symbol.coeffs)
      if (g != cplx{}) return false;
    return true;
  }
};

// |z|^(p-n) z^n via magnitude and phase
inline cplx monomial(cplx z, int n, double p) {
  double r = std::abs(z);
  if (r == 0.0) return 0.0;
  return std::pow(r, p) * std::polar(1.0, n * std::arg(z));
}

inline HomogeneousNonlinearity gauge_nonlinearity(double lambda, int dimension = 3) {
  HomogeneousNonlinearity F;
  F.symbol.dimension = dimension;
  F.symbol.coeffs = {{-1, 0.0}, {0, 0.0}, {1, lambda}};
  double p = F.symbol.degree();
  F.direct = [lambda, p](cplx u) { return lambda * monomial(u, 1, p); };
  return F;
}

inline HomogeneousNonlinearity monomial_nonlinearity(int n, int dimension = 3) {
  HomogeneousNonlinearity F;
  F.symbol.dimension = dimension;
  int N = std::max(1, std::abs(n));
  for (int k = -N; k <= N; ++k) F.symbol.coeffs[k] = (k == n) ? 1.0 : 0.0;
  double p = F.symbol.degree();
  F.direct = [n, p](cplx u) { return monomial(u, n, p); };
  return F;
}

// |Re u|^(alpha-1) Re u, alpha = 1 + 2/d by default
inline HomogeneousNonlinearity real_part_nonlinearity(int n_max, int dimension = 3,
                                                      double scale = 1.0) {
  HomogeneousNonlinearity F;
  double alpha = 1.0 + 2.0 / dimension;
  F.symbol = build_symbol(SymbolSource::cos_power(alpha, n_max), dimension);
  for (auto& [n, g] : F.symbol.coeffs) g *= scale;
  F.direct = [alpha, scale](cplx u) {
    double x = u.real();
    return cplx(x == 0.0 ? 0.0 : scale * std::pow(std::abs(x), alpha - 1.0) * x, 0.0);
  };
  return F;
}

// |Re u|^(alpha-1) Re u - i |Im u|^(alpha-1) Im u
inline HomogeneousNonlinearity re_im_combination(int n_max, int dimension = 3) {
  HomogeneousNonlinearity F;
  double alpha = 1.0 + 2.0 / dimension;
  F.symbol = build_symbol(
      SymbolSource::combination({{1.0, SymbolSource::cos_power(alpha, n_max)},
                                 {-I, SymbolSource::sin_power(alpha, n_max)}}),
      dimension);
  F.direct = [alpha](cplx u) {
    auto pw = [alpha](double x) { return x == 0.0 ? 0.0 : std::pow(std::abs(x), alpha - 1.0) * x; };
    return cplx(pw(u.real()), -pw(u.imag()));
  };
  return F;
}

struct Summability {
  double partial = 0.0;
  double tail = 0.0;
  double decay_exponent = std::numeric_limits<double>::quiet_NaN();
  bool divergent = false;
  double value() const { return partial + tail; }
};

inline DecayFit coeff_decay_fit(const FourierSymbol& s, int n_lo, int n_hi) {
  Series pts;
  for (auto& [n, g] : s.coeffs)
    if (n > 0 && n % 2 != 0 && n >= n_lo && n <= n_hi && std::abs(g) > 0.0)
      pts.emplace_back(n, std::abs(g));
  if (pts.size() < 3) throw numeric_error("coeff_decay_fit: window too small");
  return fit_decay(pts);
}

inline Summability summability(const FourierSymbol& s, double eta) {
  Summability r;
  for (auto& [n, g] : s.coeffs) r.partial += std::pow(std::abs(n), 1.0 + eta) * std::abs(g);
  int N = s.max_index();
  DecayFit fit;
  try {
    fit = coeff_decay_fit(s, std::max(3, N / 2), N);
  } catch (const numeric_error&) {
    return r;  // too few nonzero modes to model a tail
  }
  double q = -fit.slope;
  r.decay_exponent = q;
  // sum over |n| > N, odd n, of n^{1+eta} C n^{-q}, both signs
  if (q <= 2.0 + eta) {
    r.divergent = true;
    r.tail = std::numeric_limits<double>::infinity();
  } else {
    double C = std::exp(fit.intercept);
    r.tail = C * std::pow(N, 2.0 + eta - q) / (q - 2.0 - eta);
  }
  return r;
}

struct LipEstimate {
  double growth = 0.0;  // sup |F(z)| / |z|^mu
  double holder_z = 0.0;
  double holder_zbar = 0.0;
  double total() const { return growth + holder_z + holder_zbar; }
};

namespace detail {
inline std::pair<cplx, cplx> wirtinger(const HomogeneousNonlinearity& F, cplx z) {
  double h = 1e-5 * std::max(std::abs(z), 1e-12);
  cplx fx = (F(z + h) - F(z - h)) / (2 * h);
  cplx fy = (F(z + I * h) - F(z - I * h)) / (2 * h);
  return {0.5 * (fx - I * fy), 0.5 * (fx + I * fy)};
}
}  // namespace detail

// Sampled lower bound of the Lip-mu norm, mu = 1 + beta with 0 < beta < 1.
// Homogeneity lets the second point sit on the unit circle.
inline LipEstimate lip_norm_estimate(const HomogeneousNonlinearity& F, double mu, int samples,
                                     std::uint64_t seed = 1) {
  double beta = mu - 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  LipEstimate e;
  for (int k = 0; k < samples; ++k) {
    double phi = 2 * pi * U(rng);
    cplx w = std::polar(1.0, phi);
    e.growth = std::max(e.growth, std::abs(F(w)));
    cplx z;
    if (k % 2 == 0) {
      double rho = std::pow(10.0, -3.0 + 3.3 * U(rng));
      z = w + std::polar(rho, 2 * pi * U(rng));
    } else {
      z = std::polar(3.0 * std::sqrt(U(rng)), 2 * pi * U(rng));
    }
    double d = std::abs(z - w);
    if (d < 1e-9 || std::abs(z) < 1e-9) continue;
    auto [fzw, fzbw] = detail::wirtinger(F, w);
    auto [fzz, fzbz] = detail::wirtinger(F, z);
    double denom = std::pow(d, beta);
    e.holder_z = std::max(e.holder_z, std::abs(fzz - fzw) / denom);
    e.holder_zbar = std::max(e.holder_zbar, std::abs(fzbz - fzbw) / denom);
  }
  return e;
}

}  // namespace nlsfs
