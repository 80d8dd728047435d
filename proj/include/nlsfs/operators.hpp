#pragma once

#include <functional>
#include <random>
#include <string>

#include "fit.hpp"
#include "grid.hpp"

namespace nlsfs {

using PointFn = std::function<cplx(const std::array<double, 3>&)>;
using RadialFn = std::function<cplx(double)>;

inline Field free_propagate(const Field& f, double t) {
  if (t == 0.0) return f;
  return apply_multiplier(f, [t](double k2) { return std::polar(1.0, -t * k2); });
}

inline Field multiply_M(const Field& f, double t, int sign = 1) {
  if (t == 0.0) throw config_error("multiply_M: t = 0 is not allowed");
  double c = sign / (4 * t);
  return apply_pointwise(f, [c](double x2) { return std::polar(1.0, c * x2); });
}

inline Field multiply_E(const Field& f, double t, int n) {
  if (n == 0) return f;
  double c = n * t;
  return apply_pointwise(f, [c](double x2) { return std::polar(1.0, c * x2); });
}

// (2 i sigma)^{-d/2}, principal branch
inline cplx dilation_prefactor(double sigma, int d) {
  return cpow_principal(cplx(0, 2 * sigma), -0.5 * d);
}

struct Dilated {
  Field field;
  bool aliased = false;
};

// (D(sigma) f)(x) = (2 i sigma)^{-d/2} f(x / (2 sigma)), f given on a grid
inline Dilated dilate_D(const Field& f, double sigma) {
  if (sigma == 0.0) throw config_error("dilate_D: sigma = 0 is not allowed");
  const Grid& g = f.grid;
  Dilated r;
  r.field = evaluate_scaled(f, g, 1.0 / (2 * sigma));
  r.field *= dilation_prefactor(sigma, g.dim);
  // compression by 2|sigma| multiplies the bandwidth by 1/(2|sigma|)
  if (std::abs(2 * sigma) < 1.0) {
    double kb = effective_bandwidth(f);
    r.aliased = kb / std::abs(2 * sigma) > g.k_max() || std::abs(2 * sigma) * g.L < 2 * g.h();
  }
  return r;
}

// closed-form input evaluated exactly at the grid points
inline Field dilate_D(const Grid& g, const PointFn& f, double sigma) {
  if (sigma == 0.0) throw config_error("dilate_D: sigma = 0 is not allowed");
  cplx c = dilation_prefactor(sigma, g.dim);
  double s = 1.0 / (2 * sigma);
  return sample(g, [&](const std::array<double, 3>& x) {
    return c * f({x[0] * s, x[1] * s, x[2] * s});
  });
}

inline Field dilate_D_radial(const Grid& g, const RadialFn& f, double sigma) {
  if (sigma == 0.0) throw config_error("dilate_D: sigma = 0 is not allowed");
  cplx c = dilation_prefactor(sigma, g.dim);
  double s = 1.0 / (2 * std::abs(sigma));
  return sample_radial(g, [&](double r) { return c * f(r * s); });
}

// Band-limited refinement onto a grid with `factor` times more points on the same box.
inline Field refine(const Field& f, int factor) {
  const Grid& g = f.grid;
  if (factor == 1) return f;
  if (g.radial_kind()) {
    Grid fine = Grid::radial((g.n + 1) * factor - 1, g.L);
    return evaluate_scaled(f, fine, 1.0);
  }
  Grid fine = Grid::cartesian(g.dim, g.n * factor, g.L);
  Spectrum S = transform(f);
  Spectrum T{fine, std::vector<cplx>(fine.size())};
  int n = g.n, nf = fine.n, d = g.dim;
  auto map_index = [&](int m, double& w) {
    int k = m < n / 2 ? m : m - n;
    w = (k == -n / 2) ? 0.5 : 1.0;
    return k;
  };
  std::size_t total = g.size();
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i;
    int ks[3] = {0, 0, 0};
    double w = 1.0;
    for (int a = d - 1; a >= 0; --a) {
      double wa;
      ks[a] = map_index(static_cast<int>(r % n), wa);
      w *= wa;
      r /= n;
    }
    // split the Nyquist mode symmetrically between +k and -k
    int nsplit = 0;
    for (int a = 0; a < d; ++a) nsplit += (ks[a] == -n / 2);
    for (int mask = 0; mask < (1 << nsplit); ++mask) {
      int bit = 0;
      std::size_t j = 0;
      for (int a = 0; a < d; ++a) {
        int k = ks[a];
        if (k == -n / 2) {
          if (mask & (1 << bit)) k = n / 2;
          ++bit;
        }
        int m = k >= 0 ? k : k + nf;
        j = j * nf + m;
      }
      T.v[j] += w * S.v[i];
    }
  }
  return inverse_transform(T);
}

// Continuum transform of grid data evaluated at s * y_j for y_j on `target` (direct sums).
inline Field continuum_transform_at(const Field& f, const Grid& target, double s) {
  const Grid& g = f.grid;
  Field out(target);
  if (g.radial_kind()) {
    double h = g.h();
    parallel_for(target.n, [&](std::size_t m) {
      double k = s * target.axis_x(static_cast<int>(m));
      cplx acc = 0;
      for (int j = 0; j < g.n; ++j) acc += g.axis_x(j) * f[j] * std::sin(k * g.axis_x(j));
      out[m] = std::sqrt(2 / pi) / k * h * acc;
    });
    return out;
  }
  int n = g.n, tn = target.n, d = g.dim;
  std::vector<std::vector<cplx>> K(tn, std::vector<cplx>(n));
  double c = g.h() / std::sqrt(2 * pi);
  for (int p = 0; p < tn; ++p)
    for (int j = 0; j < n; ++j)
      K[p][j] = c * std::polar(1.0, -s * target.axis_x(p) * g.axis_x(j));
  std::vector<cplx> cur = f.v;
  std::vector<int> shape(d, n);
  for (int ax = 0; ax < d; ++ax) {
    std::size_t outer = 1, inner = 1;
    for (int a = 0; a < ax; ++a) outer *= shape[a];
    for (int a = ax + 1; a < d; ++a) inner *= shape[a];
    std::vector<cplx> nxt(outer * tn * inner);
    parallel_for(outer, [&](std::size_t o) {
      for (int p = 0; p < tn; ++p) {
        cplx* dst = &nxt[(o * tn + p) * inner];
        for (int j = 0; j < n; ++j) {
          const cplx* src = &cur[(o * n + j) * inner];
          cplx kk = K[p][j];
          for (std::size_t q = 0; q < inner; ++q) dst[q] += kk * src[q];
        }
      }
    });
    cur.swap(nxt);
    shape[ax] = tn;
  }
  out.v = std::move(cur);
  return out;
}

// Relative L^2 gap between U(t) f and M(t) D(t) F M(t) f. The transform of M(t) f is taken on a
// band-limited refinement of f so the chirp's spectrum is not folded.
inline double mdfm_residual(const Field& f, double t, int oversample = 2) {
  if (t == 0.0) throw config_error("mdfm_residual: t = 0 is not allowed");
  const Grid& g = f.grid;
  Field lhs = free_propagate(f, t);
  Field fine = multiply_M(refine(f, oversample), t, 1);
  Field rhs = continuum_transform_at(fine, g, 1.0 / (2 * t));
  rhs *= dilation_prefactor(t, g.dim);
  rhs = multiply_M(rhs, t, 1);
  return relative_l2(rhs, lhs);
}

// Constant in F U(-s) D(s) E^rho(s) = c E^{1-1/rho}(s) U(rho/4s) D(rho/2) with principal branches:
// i^{d/2} for rho > 0 and i^{-3d/2} for rho < 0.
inline cplx factorization_constant(double rho, int d) {
  return rho > 0 ? ipow(0.5 * d) : ipow(-1.5 * d);
}

// Right side of the factorization evaluated on `target` (whose points play the role of xi).
inline Field factorize_FUD(double rho, double s, const PointFn& f, const Grid& target) {
  if (rho == 0.0) throw config_error("factorize_FUD: rho = 0 is not allowed");
  Field h = dilate_D(target, f, 0.5 * rho);
  h = free_propagate(h, rho / (4 * s));
  h = multiply_E(h, s * (1.0 - 1.0 / rho), 1);
  h *= factorization_constant(rho, target.dim);
  return h;
}

// Left side F U(-s) D(s) E^rho(s) f computed on `source` and returned on the frequency lattice
// of `source`, reordered as a physical-type grid with half-width pi N / (2 L).
inline Field factorize_FUD_lhs(double rho, double s, const PointFn& f, const Grid& source) {
  if (rho == 0.0) throw config_error("factorize_FUD: rho = 0 is not allowed");
  cplx c = dilation_prefactor(s, source.dim);
  double q = 1.0 / (2 * s);
  Field g = sample(source, [&](const std::array<double, 3>& x) {
    std::array<double, 3> y{x[0] * q, x[1] * q, x[2] * q};
    double y2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    return c * std::polar(1.0, rho * s * y2) * f(y);
  });
  g = free_propagate(g, -s);
  Spectrum S = transform(g);
  Grid dual = Grid::cartesian(source.dim, source.n, pi * source.n / (2 * source.L));
  Field out(dual);
  int n = source.n;
  std::size_t total = source.size();
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i, j = 0, stride = 1;
    for (int a = source.dim - 1; a >= 0; --a) {
      int m = static_cast<int>(r % n);
      r /= n;
      int jj = (m + n / 2) % n;  // FFT order to ascending order
      j += jj * stride;
      stride *= n;
    }
    out[j] = S.v[i];
  }
  return out;
}

struct CutoffKernel {
  enum class Kind { psi0, psi1, psi2, custom } kind = Kind::psi0;
  std::function<cplx(double)> profile;  // as a function of |x|^2
  cplx value_at_zero = 1.0;
  bool gradient_at_zero_is_zero = true;
  std::string name = "psi0";

  cplx eval(const std::array<double, 3>& x) const {
    return profile(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  }

  static CutoffKernel psi0() {
    return {Kind::psi0, [](double z2) { return cplx(std::exp(-0.25 * z2)); }, 1.0, true, "psi0"};
  }
  // -(1/2) x . grad psi0
  static CutoffKernel psi1() {
    return {Kind::psi1, [](double z2) { return cplx(0.25 * z2 * std::exp(-0.25 * z2)); }, 0.0,
            true, "psi1"};
  }
  // (i/2) |x|^2 psi0
  static CutoffKernel psi2() {
    return {Kind::psi2, [](double z2) { return cplx(0, 0.5 * z2 * std::exp(-0.25 * z2)); }, 0.0,
            true, "psi2"};
  }
  // exp(-|x|): cone-shaped at the origin
  static CutoffKernel cusp() {
    return {Kind::custom, [](double z2) { return cplx(std::exp(-std::sqrt(z2))); }, 1.0, false,
            "cusp"};
  }
};

// Fourier multiplier psi(xi / (|n| sqrt t))
inline Field regularize_K(const Field& f, const CutoffKernel& psi, double t, int n) {
  if (!(t > 0)) throw config_error("regularize_K: t must be positive");
  if (n == 0) throw config_error("regularize_K: n = 0 is not allowed");
  double a2 = double(n) * n * t;
  return apply_multiplier(f, [&](double k2) { return psi.profile(k2 / a2); });
}

inline double homogeneous_norm(const Spectrum& S, double theta) {
  auto k2 = S.grid.k2();
  auto w = S.grid.k_weights();
  double s = 0;
  for (std::size_t i = 0; i < S.v.size(); ++i)
    if (k2[i] > 0) s += w[i] * std::pow(k2[i], theta) * std::norm(S.v[i]);
  return std::sqrt(s);
}

using TesterFactory = std::function<std::vector<Field>(double scale)>;

// Gaussian wave packets (3 widths x 3 frequency offsets, in units of `scale`) and band-limited
// noise on [scale/2, 3 scale]; all generated on the transform side.
inline std::vector<Field> default_testers(const Grid& g, double scale, std::uint64_t seed) {
  std::vector<Field> out;
  auto k2 = g.k2();
  std::vector<double> k1(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.radial_kind() || g.dim == 1) {
      k1[i] = g.axis_k(static_cast<int>(i));
    } else {
      std::size_t r = i;
      for (int a = 0; a < g.dim - 1; ++a) r /= g.n;
      k1[i] = g.axis_k(static_cast<int>(r % g.n));
    }
  }
  for (double w : {0.1, 0.2, 0.4}) {
    for (double c : {0.0, 1.0, 2.0}) {
      Spectrum S{g, std::vector<cplx>(g.size())};
      double c0 = c * scale, ws = w * scale;
      for (std::size_t i = 0; i < S.v.size(); ++i) {
        double dist2 = g.radial_kind() ? std::pow(std::sqrt(k2[i]) - c0, 2)
                                       : k2[i] - 2 * c0 * k1[i] + c0 * c0;
        S.v[i] = std::exp(-0.5 * dist2 / (ws * ws));
      }
      out.push_back(inverse_transform(S));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  Spectrum S{g, std::vector<cplx>(g.size())};
  for (std::size_t i = 0; i < S.v.size(); ++i) {
    double k = std::sqrt(k2[i]);
    cplx z(N01(rng), N01(rng));
    if (k >= 0.5 * scale && k <= 3 * scale) S.v[i] = z;
  }
  out.push_back(inverse_transform(S));
  return out;
}

struct FlatnessProbe {
  DecayFit fit;
  std::vector<double> ratios;
};

inline double flatness_ratio(const Field& phi, const CutoffKernel& psi, double theta, double a2) {
  Spectrum S = transform(phi);
  auto k2 = phi.grid.k2();
  auto w = phi.grid.k_weights();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < S.v.size(); ++i) {
    double e = w[i] * std::norm(S.v[i]);
    num += e * std::norm(psi.profile(k2[i] / a2) - psi.value_at_zero);
    if (k2[i] > 0) den += e * std::pow(k2[i], theta);
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

inline FlatnessProbe probe_K_flatness(const CutoffKernel& psi, double theta,
                                      const std::vector<double>& t_list, int n,
                                      const TesterFactory& testers) {
  if (theta < 0 || theta > 2) throw config_error("probe_K_flatness: theta must lie in [0, 2]");
  if (theta > 1 && !psi.gradient_at_zero_is_zero)
    throw config_error("probe_K_flatness: theta > 1 needs a kernel with vanishing gradient at 0");
  if (n == 0) throw config_error("probe_K_flatness: n = 0 is not allowed");
  FlatnessProbe r;
  Series series;
  for (double t : t_list) {
    double a2 = double(n) * n * t;
    auto fam = testers(std::sqrt(a2));
    std::vector<double> rs(fam.size());
    parallel_for(fam.size(), [&](std::size_t i) { rs[i] = flatness_ratio(fam[i], psi, theta, a2); });
    double best = *std::max_element(rs.begin(), rs.end());
    r.ratios.push_back(best);
    series.emplace_back(t, best);
  }
  r.fit = fit_decay(series);
  return r;
}

inline FlatnessProbe probe_K_flatness(const CutoffKernel& psi, double theta,
                                      const std::vector<double>& t_list, int n,
                                      const std::vector<Field>& testers) {
  return probe_K_flatness(psi, theta, t_list, n, [&](double) { return testers; });
}

inline Field multiply_An(const Field& f, double t, int n) {
  if (n == 0 || n == 1) throw config_error("multiply_An: n must differ from 0 and 1");
  if (!(t > 0)) throw config_error("multiply_An: t must be positive");
  double c = (1.0 - 1.0 / n) * t;
  return apply_pointwise(f, [c](double x2) { return 1.0 / cplx(1.0, c * x2); });
}

// (1 + t|x|^2)^{-1/2}
inline Field B_weight(const Grid& g, double t) {
  Field b(g);
  auto x2 = g.x2();
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1.0 / std::sqrt(1.0 + t * x2[i]);
  return b;
}

inline Field resolvent_Cn(const Field& f, double t, int n) {
  if (n == 0 || n == 1) throw config_error("resolvent_Cn: n must differ from 0 and 1");
  if (!(t > 0)) throw config_error("resolvent_Cn: t must be positive");
  double c = (double(n - 1) / n) * t;
  return apply_multiplier(f, [c](double k2) { return 1.0 / cplx(1.0, c * k2); });
}

}  // namespace nlsfs
