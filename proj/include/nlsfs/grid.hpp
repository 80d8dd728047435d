#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "common.hpp"

namespace nlsfs {

// Cartesian: periodic box [-L, L)^d with N points per axis.
// Radial: radially symmetric functions on R^3, samples r_j = (j+1) R/(M+1), j < M,
// transformed by a sine transform (the 3D Fourier transform of a radial function).
enum class GridKind { cartesian, radial };

struct Grid {
  GridKind kind = GridKind::cartesian;
  int dim = 1;
  int n = 0;
  double L = 1.0;

  static Grid cartesian(int d, int n, double L) {
    if (d < 1 || d > 3) throw config_error("grid dimension must be 1, 2 or 3");
    if (n < 2 || (n & (n - 1))) throw config_error("points per axis must be a power of two");
    if (!(L > 0)) throw config_error("grid half-width must be positive");
    return {GridKind::cartesian, d, n, L};
  }
  static Grid radial(int m, double R) {
    if (m < 1) throw config_error("radial grid needs at least one point");
    if (!(R > 0)) throw config_error("radial grid radius must be positive");
    return {GridKind::radial, 3, m, R};
  }

  bool radial_kind() const { return kind == GridKind::radial; }
  std::size_t size() const {
    if (radial_kind()) return n;
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= n;
    return s;
  }
  double h() const { return radial_kind() ? L / (n + 1) : 2 * L / n; }
  double dk() const { return pi / L; }
  double k_max() const { return radial_kind() ? n * pi / L : n * pi / (2 * L); }

  double axis_x(int j) const { return radial_kind() ? (j + 1) * h() : -L + j * h(); }
  double axis_k(int m) const {
    if (radial_kind()) return (m + 1) * pi / L;
    return (m < n / 2 ? m : m - n) * pi / L;
  }

  template <class Fn>
  std::vector<double> squared(Fn axis) const {
    std::vector<double> out(size());
    if (radial_kind() || dim == 1) {
      for (int j = 0; j < n; ++j) out[j] = axis(j) * axis(j);
      return out;
    }
    std::vector<double> a(n);
    for (int j = 0; j < n; ++j) a[j] = axis(j) * axis(j);
    if (dim == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i * n + j] = a[i] + a[j];
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) out[(std::size_t(i) * n + j) * n + k] = a[i] + a[j] + a[k];
    }
    return out;
  }
  std::vector<double> x2() const { return squared([this](int j) { return axis_x(j); }); }
  std::vector<double> k2() const { return squared([this](int j) { return axis_k(j); }); }

  // quadrature weights so that sum w_i |f_i|^2 approximates the L^2 integral
  std::vector<double> x_weights() const {
    if (!radial_kind()) return std::vector<double>(size(), std::pow(h(), dim));
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) w[j] = 4 * pi * h() * axis_x(j) * axis_x(j);
    return w;
  }
  std::vector<double> k_weights() const {
    if (!radial_kind()) return std::vector<double>(size(), std::pow(dk(), dim));
    std::vector<double> w(n);
    for (int m = 0; m < n; ++m) w[m] = 4 * pi * dk() * axis_k(m) * axis_k(m);
    return w;
  }

  Grid scaled(double s) const { return {kind, dim, n, L * s}; }

  // physical coordinates of flat index i
  std::array<double, 3> point(std::size_t i) const {
    std::array<double, 3> p{0, 0, 0};
    if (radial_kind()) {
      p[0] = axis_x(static_cast<int>(i));
      return p;
    }
    for (int a = dim - 1; a >= 0; --a) {
      p[a] = axis_x(static_cast<int>(i % n));
      i /= n;
    }
    return p;
  }

  bool operator==(const Grid& o) const {
    return kind == o.kind && dim == o.dim && n == o.n && L == o.L;
  }
};

struct Field {
  Grid grid;
  std::vector<cplx> v;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), v(g.size()) {}
  Field(const Grid& g, std::vector<cplx> vals) : grid(g), v(std::move(vals)) {
    if (v.size() != g.size()) throw config_error("field size does not match grid");
  }
  std::size_t size() const { return v.size(); }
  cplx& operator[](std::size_t i) { return v[i]; }
  const cplx& operator[](std::size_t i) const { return v[i]; }

  Field& operator+=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  Field& operator*=(cplx c) {
    for (auto& x : v) x *= c;
    return *this;
  }
  void check(const Field& o) const {
    if (!(grid == o.grid)) throw config_error("fields live on different grids");
  }
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(cplx c, Field a) { return a *= c; }

// transform-side samples on the frequency lattice (FFT order for Cartesian grids)
struct Spectrum {
  Grid grid;
  std::vector<cplx> v;
};

template <class Fn>
Field sample(const Grid& g, Fn fn) {
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto p = g.point(i);
    f[i] = fn(p);
  }
  return f;
}

template <class Fn>
Field sample_radial(const Grid& g, Fn fn) {
  Field f(g);
  auto x2 = g.x2();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(std::sqrt(x2[i]));
  return f;
}

inline double l2_norm(const Field& f) {
  auto w = f.grid.x_weights();
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::norm(f[i]);
  return std::sqrt(s);
}

inline double l2_norm(const Spectrum& F) {
  auto w = F.grid.k_weights();
  double s = 0;
  for (std::size_t i = 0; i < F.v.size(); ++i) s += w[i] * std::norm(F.v[i]);
  return std::sqrt(s);
}

inline cplx inner(const Field& a, const Field& b) {
  a.check(b);
  auto w = a.grid.x_weights();
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * std::conj(a[i]) * b[i];
  return s;
}

inline double relative_l2(const Field& a, const Field& b) {
  double nb = l2_norm(b);
  return l2_norm(a - b) / (nb > 0 ? nb : 1.0);
}

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }
  // in-place complex DFT of shape n^d
  fftw_plan dft(int d, int n, int sign) {
    std::lock_guard<std::mutex> lk(mu_);
    auto key = std::make_tuple(0, d, n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t sz = 1;
    for (int i = 0; i < d; ++i) sz *= n;
    std::vector<cplx> buf(sz);
    int dims[3] = {n, n, n};
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan = fftw_plan_dft(d, dims, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_[key] = plan;
    return plan;
  }
  // in-place DST-I on the real and imaginary parts of an interleaved complex array
  fftw_plan dst(int n) {
    std::lock_guard<std::mutex> lk(mu_);
    auto key = std::make_tuple(1, 1, n, 0);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> buf(n);
    auto* p = reinterpret_cast<double*>(buf.data());
    fftw_r2r_kind kind = FFTW_RODFT00;
    fftw_plan plan = fftw_plan_many_r2r(1, &n, 2, p, nullptr, 2, 1, p, nullptr, 2, 1, &kind,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_[key] = plan;
    return plan;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

inline void dft_inplace(std::vector<cplx>& a, int d, int n, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(PlanCache::instance().dft(d, n, sign), p, p);
}

inline void dst_inplace(std::vector<cplx>& a) {
  auto* p = reinterpret_cast<double*>(a.data());
  fftw_execute_r2r(PlanCache::instance().dst(static_cast<int>(a.size())), p, p);
}

// (-1)^(m_1+...+m_d) for FFT-ordered index
inline void checkerboard(std::vector<cplx>& a, int d, int n) {
  if (d == 1) {
    for (int i = 1; i < n; i += 2) a[i] = -a[i];
    return;
  }
  std::size_t sz = a.size();
  for (std::size_t i = 0; i < sz; ++i) {
    std::size_t r = i;
    int s = 0;
    for (int k = 0; k < d; ++k) s += static_cast<int>(r % n), r /= n;
    if (s & 1) a[i] = -a[i];
  }
}

}  // namespace detail

// Continuum transform F f(xi) = (2pi)^{-d/2} int f(x) e^{-i x.xi} dx sampled on the lattice.
inline Spectrum transform(const Field& f) {
  const Grid& g = f.grid;
  Spectrum S{g, f.v};
  if (g.radial_kind()) {
    double h = g.h();
    for (int j = 0; j < g.n; ++j) S.v[j] *= g.axis_x(j);
    detail::dst_inplace(S.v);
    for (int m = 0; m < g.n; ++m) S.v[m] *= std::sqrt(2 / pi) / g.axis_k(m) * h * 0.5;
    return S;
  }
  detail::dft_inplace(S.v, g.dim, g.n, FFTW_FORWARD);
  detail::checkerboard(S.v, g.dim, g.n);
  double c = std::pow(g.h() / std::sqrt(2 * pi), g.dim);
  for (auto& x : S.v) x *= c;
  return S;
}

inline Field inverse_transform(const Spectrum& S) {
  const Grid& g = S.grid;
  Field f(g, S.v);
  if (g.radial_kind()) {
    for (int m = 0; m < g.n; ++m) f[m] *= g.axis_k(m);
    detail::dst_inplace(f.v);
    for (int j = 0; j < g.n; ++j) f[j] *= std::sqrt(2 / pi) / g.axis_x(j) * g.dk() * 0.5;
    return f;
  }
  detail::checkerboard(f.v, g.dim, g.n);
  detail::dft_inplace(f.v, g.dim, g.n, FFTW_BACKWARD);
  double c = std::pow(g.dk() / std::sqrt(2 * pi), g.dim);
  for (auto& x : f.v) x *= c;
  return f;
}

// Apply a radial Fourier multiplier m(|xi|^2).
template <class Fn>
Field apply_multiplier(const Field& f, Fn m) {
  Spectrum S = transform(f);
  auto k2 = f.grid.k2();
  for (std::size_t i = 0; i < S.v.size(); ++i) S.v[i] *= m(k2[i]);
  return inverse_transform(S);
}

template <class Fn>
Field apply_pointwise(const Field& f, Fn m) {
  Field g = f;
  auto x2 = f.grid.x2();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m(x2[i]);
  return g;
}

namespace detail {

// periodic band-limited cardinal function for an even number of samples, Nyquist split evenly
inline double periodic_sinc(int N, double theta) {
  double s = std::sin(0.5 * theta);
  if (std::abs(s) < 1e-14) return std::cos(0.5 * N * theta) / std::cos(0.5 * theta);
  return std::sin(0.5 * N * theta) * std::cos(0.5 * theta) / (N * s);
}

// value of the band-limited interpolant at `y` on a single axis, given sample weights
inline std::vector<double> cardinal_row(const Grid& g, double y) {
  std::vector<double> row(g.n, 0.0);
  if (y < -g.L || y >= g.L) return row;  // outside the box the function is taken as zero
  for (int j = 0; j < g.n; ++j) row[j] = periodic_sinc(g.n, pi * (y - g.axis_x(j)) / g.L);
  return row;
}

}  // namespace detail

// g(y_j) = f(s * y_j) for y_j on `target`, using the band-limited interpolant of f.
// Points mapped outside the source box (or radius) give zero.
inline Field evaluate_scaled(const Field& f, const Grid& target, double s) {
  const Grid& g = f.grid;
  if (g.kind != target.kind || g.dim != target.dim)
    throw config_error("evaluate_scaled: grid kinds differ");
  Field out(target);
  if (g.radial_kind()) {
    std::vector<cplx> b(f.v);
    for (int j = 0; j < g.n; ++j) b[j] *= g.axis_x(j);
    detail::dst_inplace(b);
    for (auto& x : b) x /= static_cast<double>(g.n + 1);
    double rs = std::abs(s);
    parallel_for(target.n, [&](std::size_t j) {
      double rho = rs * target.axis_x(static_cast<int>(j));
      if (rho >= g.L) return;
      cplx acc = 0;
      for (int m = 0; m < g.n; ++m) acc += b[m] * std::sin(g.axis_k(m) * rho);
      out[j] = acc / rho;
    });
    return out;
  }
  int n = g.n, tn = target.n, d = g.dim;
  std::vector<std::vector<double>> M(tn);
  for (int p = 0; p < tn; ++p) M[p] = detail::cardinal_row(g, s * target.axis_x(p));
  // contract one axis at a time: shape goes from n^d to tn^d
  std::vector<cplx> cur = f.v;
  std::vector<int> shape(d, n);
  for (int ax = 0; ax < d; ++ax) {
    std::size_t outer = 1, inner = 1;
    for (int a = 0; a < ax; ++a) outer *= shape[a];
    for (int a = ax + 1; a < d; ++a) inner *= shape[a];
    std::vector<cplx> nxt(outer * tn * inner);
    parallel_for(outer, [&](std::size_t o) {
      for (int p = 0; p < tn; ++p) {
        const auto& row = M[p];
        cplx* dst = &nxt[(o * tn + p) * inner];
        for (int j = 0; j < n; ++j) {
          if (row[j] == 0.0) continue;
          const cplx* src = &cur[(o * n + j) * inner];
          for (std::size_t q = 0; q < inner; ++q) dst[q] += row[j] * src[q];
        }
      }
    });
    cur.swap(nxt);
    shape[ax] = tn;
  }
  out.v = std::move(cur);
  return out;
}

// Fraction of spectral energy above a wavenumber, used for aliasing diagnostics.
inline double effective_bandwidth(const Field& f, double energy_tail = 1e-12) {
  Spectrum S = transform(f);
  auto k2 = f.grid.k2();
  auto w = f.grid.k_weights();
  std::vector<std::pair<double, double>> e(S.v.size());
  double tot = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = {std::sqrt(k2[i]), w[i] * std::norm(S.v[i])};
    tot += e[i].second;
  }
  if (tot == 0) return 0;
  std::sort(e.begin(), e.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double acc = 0;
  for (auto& [k, en] : e) {
    acc += en;
    if (acc > energy_tail * tot) return k;
  }
  return 0;
}

}  // namespace nlsfs
