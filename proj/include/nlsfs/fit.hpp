#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "common.hpp"

namespace nlsfs {

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int n_points = 0;
  bool low_r2 = false;
};

using Series = std::vector<std::pair<double, double>>;

// Least squares of log(value) against log(t) over t in [t_lo, t_hi].
inline DecayFit fit_decay(const Series& series,
                          double t_lo = 0.0,
                          double t_hi = std::numeric_limits<double>::infinity()) {
  std::vector<double> X, Y;
  for (auto [t, v] : series) {
    if (t < t_lo * (1 - 1e-12) || t > t_hi * (1 + 1e-12)) continue;
    if (!(t > 0.0)) throw numeric_error("fit_decay: non-positive abscissa");
    if (!(v > 0.0)) throw numeric_error("fit_decay: non-positive value at t=" + std::to_string(t));
    X.push_back(std::log(t));
    Y.push_back(std::log(v));
  }
  int n = static_cast<int>(X.size());
  if (n < 3) throw numeric_error("fit_decay: window too small (need at least 3 points)");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) mx += X[i], my += Y[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  if (sxx == 0.0) throw numeric_error("fit_decay: degenerate window");
  DecayFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    double r = Y[i] - (f.intercept + f.slope * X[i]);
    ssr += r * r;
  }
  // a flat series is fitted perfectly
  f.r_squared = syy > 1e-24 * n * (1 + my * my) ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  f.t_min = std::exp(*std::min_element(X.begin(), X.end()));
  f.t_max = std::exp(*std::max_element(X.begin(), X.end()));
  f.n_points = n;
  f.low_r2 = f.r_squared < 0.9;
  return f;
}

}  // namespace nlsfs
