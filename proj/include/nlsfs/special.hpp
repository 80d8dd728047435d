#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace nlsfs::special {

namespace detail {

// Lanczos g=7, n=9 coefficients
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_c{
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_series(double z) {
  double x = lanczos_c[0];
  for (int k = 1; k < 9; ++k) x += lanczos_c[k] / (z + k);
  return x;
}

}  // namespace detail

// sin(pi x) with exact zeros at integers
inline double sin_pi(double x) {
  double r = std::fmod(x, 2.0);
  if (r < 0) r += 2.0;
  if (r == 0.0 || r == 1.0) return 0.0;
  if (r == 0.5) return 1.0;
  if (r == 1.5) return -1.0;
  return std::sin(pi * r);
}

inline bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

// log|Gamma(x)| and the sign of Gamma(x)
inline double lgamma_signed(double x, int& sign) {
  if (is_nonpositive_integer(x)) {
    sign = 0;
    return std::numeric_limits<double>::infinity();
  }
  if (x < 0.5) {
    double s = sin_pi(x);
    int inner = 1;
    double lg = lgamma_signed(1.0 - x, inner);
    sign = (s > 0 ? 1 : -1) * inner;
    return std::log(pi) - std::log(std::abs(s)) - lg;
  }
  double z = x - 1.0;
  double t = z + detail::lanczos_g + 0.5;
  sign = 1;
  return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t +
         std::log(detail::lanczos_series(z));
}

inline double gamma(double x) {
  if (is_nonpositive_integer(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x < 0.5) return pi / (sin_pi(x) * gamma(1.0 - x));
  double z = x - 1.0;
  double t = z + detail::lanczos_g + 0.5;
  return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) *
         detail::lanczos_series(z);
}

inline double rgamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  return 1.0 / gamma(x);
}

}  // namespace nlsfs::special
