#include <gtest/gtest.h>

#include <random>

#include "nlsfs/operators.hpp"

using namespace nlsfs;

namespace {

Field random_field(const Grid& g, std::uint64_t seed, double band = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  Spectrum S{g, std::vector<cplx>(g.size())};
  auto k2 = g.k2();
  double kc = band * g.k_max();
  for (std::size_t i = 0; i < S.v.size(); ++i) {
    cplx z(N01(rng), N01(rng));
    if (k2[i] <= kc * kc) S.v[i] = z;
  }
  return inverse_transform(S);
}

Field gaussian(const Grid& g, double a = 0.5) {
  return sample_radial(g, [a](double r) { return cplx(std::exp(-a * r * r)); });
}

// closed-form free evolution of exp(-|x|^2/2)
Field gaussian_evolved(const Grid& g, double t) {
  cplx z(1.0, 2 * t);
  cplx pref = std::pow(z, -0.5 * g.dim);
  return sample_radial(g, [&](double r) { return pref * std::exp(-r * r / (2.0 * z)); });
}

}  // namespace

TEST(Transform, RoundTripAndParseval) {
  for (Grid g : {Grid::cartesian(1, 256, 10), Grid::cartesian(2, 64, 8), Grid::cartesian(3, 32, 6),
                 Grid::radial(1023, 20)}) {
    Field f = random_field(g, 3, 1.0);
    Spectrum S = transform(f);
    EXPECT_LE(relative_l2(inverse_transform(S), f), 1e-12);
    EXPECT_NEAR(l2_norm(S) / l2_norm(f), 1.0, 1e-12);
  }
}

TEST(Transform, GaussianIsSelfDual) {
  for (Grid g : {Grid::cartesian(1, 128, 12), Grid::cartesian(3, 64, 10), Grid::radial(511, 15)}) {
    Spectrum S = transform(gaussian(g));
    auto k2 = g.k2();
    double err = 0, ref = 0;
    for (std::size_t i = 0; i < S.v.size(); ++i) {
      double e = std::exp(-0.5 * k2[i]);
      err = std::max(err, std::abs(S.v[i] - e));
      ref = std::max(ref, e);
    }
    EXPECT_LE(err / ref, 1e-12);
  }
}

TEST(FreePropagate, IdentityUnitarityGaussian) {
  Grid g = Grid::cartesian(1, 1024, 60);
  Field f = random_field(g, 5);
  EXPECT_LE(relative_l2(free_propagate(f, 0.0), f), 1e-15);
  EXPECT_NEAR(l2_norm(free_propagate(f, 3.7)) / l2_norm(f), 1.0, 1e-12);
  Field u = free_propagate(gaussian(g), 1.3);
  EXPECT_LE(relative_l2(u, gaussian_evolved(g, 1.3)), 1e-8);
  Grid r = Grid::radial(2047, 60);
  EXPECT_LE(relative_l2(free_propagate(gaussian(r), 2.0), gaussian_evolved(r, 2.0)), 1e-8);
}

TEST(Multiply, MAndEAreIsometries) {
  Grid g = Grid::cartesian(2, 64, 8);
  Field f = random_field(g, 9);
  EXPECT_LE(relative_l2(multiply_M(multiply_M(f, 0.7, 1), 0.7, -1), f), 1e-12);
  EXPECT_NEAR(l2_norm(multiply_M(f, 0.7, 1)) / l2_norm(f), 1.0, 1e-12);
  EXPECT_NEAR(l2_norm(multiply_E(f, 0.3, -5)) / l2_norm(f), 1.0, 1e-12);
  EXPECT_LE(relative_l2(multiply_E(f, 2.0, 0), f), 0.0);
  EXPECT_THROW(multiply_M(f, 0.0, 1), config_error);
  // E^n(t) = M(1/(4 n t)) pointwise
  EXPECT_LE(relative_l2(multiply_E(f, 0.25, 3), multiply_M(f, 1.0 / 3.0, 1)), 1e-13);
  auto x2 = g.x2();
  Field e = multiply_E(f, 0.4, -2);
  for (std::size_t i = 0; i < f.size(); i += 97)
    EXPECT_NEAR(std::abs(e[i] - f[i] * std::polar(1.0, -0.8 * x2[i])), 0, 1e-13);
}

TEST(Dilate, ClosedFormGridAndInverse) {
  Grid g = Grid::cartesian(1, 512, 40);
  Field f = gaussian(g, 0.5);
  auto d = dilate_D(f, 1.5);
  Field exact = dilate_D_radial(g, [](double r) { return cplx(std::exp(-0.5 * r * r)); }, 1.5);
  EXPECT_LE(relative_l2(d.field, exact), 1e-8);
  EXPECT_FALSE(d.aliased);
  EXPECT_NEAR(l2_norm(d.field) / l2_norm(f), 1.0, 1e-8);
  // D(sigma) D(1/(4 sigma)) = i^{-d}
  auto back = dilate_D(dilate_D(f, 1.5).field, 1.0 / 6.0);
  EXPECT_LE(relative_l2(back.field, ipow(-1.0) * f), 1e-8);
  EXPECT_THROW(dilate_D(f, 0.0), config_error);
  EXPECT_TRUE(dilate_D(f, 0.01).aliased);
}

TEST(Dilate, RadialHalfIntegerScalingMatchesGaussian) {
  Grid g = Grid::radial(1023, 40);
  Field f = gaussian(g, 0.5);
  for (int n : {3, -5}) {
    auto d = dilate_D(f, 0.5 * n);
    Field exact = sample_radial(g, [n](double r) {
      return cpow_principal(cplx(0, n), -1.5) * std::exp(-0.5 * r * r / (n * n));
    });
    EXPECT_LE(relative_l2(d.field, exact), 1e-8) << n;
  }
}

TEST(Refine, ExactForBandLimited) {
  Grid g = Grid::cartesian(2, 32, 6);
  Field f = random_field(g, 21, 0.6);
  Field r = refine(f, 2);
  EXPECT_NEAR(l2_norm(r) / l2_norm(f), 1.0, 1e-12);
  // refined samples at even indices coincide with the coarse samples
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      EXPECT_NEAR(std::abs(r[(2 * i) * 64 + 2 * j] - f[i * 32 + j]), 0, 1e-12);
}

TEST(Mdfm, GaussianOneDimension) {
  Grid g = Grid::cartesian(1, 512, 40);
  for (double t : {0.5, 1.0, 2.0}) EXPECT_LE(mdfm_residual(gaussian(g), t), 1e-6) << t;
  Field f = sample(g, [](const std::array<double, 3>& x) {
    double y = x[0] - 1.5;
    return cplx(1 + y, y * y) * std::exp(-0.5 * y * y);
  });
  EXPECT_LE(mdfm_residual(f, 1.0), 1e-6);
  Grid r = Grid::radial(1023, 40);
  EXPECT_LE(mdfm_residual(gaussian(r), 1.0), 1e-6);
}

TEST(Mdfm, ResidualGrowsWithTimeOnFixedGrid) {
  Grid g = Grid::cartesian(1, 128, 10);
  EXPECT_GT(mdfm_residual(gaussian(g), 40.0), mdfm_residual(gaussian(g), 1.0));
}

TEST(Factorize, OneDimensionBothSigns) {
  Grid src = Grid::cartesian(1, 4096, 220);
  PointFn f = [](const std::array<double, 3>& x) { return cplx(std::exp(-0.5 * x[0] * x[0])); };
  for (double rho : {2.0, -2.0, 1.0}) {
    Field lhs = factorize_FUD_lhs(rho, 4.0, f, src);
    Field rhs = factorize_FUD(rho, 4.0, f, lhs.grid);
    EXPECT_LE(relative_l2(rhs, lhs), 1e-6) << rho;
  }
  EXPECT_THROW(factorize_FUD(0.0, 1.0, f, src), config_error);
}

TEST(Factorize, ThreeDimensionsSmallGrid) {
  Grid src = Grid::cartesian(3, 64, 12);
  PointFn f = [](const std::array<double, 3>& x) {
    return cplx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])));
  };
  for (double rho : {0.5, -0.5}) {
    Field lhs = factorize_FUD_lhs(rho, 1.0, f, src);
    Field rhs = factorize_FUD(rho, 1.0, f, lhs.grid);
    EXPECT_LE(relative_l2(rhs, lhs), 1e-6) << rho;
  }
}

TEST(Regularize, LimitsBoundsCommutation) {
  Grid g = Grid::cartesian(1, 512, 20);
  Field f = random_field(g, 4);
  auto psi = CutoffKernel::psi0();
  EXPECT_LE(relative_l2(regularize_K(f, psi, 1e12, 3), f), 1e-8);
  for (double t : {0.01, 1.0, 50.0}) EXPECT_LE(l2_norm(regularize_K(f, psi, t, 2)), l2_norm(f));
  Field a = free_propagate(regularize_K(f, psi, 2.0, 3), 0.9);
  Field b = regularize_K(free_propagate(f, 0.9), psi, 2.0, 3);
  EXPECT_LE(relative_l2(a, b), 1e-12);
  Field c = resolvent_Cn(regularize_K(f, psi, 2.0, 3), 1.5, 5);
  Field d = regularize_K(resolvent_Cn(f, 1.5, 5), psi, 2.0, 3);
  EXPECT_LE(relative_l2(c, d), 1e-12);
  EXPECT_THROW(regularize_K(f, psi, 0.0, 1), config_error);
}

TEST(Kernels, FlatAtOrigin) {
  for (auto k : {CutoffKernel::psi0(), CutoffKernel::psi1(), CutoffKernel::psi2()}) {
    double h = 1e-4;
    double grad = std::abs(k.eval({h, 0, 0}) - k.eval({-h, 0, 0})) / (2 * h);
    EXPECT_LT(grad, 1e-3) << k.name;
    EXPECT_TRUE(k.gradient_at_zero_is_zero);
    EXPECT_NEAR(std::abs(k.eval({0, 0, 0}) - k.value_at_zero), 0, 1e-15);
  }
  // psi1 = -(1/2) x . grad psi0 at a sample point
  double r = 1.3, h = 1e-6;
  auto p0 = CutoffKernel::psi0();
  double dr = (p0.profile((r + h) * (r + h)).real() - p0.profile((r - h) * (r - h)).real()) / (2 * h);
  EXPECT_NEAR(CutoffKernel::psi1().profile(r * r).real(), -0.5 * r * dr, 1e-8);
}

TEST(Flatness, ScalingSlopes) {
  Grid g = Grid::cartesian(1, 4096, 50);
  TesterFactory fam = [&](double a) { return default_testers(g, a, 17); };
  std::vector<double> ts{1, 4, 16, 64};
  auto p2 = probe_K_flatness(CutoffKernel::psi0(), 2.0, ts, 3, fam);
  EXPECT_NEAR(p2.fit.slope, -1.0, 0.1);
  // |psi0(z) - 1| <= |z|^2/4 bounds the ratio by 1/(4 n^2 t)
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_LE(p2.ratios[i], 0.25 / (9 * ts[i]) * (1 + 1e-9));
  auto p0 = probe_K_flatness(CutoffKernel::psi0(), 0.0, ts, 3, fam);
  EXPECT_NEAR(p0.fit.slope, 0.0, 0.05);
  auto pc = probe_K_flatness(CutoffKernel::cusp(), 1.0, ts, 3, fam);
  EXPECT_NEAR(pc.fit.slope, -0.5, 0.1);
  EXPECT_THROW(probe_K_flatness(CutoffKernel::cusp(), 1.5, ts, 3, fam), config_error);
  EXPECT_THROW(probe_K_flatness(CutoffKernel::psi0(), 2.5, ts, 3, fam), config_error);
}

TEST(An, PointwiseBounds) {
  Grid g = Grid::cartesian(3, 32, 10);
  Field one = sample(g, [](const std::array<double, 3>&) { return cplx(1.0); });
  auto x2 = g.x2();
  for (int n : {-3, 2, 7}) {
    for (double t : {0.5, 4.0}) {
      Field a = multiply_An(one, t, n);
      Field b = B_weight(g, t);
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_LE(std::abs(a[i]), 1.0 + 1e-15);
        EXPECT_LE(std::abs(a[i]), (1 + 1 / std::abs(1 - 1.0 / n)) * std::norm(b[i]) + 1e-15);
        EXPECT_LE(x2[i] * std::norm(b[i]), 1.0 / t + 1e-15);
      }
    }
  }
  Grid r = Grid::radial(64, 1e-3);
  Field a = multiply_An(sample_radial(r, [](double) { return cplx(1.0); }), 1.0, 3);
  EXPECT_NEAR(std::abs(a[0] - 1.0), 0, 1e-6);
  EXPECT_THROW(multiply_An(one, 1.0, 1), config_error);
}

TEST(Cn, ContractionAndGradientDamping) {
  Grid g = Grid::cartesian(1, 1024, 30);
  Field f = random_field(g, 8, 0.9);
  std::vector<double> scaled;
  for (double t : {1.0, 4.0, 16.0, 64.0}) {
    Field c = resolvent_Cn(f, t, 3);
    EXPECT_LE(l2_norm(c), l2_norm(f));
    double grad = homogeneous_norm(transform(c), 1.0);
    scaled.push_back(grad * std::sqrt(t) / l2_norm(f));
  }
  // sup_k |k| / |1 + i c t k^2| = 1 / sqrt(2 c t)
  for (double s : scaled) EXPECT_LE(s, 1.0 / std::sqrt(2 * 2.0 / 3.0) + 1e-12);
  EXPECT_LE(relative_l2(resolvent_Cn(f, 1e-14, 3), f), 1e-10);
}
