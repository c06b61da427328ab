#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "torusq/kernels.hpp"

namespace torusq {
namespace {

using V = std::vector<std::int64_t>;

TorusPoint real_point(std::vector<double> c) { return TorusPoint::from_reals(c); }

TEST(KhatBall, ZeroFrequencyIsVolume) {
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto y = real_point(std::vector<double>(n, 0.3));
    const auto c = khat_ball(n, 0.2, V(n, 0), y);
    EXPECT_DOUBLE_EQ(c.real(), ball_volume(n, 0.2));
    EXPECT_EQ(c.imag(), 0.0);
  }
}

TEST(KhatBall, Example) {
  const auto c = khat_ball(2, 0.25, V{1, 0}, real_point({0, 0}));
  EXPECT_NEAR(c.real(), 0.25 * bessel_j(1, std::numbers::pi / 2), 1e-15);
  EXPECT_NEAR(c.real(), oracle::ball_transform_2d(0.25, 1, 0, 0, 0).real(), 1e-6);
}

TEST(KhatBall, MatchesQuadrature) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> radius(0.05, 0.45), unit(0, 1);
  std::uniform_int_distribution<int> freq(-5, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = radius(rng);
    const V v = {freq(rng), freq(rng)};
    const auto y = real_point({unit(rng), unit(rng)});
    const auto expected = oracle::ball_transform_2d(r, static_cast<double>(v[0]), static_cast<double>(v[1]), y.coord(0),
                                                    y.coord(1));
    EXPECT_LT(std::abs(khat_ball(2, r, v, y) - expected), 1e-6) << r << ' ' << v[0] << ',' << v[1];
  }
}

TEST(KhatBall, ConjugateSymmetric) {
  const auto y = real_point({0.17, 0.81, 0.4});
  for (const V& v : {V{1, 2, 3}, V{-4, 0, 1}, V{7, -7, 2}}) {
    const V neg = {-v[0], -v[1], -v[2]};
    EXPECT_LT(std::abs(khat_ball(3, 0.3, v, y) - std::conj(khat_ball(3, 0.3, neg, y))), 1e-15);
  }
}

TEST(KhatSmoothed, ZeroFrequency) {
  const SmoothingParams params(0.2, 0.05);
  const auto y = real_point({0.5, 0.5});
  EXPECT_DOUBLE_EQ(khat_smoothed(2, params, +1, V{0, 0}, y).real(), ball_volume(2, 0.25));
  EXPECT_DOUBLE_EQ(khat_smoothed(2, params, -1, V{0, 0}, y).real(), ball_volume(2, 0.15));
}

TEST(KhatSmoothed, SmallSmoothingLimit) {
  const SmoothingParams params(0.2, 1e-6);
  const auto y = real_point({0.1, 0.7});
  // Frequencies away from zeros of the radial profile, where a relative bound is meaningful.
  for (const V& v : {V{1, 0}, V{2, 1}, V{0, 2}, V{4, 3}}) {
    for (int sign : {+1, -1}) {
      const auto sharp = khat_ball(2, 0.2, v, y);
      EXPECT_LT(std::abs(khat_smoothed(2, params, sign, v, y) - sharp), 1e-4 * std::abs(sharp)) << sign;
    }
  }
}

TEST(KhatSmoothed, ProductForm) {
  const SmoothingParams params(0.15, 0.06);
  const auto y = real_point({0.33, 0.21, 0.9});
  const auto origin = real_point({0, 0, 0});
  for (const V& v : {V{1, 0, 0}, V{2, -3, 1}, V{5, 5, 5}}) {
    for (int sign : {+1, -1}) {
      const auto expected = khat_ball(3, params.outer_radius(sign), v, y) * khat_ball(3, params.smoothing, v, origin) /
                            ball_volume(3, params.smoothing);
      EXPECT_LT(std::abs(khat_smoothed(3, params, sign, v, y) - expected), 1e-14);
    }
  }
}

TEST(KhatSmoothed, DecayEnvelope) {
  for (std::size_t n : {1u, 2u, 3u}) {
    for (int sign : {+1, -1}) {
      const auto coeffs = KernelCoefficients::smoothed(n, SmoothingParams(0.2, 0.05), sign);
      const double a = coeffs.decay_constant();
      for (double t = 0.25; t < 400; t += 0.25) {
        EXPECT_LE(std::fabs(coeffs.radial(t)), a * std::pow(t, -static_cast<double>(n + 1)) * (1 + 1e-12))
            << n << ' ' << sign << ' ' << t;
      }
    }
  }
  EXPECT_THROW(KernelCoefficients::sharp(2, 0.2).decay_constant(), DomainError);
  EXPECT_THROW(KernelCoefficients::smoothed(9, SmoothingParams(0.2, 0.05), 1).decay_constant(), DomainError);
}

TEST(SmoothingParams, Validation) {
  EXPECT_THROW(SmoothingParams(0.2, 0.11), DomainError);
  EXPECT_THROW(SmoothingParams(0.4, 0.06), DomainError);
  EXPECT_THROW(SmoothingParams(0.2, 0), DomainError);
  EXPECT_NO_THROW(SmoothingParams(0.2, 0.1));
}

TEST(KernelPointwise, BallExamples) {
  const auto x = real_point({0.2, 0.4});
  EXPECT_EQ(kernel_ball_pointwise(x, x, 0.1), 1);
  EXPECT_EQ(kernel_ball_pointwise(real_point({0, 0}), real_point({0.3, 0}), 0.25), 0);
  EXPECT_EQ(kernel_ball_pointwise(real_point({0.95, 0}), real_point({0.05, 0}), 0.15), 1);
}

TEST(KernelPointwise, SmoothedPlateaus) {
  const SmoothingParams params(0.2, 0.05);
  const auto origin = real_point({0, 0});
  EXPECT_EQ(kernel_smoothed_pointwise(origin, real_point({0.09, 0}), params, -1), 1.0);
  EXPECT_EQ(kernel_smoothed_pointwise(origin, real_point({0.3001, 0}), params, +1), 0.0);
  EXPECT_EQ(kernel_smoothed_pointwise(origin, real_point({0.2, 0}), params, +1), 1.0);
  EXPECT_EQ(kernel_smoothed_pointwise(origin, real_point({0.25, 0}), params, -1), 0.0);
}

TEST(KernelPointwise, SmoothedMatchesMonteCarlo) {
  struct Case {
    std::size_t n;
    double radius, rho, distance;
    int sign;
  };
  for (const Case& c : {Case{2, 0.2, 0.05, 0.25, +1}, Case{2, 0.2, 0.05, 0.17, -1}, Case{3, 0.2, 0.08, 0.31, +1},
                        Case{3, 0.28, 0.1, 0.2, -1}, Case{1, 0.2, 0.05, 0.22, +1}}) {
    const SmoothingParams params(c.radius, c.rho);
    std::vector<double> shifted(c.n, 0.0);
    shifted[0] = c.distance;
    const double value =
        kernel_smoothed_pointwise(real_point(std::vector<double>(c.n, 0.0)), real_point(shifted), params, c.sign);
    EXPECT_GT(value, 0.0);
    EXPECT_LT(value, 1.0);
    const auto mc = oracle::overlap_fraction(c.n, c.distance, params.outer_radius(c.sign), c.rho, 1000000, 77);
    EXPECT_LE(std::fabs(value - mc.mean), 3 * mc.sigma) << c.n << ' ' << c.distance;
  }
}

TEST(KernelPointwise, Sandwich) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0, 1);
  for (std::size_t n : {2u, 3u}) {
    int violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const double r = 0.02 + 0.28 * unit(rng);
      const double rho = std::min(r / 2, (0.5 - r) / 2 * 0.999) * (0.01 + 0.99 * unit(rng));
      const SmoothingParams params(r, rho);
      std::vector<double> xc(n), yc(n);
      for (std::size_t k = 0; k < n; ++k) {
        xc[k] = unit(rng);
        // Bias y toward the shell around x so the transition region is exercised.
        yc[k] = xc[k] + (unit(rng) - 0.5) * 2.5 * r / std::sqrt(static_cast<double>(n));
      }
      const auto x = real_point(xc), y = real_point(yc);
      const double lo = kernel_smoothed_pointwise(x, y, params, -1), hi = kernel_smoothed_pointwise(x, y, params, +1);
      const int mid = kernel_ball_pointwise(x, y, r);
      if (lo > mid + 1e-12 || mid > hi + 1e-12) ++violations;
    }
    EXPECT_EQ(violations, 0) << "n=" << n;
  }
}

TEST(BallIntersection, MatchesLensFormulaInTheDisk) {
  // Two-disk lens area in closed form.
  const auto lens = [](double r1, double r2, double d) {
    const double a = r1 * r1 * std::acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1));
    const double b = r2 * r2 * std::acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2));
    const double c = 0.5 * std::sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2));
    return a + b - c;
  };
  for (double d = 0.16; d < 0.345; d += 0.01) {
    EXPECT_NEAR(ball_intersection_volume(2, 0.25, 0.1, d), lens(0.25, 0.1, d), 1e-13) << d;
  }
  EXPECT_EQ(ball_intersection_volume(3, 0.2, 0.1, 0.31), 0.0);
  EXPECT_DOUBLE_EQ(ball_intersection_volume(3, 0.2, 0.1, 0.05), ball_volume(3, 0.1));
}

TEST(DefaultSmoothing, FollowsFormulaAndClamps) {
  const EtaValue half{0.5, false};
  const double expected = std::pow(0.1, -1.0 / 3.0) * std::pow(1000003.0, -1.0 / 3.0);
  EXPECT_NEAR(default_smoothing_radius(2, 0.1, 1000003, half), expected, 1e-15);
  EXPECT_LT(expected, 0.05);
  EXPECT_DOUBLE_EQ(default_smoothing_radius(2, 0.1, 5, half), 0.05);
  EXPECT_LT(default_smoothing_radius(2, 0.45, 5, half), 0.025);
  EXPECT_NO_THROW(SmoothingParams(0.45, default_smoothing_radius(2, 0.45, 5, half)));
}

class SpectralIntegralTest : public ::testing::Test {
 protected:
  static double direct(const TorusCloud& cloud, const TorusPoint& y, const SmoothingParams& params, int sign) {
    return integrate_against(cloud, [&](const TorusPoint& x) {
             return Complex(kernel_smoothed_pointwise(x, y, params, sign), 0);
           }).real();
  }
};

TEST_F(SpectralIntegralTest, AgreesWithDirectSummationWithinTail) {
  const auto g = builtin_system("kloosterman", {}, PrimeModulus(101));
  const auto spectrum = weyl_spectrum(g);
  const auto cloud = project_cloud(g);
  const SmoothingParams params(0.2, 0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 4; ++trial) {
    const auto y = real_point({unit(rng), unit(rng)});
    for (int sign : {+1, -1}) {
      const auto coeffs = KernelCoefficients::smoothed(2, params, sign);
      const auto result = spectral_integral(spectrum, coeffs, y, SpectralOptions{150});
      const double exact = direct(cloud, y, params, sign);
      EXPECT_LE(std::fabs(result.value - exact), result.tail_bound) << sign;
      EXPECT_LT(std::fabs(result.imaginary), 1e-9);
      EXPECT_GT(result.terms, 70000u);
    }
  }
}

TEST_F(SpectralIntegralTest, UniformGridKeepsOnlyLatticeMultiples) {
  const auto g = parse_system("p=7; m=2; n=2; G1 = X1; G2 = X2");
  const auto spectrum = weyl_spectrum(g);
  const SmoothingParams params(0.2, 0.05);
  const auto coeffs = KernelCoefficients::smoothed(2, params, +1);
  const auto y = real_point({0.31, 0.62});
  const double cutoff = 60;
  const auto result = spectral_integral(spectrum, coeffs, y, SpectralOptions{cutoff});
  std::complex<long double> expected = coeffs.at_zero();
  for (std::int64_t a = -8; a <= 8; ++a) {
    for (std::int64_t b = -8; b <= 8; ++b) {
      const V v = {7 * a, 7 * b};
      if ((a == 0 && b == 0) || detail::norm_of(v) > cutoff) continue;
      expected += std::complex<long double>(coeffs(v, y));
    }
  }
  EXPECT_NEAR(result.value, static_cast<double>(expected.real()), 1e-12);
  EXPECT_LE(std::fabs(result.value - direct(project_cloud(g), y, params, +1)), result.tail_bound);
}

TEST_F(SpectralIntegralTest, ShiftCovariance) {
  const auto g = builtin_system("kloosterman", {}, PrimeModulus(31));
  const std::vector<Residue> shift = {5, 17};
  auto polys = g.polys();
  for (std::size_t j = 0; j < 2; ++j) polys[j].push_back(Monomial{shift[j], {0}});
  const PolynomialSystem moved(PrimeModulus(31), 1, polys);
  const std::uint64_t den = 31u << 20;
  const TorusPoint y{{123456, 7654321}, den};
  TorusPoint y_moved = y;
  for (std::size_t j = 0; j < 2; ++j) y_moved.numerators[j] = (y.numerators[j] + shift[j] * (den / 31)) % den;
  const auto coeffs = KernelCoefficients::smoothed(2, SmoothingParams(0.15, 0.05), -1);
  const auto a = spectral_integral(weyl_spectrum(g), coeffs, y, SpectralOptions{40});
  const auto b = spectral_integral(weyl_spectrum(moved), coeffs, y_moved, SpectralOptions{40});
  EXPECT_NEAR(a.value, b.value, 1e-10);
  EXPECT_EQ(a.terms, b.terms);
}

TEST_F(SpectralIntegralTest, Errors) {
  const auto spectrum = weyl_spectrum(builtin_system("kloosterman", {}, PrimeModulus(31)));
  const auto y = real_point({0, 0});
  EXPECT_THROW(spectral_integral(spectrum, KernelCoefficients::sharp(2, 0.2), y, {}), DomainError);
  const auto coeffs = KernelCoefficients::smoothed(2, SmoothingParams(0.2, 0.05), 1);
  EXPECT_THROW(spectral_integral(spectrum, coeffs, y, SpectralOptions{0.5}), DomainError);
  EXPECT_THROW(spectral_integral(spectrum, coeffs, y, SpectralOptions{5, 1e-9}), DomainError);
  EXPECT_THROW(spectral_integral(spectrum, coeffs, y, SpectralOptions{1e5, 1, EnumerationBudget{1000}}), BudgetError);
}

TEST(KernelCsv, Rows) {
  std::ostringstream out;
  write_kernel_csv(out, KernelCoefficients::sharp(2, 0.25), real_point({0, 0}), {{0, 0}, {1, 0}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "v_1,v_2,re,im");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0," + format_double(ball_volume(2, 0.25)) + ",0");
}

}  // namespace
}  // namespace torusq
