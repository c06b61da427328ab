#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "torusq/special.hpp"
#include "torusq/torus.hpp"
#include "torusq/weyl.hpp"

namespace torusq {
namespace {

TorusCloud moments_cloud(std::uint64_t p) {
  const std::vector<std::uint64_t> d = {1, 2};
  return project_cloud(builtin_system("moments", d, PrimeModulus(p)));
}

TorusPoint real_point(std::vector<double> c) { return TorusPoint::from_reals(c); }

TEST(ProjectCloud, Examples) {
  const auto cloud = moments_cloud(3);
  const std::vector<CloudPoint> expected = {{{0, 0}, 1}, {{1, 1}, 1}, {{2, 1}, 1}};
  EXPECT_EQ(cloud.points(), expected);
  EXPECT_EQ(cloud.total_mass(), 3u);

  const auto grid = project_cloud(parse_system("p=3; m=2; n=2; G1 = X1; G2 = X2"));
  EXPECT_EQ(grid.support_size(), 9u);
  for (const auto& pt : grid.points()) EXPECT_EQ(pt.multiplicity, 1u);

  const auto even = project_cloud(parse_system("p=5; m=1; n=2; G1 = X1^2; G2 = X1^4"));
  const std::vector<CloudPoint> collided = {{{0, 0}, 1}, {{1, 1}, 2}, {{4, 1}, 2}};
  EXPECT_EQ(even.points(), collided);
}

TEST(ProjectCloud, MassIsDomainSize) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = oracle::random_system(13, 2, 3, 4, rng);
    EXPECT_EQ(project_cloud(g).total_mass(), 169u);
  }
  EXPECT_THROW(project_cloud(parse_system("p=101; m=3; n=1; G1 = X1"), 1000), BudgetError);
}

TEST(TorusDistance, Examples) {
  EXPECT_NEAR(torus_distance(real_point({0, 0}), real_point({0.9, 0})), 0.1, 1e-9);
  EXPECT_NEAR(torus_distance(real_point({0.9, 0.1}), real_point({0.1, 0.9})), 0.2828427, 1e-7);
  EXPECT_EQ(torus_distance(real_point({0.3, 0.7}), real_point({0.3, 0.7})), 0.0);
  const std::vector<double> a = {0.0, 0.0}, b = {0.9, 0.0};
  EXPECT_NEAR(torus_distance(a, b), 0.1, 1e-12);
  EXPECT_THROW(torus_distance(real_point({0}), real_point({0, 0})), DomainError);
}

TEST(TorusDistance, ExactOnResidues) {
  const std::vector<Residue> x = {0, 0}, y = {1, 1};
  const auto d = exact_squared_distance(TorusPoint::from_residues(x, 3), TorusPoint::from_residues(y, 3));
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(static_cast<std::uint64_t>(d->numerator), 2u);
  EXPECT_EQ(d->denominator, 3u);
}

TEST(TorusDistance, SymmetricAndTranslationInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<double> x = {u(rng), u(rng), u(rng)}, y = {u(rng), u(rng), u(rng)}, s = {u(rng), u(rng), u(rng)};
    std::vector<double> xs(3), ys(3);
    for (int k = 0; k < 3; ++k) {
      xs[k] = x[k] + s[k];
      ys[k] = y[k] + s[k];
    }
    const double d = torus_distance(x, y);
    EXPECT_NEAR(d, torus_distance(y, x), 1e-15);
    EXPECT_NEAR(d, torus_distance(xs, ys), 1e-12);
    EXPECT_LE(d, std::sqrt(3.0) / 2 + 1e-15);
  }
}

TEST(BallSpec, RejectsRadiusOutOfRange) {
  EXPECT_THROW(BallSpec(real_point({0, 0}), 0.5), DomainError);
  EXPECT_THROW(BallSpec(real_point({0, 0}), 0.0), DomainError);
  EXPECT_NO_THROW(BallSpec(real_point({0, 0}), 0.4999));
}

TEST(MeasureBall, Examples) {
  const auto cloud = moments_cloud(3);
  const auto origin = real_point({0, 0});
  const auto small = measure_ball(cloud, BallSpec(origin, 0.25));
  EXPECT_EQ(small.count, 1u);
  EXPECT_EQ(small.total, 3u);
  const double corner = std::sqrt(2.0) / 3;
  EXPECT_EQ(measure_ball(cloud, BallSpec(origin, corner + 1e-9)).count, 3u);
  EXPECT_EQ(measure_ball(cloud, BallSpec(real_point({0.5, 0.5}), 0.1)).count, 0u);
}

TEST(MeasureBall, ClosedAtExactBoundary) {
  // (0,0) and (1/2,0) lie at distance exactly 1/4 from (1/4,0).
  const auto grid = project_cloud(parse_system("p=2; m=2; n=2; G1 = X1; G2 = X2"));
  const auto center = real_point({0.25, 0});
  EXPECT_EQ(measure_ball(grid, BallSpec(center, 0.25)).count, 2u);
  EXPECT_EQ(measure_ball(grid, BallSpec(center, std::nextafter(0.25, 0.0))).count, 0u);
}

TEST(MeasureBall, WholeTorusHasMassOne) {
  const auto cloud = moments_cloud(31);
  std::uint64_t sum = 0;
  for (const auto& pt : cloud.points()) sum += pt.multiplicity;
  EXPECT_EQ(sum, cloud.total_mass());
  EXPECT_EQ((BallMeasure{cloud.total_mass(), cloud.total_mass()}.value()), 1.0);
}

TEST(MeasureBall, MatchesDoubleOracleAwayFromBoundary) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1), r(0.01, 0.49);
  const auto cloud = project_cloud(builtin_system("kloosterman", {}, PrimeModulus(211)));
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> c = {u(rng), u(rng)};
    const double radius = r(rng);
    EXPECT_EQ(measure_ball(cloud, BallSpec(TorusPoint::from_reals(c), radius)).count, oracle::ball_count(cloud, c, radius));
  }
}

TEST(MeasureBall, DisjointBallsAreAdditive) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1), r(0.01, 0.2);
  const auto cloud = project_cloud(builtin_system("kloosterman", {}, PrimeModulus(101)));
  int checked = 0;
  while (checked < 100) {
    const auto a = real_point({u(rng), u(rng)}), b = real_point({u(rng), u(rng)});
    const double ra = r(rng), rb = r(rng);
    if (torus_distance(a, b) <= ra + rb) continue;
    ++checked;
    const BallSpec ba(a, ra), bb(b, rb);
    std::uint64_t union_count = 0;
    for (const auto& pt : cloud.points()) {
      const auto x = pt.point(cloud.p());
      if (torus_distance(x, a) <= ra || torus_distance(x, b) <= rb) union_count += pt.multiplicity;
    }
    EXPECT_EQ(union_count, measure_ball(cloud, ba).count + measure_ball(cloud, bb).count);
  }
}

TEST(MeasureBall, ScaleConsistent) {
  const auto cloud = project_cloud(builtin_system("kloosterman", {}, PrimeModulus(53)));
  const auto tripled = cloud.scaled(3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1), r(0.01, 0.49);
  for (int trial = 0; trial < 50; ++trial) {
    const BallSpec ball(real_point({u(rng), u(rng)}), r(rng));
    const auto base = measure_ball(cloud, ball), big = measure_ball(tripled, ball);
    EXPECT_EQ(big.count, 3 * base.count);
    EXPECT_EQ(big.total, 3 * base.total);
  }
}

TEST(BallCounter, MatchesNaiveScan) {
  const auto cloud = project_cloud(builtin_system("kloosterman", {}, PrimeModulus(1009)));
  const BallCounter counter(cloud, 0.12);
  EXPECT_GE(counter.cells_per_axis(), 3u);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1), r(0.001, 0.12);
  for (int trial = 0; trial < 300; ++trial) {
    const BallSpec ball(real_point({u(rng), u(rng)}), r(rng));
    EXPECT_EQ(counter.count(ball).count, measure_ball(cloud, ball).count);
  }
  // Centers on the support hit the exact boundary cases.
  for (std::size_t i = 0; i < cloud.support_size(); i += 37) {
    const BallSpec ball(cloud.points()[i].point(cloud.p()), 0.05);
    EXPECT_EQ(counter.count(ball).count, measure_ball(cloud, ball).count);
  }
}

TEST(BallCounter, CoarseGridFallsBack) {
  const auto cloud = moments_cloud(31);
  const BallCounter counter(cloud, 0.45);
  const BallSpec ball(real_point({0.1, 0.2}), 0.45);
  EXPECT_EQ(counter.count(ball).count, measure_ball(cloud, ball).count);
}

TEST(IntegrateAgainst, ConstantIsOne) {
  const auto cloud = moments_cloud(13);
  const auto v = integrate_against(cloud, [](const TorusPoint&) { return Complex(1, 0); });
  EXPECT_NEAR(std::abs(v - Complex(1, 0)), 0, 1e-15);
}

TEST(IntegrateAgainst, CharactersGiveNormalizedWeylSums) {
  std::mt19937_64 rng(17);
  const auto g = oracle::random_system(13, 2, 2, 3, rng);
  const auto cloud = project_cloud(g);
  for (std::int64_t a = -3; a <= 3; ++a) {
    for (std::int64_t b = -3; b <= 3; ++b) {
      const auto value = integrate_against(cloud, [&](const TorusPoint& x) {
        return std::polar(1.0, 2 * std::numbers::pi * (a * x.coord(0) + b * x.coord(1)));
      });
      EXPECT_LT(std::abs(value - weyl_sum_direct(g, {{a, b}}) / 169.0), 1e-9);
    }
  }
}

TEST(IntegrateAgainst, IndicatorMatchesBallMeasure) {
  const auto cloud = moments_cloud(29);
  const BallSpec ball(real_point({0.3, 0.6}), 0.2);
  const auto value = integrate_against(cloud, [&](const TorusPoint& x) {
    return Complex(torus_distance(x, ball.center) <= ball.radius ? 1.0 : 0.0, 0);
  });
  EXPECT_NEAR(value.real(), measure_ball(cloud, ball).value(), 1e-15);
}

TEST(TorusCloud, TranslationPreservesMass) {
  const auto cloud = moments_cloud(7);
  const std::vector<Residue> shift = {3, 5};
  const auto moved = cloud.translated(shift);
  EXPECT_EQ(moved.total_mass(), cloud.total_mass());
  EXPECT_EQ(moved.support_size(), cloud.support_size());
  EXPECT_THROW(TorusCloud(5, 1, 1, {}), DomainError);
}

TEST(CloudExport, CsvAndBinaryRoundTrip) {
  const auto cloud = moments_cloud(3);
  std::ostringstream csv;
  write_cloud_csv(csv, cloud);
  EXPECT_EQ(csv.str(), "x_1,x_2,multiplicity\n0,0,1\n0.3333333333333333,0.3333333333333333,1\n0.6666666666666666,0.3333333333333333,1\n");

  const auto path = (std::filesystem::temp_directory_path() / "torusq_cloud_test.cloud").string();
  const auto big = project_cloud(builtin_system("kloosterman", {}, PrimeModulus(101)));
  save_cloud_binary(path, big, 42);
  const auto back = load_cloud_binary(path, 42, 101);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, big);
  EXPECT_FALSE(load_cloud_binary(path, 43, 101).has_value());
  EXPECT_FALSE(load_cloud_binary(path, 42, 103).has_value());
  std::filesystem::resize_file(path, 30);
  EXPECT_FALSE(load_cloud_binary(path, 42, 101).has_value());
  std::filesystem::remove(path);
}

TEST(BallVolume, Examples) {
  EXPECT_NEAR(ball_volume(2, 0.5), 0.7853982, 1e-7);
  EXPECT_NEAR(ball_volume(2, 0.25), 0.1963495, 1e-7);
  EXPECT_NEAR(ball_volume(3, 0.5), 0.5235988, 1e-7);
}

}  // namespace
}  // namespace torusq
