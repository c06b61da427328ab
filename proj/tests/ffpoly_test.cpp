#include <array>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "torusq/ffpoly.hpp"

namespace torusq {
namespace {

TEST(ModularArithmetic, PowModHandlesZeroBase) {
  EXPECT_EQ(pow_mod(0, 0, 7), 1u);
  EXPECT_EQ(pow_mod(0, 5, 7), 0u);
  EXPECT_EQ(pow_mod(3, 5, 7), 5u);
  EXPECT_EQ(pow_mod(2, 1000000006, 1000000007), 1u);
  EXPECT_EQ(pow_mod(2, 1000000005, 1000000007), 500000004u);
}

TEST(ModularArithmetic, MillerRabinAgreesWithTrialDivision) {
  for (std::uint64_t q = 0; q < 5000; ++q) {
    bool trial = q >= 2;
    for (std::uint64_t d = 2; d * d <= q; ++d) {
      if (q % d == 0) trial = false;
    }
    EXPECT_EQ(is_prime(q), trial) << q;
  }
  EXPECT_TRUE(is_prime(1099511627791ull));
  EXPECT_FALSE(is_prime(1099511627791ull * 3));
}

TEST(PrimeModulus, RejectsComposite) {
  EXPECT_THROW(PrimeModulus(4), DomainError);
  EXPECT_THROW(PrimeModulus(1), DomainError);
  EXPECT_NO_THROW(PrimeModulus(2));
}

TEST(ParseSystem, SimpleSystem) {
  const auto g = parse_system("p=5; m=2; n=2; G1 = X1 + X2; G2 = X1*X2");
  EXPECT_EQ(g.p(), 5u);
  EXPECT_EQ(g.num_vars(), 2u);
  ASSERT_EQ(g.num_polys(), 2u);
  EXPECT_EQ(g.polys()[0].size(), 2u);
  for (const auto& poly : g.polys()) {
    for (const auto& mono : poly) EXPECT_EQ(mono.coefficient, 1u);
  }
}

TEST(ParseSystem, ReducesCoefficients) {
  const auto g = parse_system("p=7; m=1; n=1; G1 = 9*X1^2");
  ASSERT_EQ(g.polys()[0].size(), 1u);
  EXPECT_EQ(g.polys()[0][0].coefficient, 2u);
  EXPECT_EQ(g.polys()[0][0].exponents, std::vector<std::uint32_t>{2});
}

TEST(ParseSystem, ErrorsCarryPositions) {
  EXPECT_THROW(parse_system("p=4; m=1; n=1; G1 = X1"), ParseError);
  try {
    parse_system("p=5; m=1; n=1; G1 = X2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.position(), 10u);
  }
  EXPECT_THROW(parse_system("p=5; m=1; n=1; G1 = X1 +"), ParseError);
  EXPECT_THROW(parse_system("p=5; m=1; n=2; G1 = X1"), ParseError);
  EXPECT_THROW(parse_system("p=5; m=1; n=1; G1 = X1 $ 2"), ParseError);
}

TEST(ParseSystem, WhitespaceInsensitive) {
  EXPECT_EQ(parse_system("p=5;m=2;n=1;G1=3*X1^2*X2+X2"), parse_system(" p = 5 ; m = 2 ; n = 1 ; G1 = 3 * X1 ^ 2 * X2 + X2 "));
}

TEST(ParseSystem, RoundTripsThroughCanonicalText) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto g = oracle::random_system(std::array<std::uint64_t, 3>{7, 11, 13}[i % 3], 1 + i % 3, 1 + i % 2, 4, rng);
    const auto text = to_text(g);
    const auto back = parse_system(text);
    EXPECT_EQ(back, canonicalize(g)) << text;
    EXPECT_EQ(to_text(back), text);
    EXPECT_EQ(system_from_json(to_json(g)), g);
  }
}

TEST(Builtin, Families) {
  const std::vector<std::uint64_t> d12 = {1, 2};
  const auto moments = builtin_system("moments", d12, PrimeModulus(5));
  EXPECT_EQ(to_text(moments), "p=5; m=1; n=2; G1 = X1; G2 = X1^2");
  const auto kl = builtin_system("kloosterman", {}, PrimeModulus(7));
  EXPECT_EQ(to_text(kl), "p=7; m=1; n=2; G1 = X1; G2 = X1^5");
  const std::vector<std::uint64_t> dup = {2, 2};
  EXPECT_THROW(builtin_system("moments", dup, PrimeModulus(5)), DomainError);
  const std::vector<std::uint64_t> big = {1, 5};
  EXPECT_THROW(builtin_system("moments", big, PrimeModulus(5)), DomainError);
  EXPECT_THROW(builtin_system("nope", {}, PrimeModulus(5)), DomainError);
  EXPECT_EQ(BuiltinFamily::parse("moments:1,2").to_string(), "moments:1,2");
  EXPECT_THROW(BuiltinFamily::parse("moments:1,x"), DomainError);
}

TEST(EvalSystem, Examples) {
  const auto g = parse_system("p=5; m=2; n=2; G1 = X1 + X2; G2 = X1*X2");
  EXPECT_EQ(eval_system(g, std::vector<Residue>{2, 3}), (std::vector<Residue>{0, 1}));
  const auto cube = parse_system("p=7; m=1; n=2; G1 = X1; G2 = X1^3");
  EXPECT_EQ(eval_system(cube, std::vector<Residue>{2}), (std::vector<Residue>{2, 1}));
  const auto kl = builtin_system("kloosterman", {}, PrimeModulus(7));
  EXPECT_EQ(eval_system(kl, std::vector<Residue>{3}), (std::vector<Residue>{3, 5}));
  EXPECT_EQ(eval_system(kl, std::vector<Residue>{0}), (std::vector<Residue>{0, 0}));
  EXPECT_THROW(eval_system(g, std::vector<Residue>{5, 0}), DomainError);
  EXPECT_THROW(eval_system(g, std::vector<Residue>{1}), DomainError);
}

TEST(EvalSystem, AdditiveOverMonomialConcatenation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t p = 31;
    const auto a = oracle::random_system(p, 2, 1, 5, rng);
    const auto b = oracle::random_system(p, 2, 1, 5, rng);
    Polynomial joined = a.polys()[0];
    joined.insert(joined.end(), b.polys()[0].begin(), b.polys()[0].end());
    const PolynomialSystem sum(PrimeModulus(p), 2, {joined});
    const std::vector<Residue> x = {rng() % p, rng() % p};
    EXPECT_EQ(eval_system(sum, x)[0], add_mod(eval_system(a, x)[0], eval_system(b, x)[0], p));
  }
}

TEST(EnumerateDomain, LexicographicOrder) {
  std::vector<std::vector<Residue>> seen;
  enumerate_domain(PrimeModulus(3), 2).for_each([&](std::uint64_t, std::span<const Residue> x) {
    seen.emplace_back(x.begin(), x.end());
  });
  ASSERT_EQ(seen.size(), 9u);
  EXPECT_EQ(seen.front(), (std::vector<Residue>{0, 0}));
  EXPECT_EQ(seen[1], (std::vector<Residue>{0, 1}));
  EXPECT_EQ(seen.back(), (std::vector<Residue>{2, 2}));
  EXPECT_EQ(enumerate_domain(PrimeModulus(5), 1).size(), 5u);
}

TEST(EnumerateDomain, DistinctAndComplete) {
  const auto dom = enumerate_domain(PrimeModulus(101), 3);
  std::set<std::uint64_t> codes;
  dom.for_each([&](std::uint64_t i, std::span<const Residue> x) {
    codes.insert((x[0] * 101 + x[1]) * 101 + x[2]);
    EXPECT_EQ(dom.point_at(i), std::vector<Residue>(x.begin(), x.end()));
  });
  EXPECT_EQ(codes.size(), 1030301u);
}

TEST(EnumerateDomain, ChunksCoverInOrder) {
  const auto dom = enumerate_domain(PrimeModulus(7), 3);
  std::uint64_t next = 0;
  for (auto [b, e] : dom.chunks(50)) {
    EXPECT_EQ(b, next);
    next = e;
  }
  EXPECT_EQ(next, 343u);
}

TEST(EnumerateDomain, OverflowRaises) {
  EXPECT_THROW(enumerate_domain(PrimeModulus(1099511627791ull), 2), BudgetError);
}

}  // namespace
}  // namespace torusq
