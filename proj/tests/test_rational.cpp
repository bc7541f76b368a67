#include "polysched/rational.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <random>

using polysched::Rational;

TEST(Rational, NormalizesSignAndGcd) {
  Rational r(6, -4);
  EXPECT_EQ(r.str(), "-3/2");
  EXPECT_TRUE(r.isSmall());
  EXPECT_EQ(Rational(0, 5), Rational(0));
  EXPECT_TRUE(Rational(8, 4).isInteger());
}

TEST(Rational, FloorAndCeilOfNegatives) {
  EXPECT_EQ(Rational(-7, 2).floor(), Rational(-4));
  EXPECT_EQ(Rational(-7, 2).ceil(), Rational(-3));
  EXPECT_EQ(Rational(7, 2).floor(), Rational(3));
  EXPECT_EQ(Rational(-4).ceil(), Rational(-4));
}

TEST(Rational, OverflowPromotesToBignum) {
  Rational big(INT64_MAX);
  Rational sum = big + big;
  EXPECT_FALSE(sum.isSmall());
  EXPECT_EQ(sum.str(), "18446744073709551614");
  EXPECT_EQ(sum - big, big);
  EXPECT_TRUE((sum - big).isSmall());
  Rational q = Rational(1, INT64_MAX) * Rational(1, INT64_MAX - 1);
  EXPECT_EQ(q * Rational(INT64_MAX) * Rational(INT64_MAX - 1), Rational(1));
  EXPECT_EQ(-Rational(INT64_MIN), Rational::parse("9223372036854775808"));
}

TEST(Rational, ParseRoundTrip) {
  for (const char *s : {"0", "-5", "7/3", "-22/7", "123456789012345678901234567891/2"})
    EXPECT_EQ(Rational::parse(s).str(), s);
  EXPECT_EQ(Rational::parse("4/6"), Rational(2, 3));
  EXPECT_THROW(Rational::parse("1/0"), std::invalid_argument);
  EXPECT_THROW(Rational::parse("abc"), std::invalid_argument);
  EXPECT_THROW(Rational::parse(""), std::invalid_argument);
}

// Field operations agree with GMP on random operands near the int64 edge.
TEST(Rational, AgreesWithMpqOnRandomOperands) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::int64_t> small(-50, 50);
  std::uniform_int_distribution<std::int64_t> wide(-(INT64_C(1) << 62), INT64_C(1) << 62);
  for (int k = 0; k < 2000; ++k) {
    auto pick = [&] { return k % 2 ? wide(rng) : small(rng); };
    std::int64_t an = pick(), ad = pick(), bn = pick(), bd = pick();
    if (ad == 0 || bd == 0)
      continue;
    Rational a(an, ad), b(bn, bd);
    mpq_class qa(mpz_class(std::to_string(an)), mpz_class(std::to_string(ad)));
    mpq_class qb(mpz_class(std::to_string(bn)), mpz_class(std::to_string(bd)));
    qa.canonicalize();
    qb.canonicalize();
    EXPECT_EQ((a + b).toMpq(), mpq_class(qa + qb));
    EXPECT_EQ((a - b).toMpq(), mpq_class(qa - qb));
    EXPECT_EQ((a * b).toMpq(), mpq_class(qa * qb));
    if (bn != 0)
      EXPECT_EQ((a / b).toMpq(), mpq_class(qa / qb));
    EXPECT_EQ(a < b, qa < qb);
    EXPECT_EQ(a == b, qa == qb);
  }
}

TEST(Rational, HashMatchesEquality) {
  std::hash<Rational> h;
  EXPECT_EQ(h(Rational(2, 4)), h(Rational(1, 2)));
  Rational big = Rational(INT64_MAX) + Rational(1);
  EXPECT_EQ(h(big - Rational(1)), h(Rational(INT64_MAX)));
}
