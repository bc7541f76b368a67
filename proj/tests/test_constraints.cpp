#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace polysched;
using testing_support::rats;

namespace {

ConstraintSystem randomSystem(std::mt19937 &rng, std::size_t vars, std::size_t rows,
                              bool withEquality) {
  std::uniform_int_distribution<int> coef(-3, 3), cst(-6, 6);
  ConstraintSystem sys;
  for (std::size_t v = 0; v < vars; ++v)
    sys.addVar("x" + std::to_string(v), std::nullopt);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<Rational> c;
    for (std::size_t v = 0; v < vars; ++v)
      c.emplace_back(coef(rng));
    if (withEquality && r == 0)
      sys.addEquality(std::move(c), Rational(cst(rng)));
    else
      sys.addInequality(std::move(c), Rational(cst(rng)));
  }
  return sys;
}

// Exact: does some rational x_last extend (x_0..x_{n-2}) to a solution?
bool extends(const ConstraintSystem &sys, const std::vector<Rational> &prefix) {
  const std::size_t last = sys.numVars() - 1;
  std::optional<Rational> lo, hi;
  for (const auto &r : sys.rows()) {
    Rational rest = r.constant;
    for (std::size_t v = 0; v < last; ++v)
      rest += r.coeffs[v] * prefix[v];
    const Rational &a = r.coeffs[last];
    if (a.isZero()) {
      if (r.rel == Relation::Equal ? !rest.isZero() : rest.sign() < 0)
        return false;
      continue;
    }
    Rational bound = -rest / a; // a x + rest (>=|==) 0
    if (r.rel == Relation::Equal || a.sign() > 0)
      lo = lo ? std::max(*lo, bound) : bound;
    if (r.rel == Relation::Equal || a.sign() < 0)
      hi = hi ? std::min(*hi, bound) : bound;
  }
  return !lo || !hi || *lo <= *hi;
}

} // namespace

TEST(ConstraintSystem, RowWidthIsChecked) {
  ConstraintSystem sys;
  sys.addVar("x");
  EXPECT_THROW(sys.addInequality(rats({1, 2})), InternalError);
  EXPECT_THROW((void)sys.eliminate(std::vector<std::size_t>{3}), InternalError);
}

TEST(ConstraintSystem, LowerBoundsTakePartInSatisfaction) {
  ConstraintSystem sys;
  sys.addVar("x", Rational(0));
  sys.addVar("y", std::nullopt);
  sys.addInequality(rats({1, 1}), Rational(-1));
  EXPECT_TRUE(sys.isSatisfiedBy(rats({0, 1})));
  EXPECT_FALSE(sys.isSatisfiedBy(rats({-1, 3})));
  EXPECT_TRUE(sys.isSatisfiedBy(rats({2, -1})));
}

TEST(ConstraintSystem, SimplifyDetectsContradiction) {
  ConstraintSystem sys;
  sys.addVar("x", std::nullopt);
  sys.addEquality(rats({2}), Rational(-2));
  sys.addEquality(rats({1}), Rational(-2));
  sys.simplify();
  EXPECT_FALSE(sys.isSatisfiedBy(rats({1})));
  EXPECT_FALSE(sys.isSatisfiedBy(rats({2})));
}

TEST(ConstraintSystem, GaussSubstitutesEqualities) {
  // x = 2y + 1, x + y <= 4  ->  3y + 1 <= 4  ->  y <= 1.
  ConstraintSystem sys;
  sys.addVar("x", std::nullopt);
  sys.addVar("y", std::nullopt);
  sys.addEquality(rats({1, -2}), Rational(-1));
  sys.addInequality(rats({-1, -1}), Rational(4));
  ConstraintSystem p = sys.eliminate(std::vector<std::size_t>{0});
  ASSERT_EQ(p.numVars(), 1u);
  EXPECT_TRUE(p.isSatisfiedBy(rats({1})));
  EXPECT_FALSE(p.isSatisfiedBy(std::vector<Rational>{Rational(4, 3)}));
}

// Projection soundness and completeness, checked pointwise against the exact
// interval of the eliminated variable.
class Projection : public ::testing::TestWithParam<int> {};

TEST_P(Projection, MatchesExactExtension) {
  std::mt19937 rng(GetParam());
  ConstraintSystem sys = randomSystem(rng, 3, 5, GetParam() % 2 == 0);
  ConstraintSystem p = sys.eliminate(std::vector<std::size_t>{2});
  ASSERT_EQ(p.numVars(), 2u);
  for (int a = -4; a <= 4; ++a)
    for (int b = -4; b <= 4; ++b) {
      std::vector<Rational> pt = rats({a, b});
      EXPECT_EQ(p.isSatisfiedBy(pt), extends(sys, pt))
          << "seed " << GetParam() << " at (" << a << "," << b << ")\n"
          << sys.str();
    }
  // Half-integral sample points too.
  for (int a = -7; a <= 7; a += 2) {
    std::vector<Rational> pt{Rational(a, 2), Rational(1, 3)};
    EXPECT_EQ(p.isSatisfiedBy(pt), extends(sys, pt));
  }
}

INSTANTIATE_TEST_SUITE_P(RandomSystems, Projection, ::testing::Range(1, 41));

// Eliminating two variables agrees with LP feasibility of the fibre.
TEST(ConstraintSystem, TwoVariableProjectionMatchesLp) {
  for (int seed = 100; seed < 130; ++seed) {
    std::mt19937 rng(seed);
    ConstraintSystem sys = randomSystem(rng, 3, 6, seed % 3 == 0);
    ConstraintSystem p = sys.eliminate(std::vector<std::size_t>{1, 2});
    for (int a = -5; a <= 5; ++a) {
      LPProblem lp;
      lp.system = sys;
      lp.system.addFixRow(0, Rational(a));
      bool feasible = solveLP(lp).status != LPStatus::Infeasible;
      EXPECT_EQ(p.isSatisfiedBy(rats({a})), feasible) << "seed " << seed << " x0=" << a;
    }
  }
}
