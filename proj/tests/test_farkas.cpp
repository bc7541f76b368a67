#include "support.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace polysched;
using namespace testing_support;

namespace {

bool rowsHold(const ConstraintSystem &sys, const std::vector<Rational> &x) {
  for (const auto &r : sys.rows())
    if (!r.satisfiedBy(x))
      return false;
  return true;
}

// Calls fn on every assignment with x[v] in ranges[v] (inclusive).
void forGrid(const std::vector<std::pair<int, int>> &ranges,
             const std::function<void(const std::vector<Rational> &)> &fn) {
  std::vector<int> x;
  for (auto [lo, hi] : ranges)
    x.push_back(lo);
  while (true) {
    std::vector<Rational> pt;
    for (int v : x)
      pt.emplace_back(v);
    fn(pt);
    std::size_t k = x.size();
    while (k > 0 && x[k - 1] == ranges[k - 1].second)
      x[k - 1] = ranges[k - 1].first, --k;
    if (k == 0)
      return;
    ++x[k - 1];
  }
}

struct DepPoint {
  std::vector<Int> src, dst;
  Int n;
};

std::vector<DepPoint> depPoints(const Program &prog, const DependencePolyhedron &d,
                                Int maxN) {
  DDG one(prog.statements.size(), {d});
  std::vector<DepPoint> out;
  for (Int n = 0; n <= maxN; ++n)
    for (const auto &[a, b, k, x, y] : polyhedraPoints(prog, one, {n}))
      out.push_back({x, y, n});
  return out;
}

// Symbolic rows versus the pointwise condition on every dependence instance
// for N = 0..maxN, over a grid of layout assignments.
void checkAgainstPoints(const char *program, std::size_t depIndex, int coefRange,
                        Int maxN) {
  Program prog = corpusProgram(program);
  DDG ddg = computeDependences(prog);
  const auto &d = ddg.edges()[depIndex];
  std::vector<std::size_t> stmts{std::min(d.src, d.dst)};
  if (d.src != d.dst)
    stmts.push_back(std::max(d.src, d.dst));
  CoefficientLayout layout(prog, stmts, LayoutOptions{false, true});
  ConstraintSystem legal = legalityConstraints(d, prog, layout);
  ConstraintSystem bound = boundingConstraints(d, prog, layout);
  auto points = depPoints(prog, d, maxN);
  ASSERT_FALSE(points.empty());

  std::vector<std::pair<int, int>> ranges;
  for (std::size_t v = 0; v < layout.numVars(); ++v) {
    const std::string &name = layout.names()[v];
    if (name.starts_with("u_"))
      ranges.emplace_back(0, 1);
    else if (name == "w")
      ranges.emplace_back(0, 3);
    else if (name.ends_with(".c_0"))
      ranges.emplace_back(d.src == d.dst || name.starts_with(prog.statements[d.src].id) ? 0 : -2,
                          d.src == d.dst || name.starts_with(prog.statements[d.src].id) ? 0 : 2);
    else
      ranges.emplace_back(-coefRange, coefRange);
  }
  std::size_t agreeTrue = 0, total = 0;
  forGrid(ranges, [&](const std::vector<Rational> &x) {
    Hyperplane hs = layout.extract(d.src, x), ht = layout.extract(d.dst, x);
    bool pointLegal = true, pointBound = true;
    for (const auto &p : points) {
      Rational diff = rowAt(ht, p.dst, {p.n}) - rowAt(hs, p.src, {p.n});
      pointLegal = pointLegal && diff.sign() >= 0;
      Rational ub = x[layout.u(0)] * Rational(p.n) + x[layout.w()];
      pointBound = pointBound && diff <= ub;
    }
    ++total;
    agreeTrue += pointLegal;
    EXPECT_EQ(rowsHold(legal, x), pointLegal) << program << " dep " << depIndex;
    EXPECT_EQ(rowsHold(bound, x), pointBound) << program << " dep " << depIndex;
  });
  // The grid must exercise both outcomes.
  EXPECT_GT(agreeTrue, 0u);
  EXPECT_LT(agreeTrue, total);
}

} // namespace

TEST(Farkas, HandExampleOverInterval) {
  // a*x + b >= 0 for all 0 <= x <= N, N >= 0   <=>   b >= 0 and a + b... over N
  // unbounded: b >= 0 and a >= 0.
  ConstraintSystem poly;
  poly.addVar("x", std::nullopt);
  poly.addVar("N", Rational(0));
  poly.addInequality(rats({1, 0}), 0);
  poly.addInequality(rats({-1, 1}), 0);
  ConstraintSystem z;
  z.addVar("a", std::nullopt);
  z.addVar("b", std::nullopt);
  SymbolicForm f;
  f.perDim = {rats({1, 0}), rats({0, 0})};
  f.constant = rats({0, 1});
  ConstraintSystem out = farkasNonNegative(poly, f, z);
  forGrid({{-3, 3}, {-3, 3}}, [&](const std::vector<Rational> &x) {
    EXPECT_EQ(rowsHold(out, x), x[0].sign() >= 0 && x[1].sign() >= 0)
        << x[0].str() << "," << x[1].str();
  });
}

TEST(Farkas, EqualitiesAreSubstituted) {
  // x = y + 2 on 0 <= y <= 5: a*x - a*y + b = 2a + b >= 0.
  ConstraintSystem poly;
  poly.addVar("x", std::nullopt);
  poly.addVar("y", std::nullopt);
  poly.addEquality(rats({1, -1}), Rational(-2));
  poly.addInequality(rats({0, 1}), 0);
  poly.addInequality(rats({0, -1}), Rational(5));
  ConstraintSystem z;
  z.addVar("a", std::nullopt);
  z.addVar("b", std::nullopt);
  SymbolicForm f;
  f.perDim = {rats({1, 0}), rats({-1, 0})};
  f.constant = rats({0, 1});
  ConstraintSystem out = farkasNonNegative(poly, f, z);
  forGrid({{-4, 4}, {-8, 8}}, [&](const std::vector<Rational> &x) {
    EXPECT_EQ(rowsHold(out, x), (Rational(2) * x[0] + x[1]).sign() >= 0);
  });
}

TEST(Farkas, SelfDependencesMatchPointwise) {
  Program prog = corpusProgram("jacobi1d");
  for (std::size_t e = 0; e < computeDependences(prog).edges().size(); ++e)
    checkAgainstPoints("jacobi1d", e, 3, 7);
  checkAgainstPoints("stencil1d", 0, 3, 8);
}

TEST(Farkas, SeidelDependencesMatchPointwise) {
  Program prog = corpusProgram("seidel2d");
  for (std::size_t e = 0; e < computeDependences(prog).edges().size(); ++e)
    checkAgainstPoints("seidel2d", e, 2, 6);
}

TEST(Farkas, InterStatementDependencesMatchPointwise) {
  Program prog = corpusProgram("fig1");
  DDG ddg = computeDependences(prog);
  for (std::size_t e = 0; e < ddg.edges().size(); ++e)
    if (ddg.edges()[e].constrainsLegality())
      checkAgainstPoints("fig1", e, 1, 12);
  checkAgainstPoints("shift_consumer", 0, 2, 14);
}

TEST(Farkas, CacheRemapEqualsDirectGeneration) {
  Program prog = corpusProgram("fig1");
  DDG ddg = computeDependences(prog);
  FarkasCache cache(prog);
  CoefficientLayout layout(prog, {0, 1, 2}, LayoutOptions{false, true});
  for (const auto &d : ddg.edges()) {
    ConstraintSystem viaCache = layout.emptySystem();
    cache.addRows(d, layout, viaCache, true);
    ConstraintSystem direct = legalityConstraints(d, prog, layout);
    direct.append(boundingConstraints(d, prog, layout));
    std::vector<std::pair<int, int>> ranges(layout.numVars(), {0, 1});
    ranges[layout.w()] = {0, 2};
    forGrid(ranges, [&](const std::vector<Rational> &x) {
      EXPECT_EQ(rowsHold(viaCache, x), rowsHold(direct, x));
    });
  }
}

TEST(Farkas, LayoutNamesAndLexOrder) {
  Program prog = corpusProgram("fig1");
  CoefficientLayout layout(prog, {0, 2});
  std::vector<std::string> names = layout.names();
  EXPECT_EQ(names.front(), "u_N");
  EXPECT_EQ(names[1], "w");
  EXPECT_TRUE(layout.has(0));
  EXPECT_FALSE(layout.has(1));
  EXPECT_THROW((void)layout.c(1, 0), InternalError);
  auto order = layout.lexOrder();
  ASSERT_EQ(order.size(), layout.numVars());
  EXPECT_EQ(order[0], layout.u(0));
  EXPECT_EQ(order[1], layout.w());
  EXPECT_EQ(order[2], layout.c(0, 1)); // innermost coefficient first
}
