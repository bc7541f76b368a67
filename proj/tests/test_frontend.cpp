#include "support.hpp"

#include <gtest/gtest.h>

using namespace polysched;
using namespace testing_support;

namespace {

const char *kTiny = R"({
  "params": ["N"],
  "statements": [
    {"id": "T", "iterators": ["i"], "domain": [[1, 0, 0, ">="], [-1, 1, -1, ">="]],
     "accesses": [{"array": "b", "kind": "write", "map": [[1, 0, 0]]},
                  {"array": "a", "kind": "read", "map": [[1, 0, 0]]}], "order": 1},
    {"id": "S", "iterators": ["i"], "domain": [[1, 0, 0, ">="], [-1, 1, -1, ">="]],
     "accesses": [{"array": "a", "kind": "write", "map": [[1, 0, 0]]}], "order": 0}
  ]
})";

std::string replaced(std::string text, const std::string &from, const std::string &to) {
  auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

} // namespace

TEST(Frontend, SortsStatementsByOrder) {
  Program p = parseProgram(kTiny);
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.statements[0].id, "S");
  EXPECT_EQ(p.statements[1].id, "T");
  DDG g = computeDependences(p);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].src, 0u);
  EXPECT_EQ(g.edges()[0].kind, DepKind::RAW);
}

TEST(Frontend, RejectsMalformedInput) {
  EXPECT_THROW(parseProgram("{"), ParseError);
  EXPECT_THROW(parseProgram("[]"), ParseError);
  EXPECT_THROW(parseProgram(R"({"params": []})"), ParseError);
  EXPECT_THROW(parseProgram(replaced(kTiny, R"([1, 0, 0, ">="], [-1)", R"([1, 0, ">="], [-1)")),
               ParseError);
  EXPECT_THROW(parseProgram(replaced(kTiny, R"(">="], [-1, 1, -1, ">="]],
     "accesses": [{"array": "b")",
                                     R"("=>"], [-1, 1, -1, ">="]],
     "accesses": [{"array": "b")")),
               ParseError);
  EXPECT_THROW(parseProgram(replaced(kTiny, R"("kind": "read")", R"("kind": "load")")),
               ParseError);
  EXPECT_THROW(parseProgram(replaced(kTiny, R"([1, 0, 0]]}], "order": 0)",
                                     R"([1, 0.5, 0]]}], "order": 0)")),
               ParseError);
  EXPECT_THROW(parseProgram(replaced(kTiny, R"("id": "T")", R"("id": "S")")), ParseError);
  EXPECT_THROW(loadProgram("/nonexistent/program.json"), ParseError);
}

TEST(Frontend, ExplicitDependencesReplaceAnalysis) {
  std::string text = kTiny;
  text.insert(text.rfind('}'),
              R"(, "dependences": [{"src": "S", "dst": "T", "kind": "WAW",
                  "relation": [[1, -1, 0, 0, "=="], [1, 0, 0, 0, ">="],
                               [-1, 0, 1, -1, ">="]]}])");
  Program p = parseProgram(text);
  DDG g = computeDependences(p);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].kind, DepKind::WAW);
  EXPECT_THROW(parseProgram(replaced(text, R"("dst": "T")", R"("dst": "Q")")), ParseError);
  // An empty relation is rejected.
  EXPECT_THROW(parseProgram(replaced(text, R"([-1, 0, 1, -1, ">="])",
                                     R"([-1, 0, 0, -1, ">="])")),
               ParseError);
}

TEST(Frontend, EmptyProgramHasNoDependences) {
  Program p = corpusProgram("empty");
  EXPECT_TRUE(p.statements.empty());
  EXPECT_TRUE(computeDependences(p).edges().empty());
}

// The integer points of the computed polyhedra are exactly the dependences
// found by executing the accesses.
class DependenceOracle : public ::testing::TestWithParam<std::tuple<const char *, int>> {};

TEST_P(DependenceOracle, PolyhedraMatchSimulation) {
  auto [name, n] = GetParam();
  Program p = corpusProgram(name);
  DDG g = computeDependences(p);
  auto simulated = simulateDependences(p, {n});
  auto computed = polyhedraPoints(p, g, {n});
  EXPECT_EQ(computed, simulated) << name << " N=" << n << ": " << computed.size()
                                 << " polyhedral points vs " << simulated.size()
                                 << " simulated";
}

INSTANTIATE_TEST_SUITE_P(
    Corpus, DependenceOracle,
    ::testing::Combine(::testing::Values("fig1", "stencil1d", "jacobi1d", "seidel2d",
                                         "matmul", "independent", "transpose_chain",
                                         "shift_consumer", "lagged_consumer", "reversal"),
                       ::testing::Values(5, 6)));

TEST(Frontend, SameStatementDependencesHaveOneCarryingLevel) {
  Program p = corpusProgram("seidel2d");
  DDG g = computeDependences(p);
  for (const auto &d : g.edges()) {
    ASSERT_EQ(d.src, d.dst);
    // Minimum of (t_i - s_i) is >= 1 or the outer distance is pinned at 0.
    Hyperplane outer{Rational(1), Rational(0), Rational(0), Rational(0)};
    auto lo = minDifference(d, p, outer, outer);
    auto hi = maxDifference(d, p, outer, outer);
    ASSERT_TRUE(lo);
    EXPECT_TRUE(*lo >= Rational(1) || (hi && lo->isZero() && hi->isZero()));
  }
}
