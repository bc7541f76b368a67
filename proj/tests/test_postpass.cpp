#include "support.hpp"

#include <gtest/gtest.h>

using namespace polysched;
using namespace testing_support;

namespace {

AffineTransform loops(const std::vector<std::vector<std::vector<Rational>>> &perStmt) {
  AffineTransform t = emptyTransform(perStmt.size());
  for (std::size_t l = 0; l < perStmt[0].size(); ++l) {
    std::vector<Hyperplane> rows;
    for (const auto &s : perStmt)
      rows.push_back(s[l]);
    appendLevel(t, std::move(rows), LevelKind::Loop);
  }
  return t;
}

// Relative shift of S2 against S1 on level 0 (constant terms).
Rational relativeShift(const AffineTransform &t) {
  return t.rows[1][0].back() - t.rows[0][0].back();
}

// Smallest non-negative relative constant shift c (in 0..4) for which the
// fused rows i and i + c are legal instance-wise, by enumeration.
Int minimalLegalShift(const Program &p) {
  for (Int c = 0; c <= 4; ++c) {
    AffineTransform t = loops({{rats({1, 0, 0})}, {rats({1, 0, c})}});
    detail::appendOrderingLevel(t, p, {{0}, {1}}, false);
    bool ok = true;
    for (Int n : {5, 6, 7})
      ok = ok && simulatedLegal(p, t, {n});
    if (ok)
      return c;
  }
  return -1;
}

} // namespace

TEST(ScaleShift, Fig1KeepsUnitScalingAndZeroShifts) {
  Program p = corpusProgram("fig1");
  DDG g = computeDependences(p);
  DfpResult r = scheduleDfp(p, g);
  const AffineTransform &t = r.scaled;
  ASSERT_GE(t.numLevels(), 2u);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t l = 0; l < 2; ++l) {
      EXPECT_EQ(t.levelKinds[l], LevelKind::Loop);
      EXPECT_EQ(t.rows[s][l].back(), Rational(0));
      int ones = 0;
      for (std::size_t k = 0; k < 2; ++k)
        ones += t.rows[s][l][k] == Rational(1);
      EXPECT_EQ(ones, 1);
    }
  EXPECT_EQ(t.rows[1][0], rats({0, 1, 0, 0})); // S2 interchanged
  EXPECT_EQ(t.rows[1][1], rats({1, 0, 0, 0}));
  EXPECT_TRUE(t.cuts.empty());
  ASSERT_EQ(t.bands.size(), 1u);
  EXPECT_EQ(t.bands[0].end - t.bands[0].start, 2u);
  EXPECT_TRUE(r.skew.skewedLevels.empty());
}

TEST(ScaleShift, ConsumerShiftIsMinimal) {
  for (const char *name : {"shift_consumer", "lagged_consumer"}) {
    Program p = corpusProgram(name);
    DDG g = computeDependences(p);
    AffineTransform t = scheduleDfp(p, g).transform();
    ASSERT_EQ(t.levelKinds[0], LevelKind::Loop) << name;
    EXPECT_EQ(t.rows[0][0][0], Rational(1));
    EXPECT_EQ(t.rows[1][0][0], Rational(1));
    // Fused with zero distance: the level is parallel (u = w = 0).
    EXPECT_TRUE(t.parallel[0]) << name;
    EXPECT_EQ(abs(relativeShift(t)), Rational(2)) << name;
    EXPECT_TRUE(checkLegality(p, g, t).ok());
  }
  // The consumer shift of shift_consumer is the smallest legal one.
  Program p = corpusProgram("shift_consumer");
  EXPECT_EQ(minimalLegalShift(p), 2);
  EXPECT_EQ(relativeShift(scheduleDfp(p, computeDependences(p)).transform()),
            Rational(2));
}

TEST(ScaleShift, DependenceFreeProgramIsIdentity) {
  Program p = corpusProgram("independent");
  DDG g = computeDependences(p);
  AffineTransform t = scheduleDfp(p, g).transform();
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(t.rows[s][0], rats({1, 0, 0, 0}));
    EXPECT_EQ(t.rows[s][1], rats({0, 1, 0, 0}));
  }
  EXPECT_EQ(t.numLevels(), 2u);
}

TEST(Skew, TimeIteratedStencilGetsWavefront) {
  Program p = corpusProgram("jacobi1d");
  DDG g = computeDependences(p);
  AffineTransform id = loops({{rats({1, 0, 0, 0}), rats({0, 1, 0, 0})}});
  annotateTransform(id, p, g.edges());
  SkewResult r = introduceSkew(p, g, id);
  EXPECT_FALSE(r.diagnostic);
  EXPECT_EQ(r.skewedLevels, std::vector<std::size_t>{1});
  EXPECT_EQ(r.transform.rows[0][0], rats({1, 0, 0, 0}));
  EXPECT_EQ(r.transform.rows[0][1], rats({1, 1, 0, 0}));
  for (const auto &d : g.edges())
    for (std::size_t l = 0; l < 2; ++l) {
      auto m = minDifference(d, p, r.transform.rows[0][l], r.transform.rows[0][l]);
      ASSERT_TRUE(m);
      EXPECT_GE(m->sign(), 0);
    }
}

TEST(Skew, SeidelInnerLevelIsSkewed) {
  Program p = corpusProgram("seidel2d");
  DDG g = computeDependences(p);
  DfpResult r = scheduleDfp(p, g);
  EXPECT_EQ(r.skew.skewedLevels, std::vector<std::size_t>{1});
  EXPECT_EQ(r.transform().rows[0][1], rats({1, 1, 0, 0}));
  for (Int n : {4, 5, 6})
    EXPECT_TRUE(simulatedLegal(p, r.transform(), {n}));
}

TEST(Skew, TileableInputIsUnchanged) {
  for (const char *name : {"matmul", "fig1", "stencil1d", "independent"}) {
    Program p = corpusProgram(name);
    DDG g = computeDependences(p);
    DfpResult r = scheduleDfp(p, g);
    EXPECT_TRUE(r.skew.skewedLevels.empty()) << name;
    EXPECT_EQ(r.skew.transform, r.scaled) << name;
  }
}

TEST(Skew, ImpossibleSkewReportsAndKeepsInput) {
  // A reversed outermost row has nothing outer to combine with.
  Program p = corpusProgram("stencil1d");
  DDG g = computeDependences(p);
  AffineTransform rev = loops({{rats({-1, 0, 0})}});
  SkewResult r = introduceSkew(p, g, rev);
  ASSERT_TRUE(r.diagnostic);
  EXPECT_NE(r.diagnostic->find("not tileable"), std::string::npos);
  EXPECT_EQ(r.transform, rev);
  EXPECT_TRUE(r.skewedLevels.empty());
}

// Every corpus program: the final dfp transform is legal by instance-wise
// simulation and full rank.
class DfpCorpus : public ::testing::TestWithParam<const char *> {};

TEST_P(DfpCorpus, LegalAndFullRank) {
  Program p = corpusProgram(GetParam());
  DDG g = computeDependences(p);
  DfpResult r = scheduleDfp(p, g);
  EXPECT_TRUE(fullRank(p, r.transform()));
  EXPECT_TRUE(checkLegality(p, g, r.transform()).ok());
  for (Int n : {4, 5, 6})
    EXPECT_TRUE(simulatedLegal(p, r.transform(), {n})) << "N=" << n;
}

INSTANTIATE_TEST_SUITE_P(Corpus, DfpCorpus,
                         ::testing::Values("empty", "fig1", "stencil1d", "jacobi1d",
                                           "seidel2d", "matmul", "independent",
                                           "transpose_chain", "scc_cycle",
                                           "shift_consumer", "lagged_consumer",
                                           "reversal"));
