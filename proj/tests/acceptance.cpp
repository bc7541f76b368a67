// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "polysched.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

using namespace polysched;

namespace {

int failures = 0;

void report(int id, const std::string &name, bool ok, const std::string &detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  if (!ok)
    ++failures;
}

double seconds(const std::function<void()> &fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Program corpus(const std::string &name) {
  return loadProgram(std::string(POLYSCHED_CORPUS_DIR) + "/" + name + ".json");
}

bool isRow(const Hyperplane &h, std::initializer_list<Int> v) {
  std::vector<Rational> want;
  for (Int x : v)
    want.emplace_back(x);
  return h == want;
}

std::string counts(const CheckResult &r) {
  std::string s = std::to_string(r.checked) + " checked, " + std::to_string(r.skipped) +
                  " skipped, " + std::to_string(r.failures.size()) + " failed";
  if (!r.failures.empty())
    s += "; first: " + r.failures.front();
  return s;
}

bool passed(const CheckResult &r) { return r.status() == CheckStatus::Pass; }

void fig1Golden() {
  AffineTransform t;
  ColoringResult col;
  Program p;
  double secs = seconds([&] {
    p = corpus("fig1");
    DDG g = computeDependences(p);
    t = scheduleDfp(p, g).transform();
    FarkasCache cache(p);
    col = permuteAndFuse(p, g, cache);
  });
  bool ok = p.statements.size() == 3 && t.numLevels() >= 2;
  if (ok) {
    ok = isRow(t.rows[0][0], {1, 0, 0, 0}) && isRow(t.rows[0][1], {0, 1, 0, 0}) &&
         isRow(t.rows[1][0], {0, 1, 0, 0}) && isRow(t.rows[1][1], {1, 0, 0, 0}) &&
         isRow(t.rows[2][0], {1, 0, 0, 0}) && isRow(t.rows[2][1], {0, 1, 0, 0});
  }
  std::set<std::size_t> classes;
  for (const auto &c : col.coloring.colorOf)
    if (c)
      classes.insert(*c);
  bool colored = col.coloring.numColored() == 6 && classes.size() == 2;
  ok = ok && colored && t.cuts.empty() && secs < 1.0;
  report(1, "fig1-golden", ok,
         std::to_string(col.coloring.numColored()) + " vertices colored in " +
             std::to_string(classes.size()) + " classes, " +
             std::to_string(t.cuts.size()) + " cuts, " + std::to_string(secs) +
             " s (limit 1 s)");
}

void fig1EdgeSet() {
  Program p = corpus("fig1");
  DDG g = computeDependences(p);
  FarkasCache cache(p);
  FusionConflictGraph fcg = buildFCG(p, g, cache);
  const std::set<std::pair<std::string, std::string>> want = {
      {"S1.i", "S2.i"}, {"S1.j", "S2.j"}, {"S2.i", "S3.i"}, {"S2.j", "S3.j"}};
  std::set<std::pair<std::string, std::string>> inter, extra;
  std::size_t intra = 0, self = 0;
  for (const auto &e : fcg.edges()) {
    if (e.a == e.b)
      ++self;
    else if (e.intraStatement)
      ++intra;
    else
      inter.insert({fcg.vertexName(p, e.a), fcg.vertexName(p, e.b)});
  }
  for (const auto &e : inter)
    if (!want.count(e))
      extra.insert(e);
  std::string detail = std::to_string(inter.size()) + " inter (want 4), " +
                       std::to_string(intra) + " intra (want 3), " +
                       std::to_string(self) + " self-loops";
  for (const auto &[a, b] : extra)
    detail += "; extra " + a + "-" + b;
  report(2, "fcg-edge-set", inter == want && intra == 3 && self == 0, detail);
}

void scalability() {
  Program p = chainProgram(30);
  DDG g = computeDependences(p);
  DfpResult dfp;
  double tDfp = seconds([&] { dfp = scheduleDfp(p, g); });
  SchedulerConfig cfg;
  cfg.mode = SolveMode::ILP;
  double tIlp = seconds([&] { (void)schedule(p, g, cfg); });
  bool legal = checkLegality(p, g, dfp.transform()).ok();
  report(10, "chain30-scalability", legal && tDfp < 10.0 && tDfp < tIlp,
         "dfp " + std::to_string(tDfp) + " s (limit 10 s), ilp " +
             std::to_string(tIlp) + " s" + (legal ? "" : ", dfp schedule illegal"));
}

} // namespace

int main() {
  try {
    fig1Golden();
    fig1EdgeSet();

    SuiteReport rep = checkSuite(loadCorpus(POLYSCHED_CORPUS_DIR));
    const auto &scaling = rep.get("scaling-invariance");
    report(3, "lp-scaling-invariance", passed(scaling) && scaling.checked >= 50,
           counts(scaling) + " (need >= 50 systems)");
    report(4, "parallel-agreement", passed(rep.get("parallel-hyperplane-agreement")),
           counts(rep.get("parallel-hyperplane-agreement")));
    report(5, "band-size-agreement", passed(rep.get("band-size-agreement")),
           counts(rep.get("band-size-agreement")));
    report(6, "lp-row-lift-oracle", passed(rep.get("row-lift")),
           counts(rep.get("row-lift")) + " [objective lift: " +
               toString(rep.get("objective-lift").status()) + "]");
    report(7, "restricted-equality", passed(rep.get("restricted-equality")),
           counts(rep.get("restricted-equality")));

    const auto &legal = rep.get("dfp-legal-full-rank");
    const auto &skewLegal = rep.get("skew-legality");
    const auto &noop = rep.get("skew-noop");
    report(8, "dfp-legal-rank-skew", passed(legal) && passed(skewLegal) && passed(noop),
           "legal+rank: " + counts(legal) + " | skew legal: " + counts(skewLegal) +
               " | skew no-op: " + counts(noop));

    const auto &joint = rep.get("pairwise-joint-fusion");
    const auto &trans = rep.get("fusion-transitivity");
    const auto &scc = rep.get("scc-colorable");
    report(9, "fusion-structure", passed(joint) && passed(trans) && passed(scc),
           "joint: " + counts(joint) + " | transitivity: " + counts(trans) +
               " | scc colorable: " + counts(scc));

    scalability();
  } catch (const std::exception &e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
