#pragma once

// Oracles and the check suite: legality re-check, brute-force integer
// lexmin, and differential checks between the ILP and LP schedulers.

#include "polysched/constraints.hpp"
#include "polysched/fcg.hpp"
#include "polysched/frontend.hpp"
#include "polysched/model.hpp"
#include "polysched/pluto.hpp"
#include "polysched/postpass.hpp"
#include "polysched/ratlp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

// ---------------------------------------------------------------------------
// Legality.

struct Violation {
  std::size_t dep = 0;
  std::string src, dst;
  DepKind kind = DepKind::RAW;
  std::optional<std::size_t> level; // nullopt: never satisfied
  std::optional<Rational> min;      // nullopt: unbounded below
  std::string message;
};

struct LegalityReport {
  std::vector<Violation> violations;
  /// Level at which each legality dependence is satisfied (nullopt for RAR).
  std::vector<std::optional<std::size_t>> satisfiedAt;

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Per dependence and level, the exact minimum of the schedule difference:
/// >= 0 before the satisfaction level, >= 1 at it.
inline LegalityReport checkLegality(const Program &prog, const DDG &ddg,
                                    const AffineTransform &t) {
  LegalityReport rep;
  rep.satisfiedAt.resize(ddg.edges().size());
  for (std::size_t e = 0; e < ddg.edges().size(); ++e) {
    const auto &d = ddg.edges()[e];
    if (!d.constrainsLegality())
      continue;
    auto violation = [&](std::optional<std::size_t> level,
                         std::optional<Rational> min, std::string msg) {
      rep.violations.push_back({e, prog.statements[d.src].id,
                                prog.statements[d.dst].id, d.kind, level,
                                std::move(min), std::move(msg)});
    };
    bool done = false;
    for (std::size_t l = 0; l < t.numLevels() && !done; ++l) {
      auto m = minDifference(d, prog, t.rows[d.src][l], t.rows[d.dst][l]);
      if (!m) {
        violation(l, std::nullopt, "difference unbounded below");
        done = true;
      } else if (*m >= Rational(1)) {
        rep.satisfiedAt[e] = l;
        done = true;
      } else if (m->sign() < 0) {
        violation(l, m, "negative difference " + m->str());
        done = true;
      }
    }
    if (done)
      continue;
    // Never satisfied as a whole: every instance pair must still be ordered.
    DependenceStatus st = dependenceStatus(d, prog, t);
    if (st.satisfiedAt) {
      rep.satisfiedAt[e] = st.satisfiedAt;
    } else if (st.violatedAt) {
      violation(st.violatedAt, st.levels.back().min,
                "instance pairs tied on outer levels are reversed");
    } else {
      violation(std::nullopt, std::nullopt,
                "instance pairs mapped to the same time on every level");
    }
  }
  return rep;
}

/// Every statement has as many linearly independent iterator rows as loops.
inline bool fullRank(const Program &prog, const AffineTransform &t) {
  for (std::size_t s = 0; s < prog.statements.size(); ++s)
    if (iteratorRank(t, s, prog.statements[s].dim()) != prog.statements[s].dim())
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Brute-force integer lexmin.

/// Lexicographically smallest integer point of `sys` in [0, bound]^n, with
/// variables compared in `order` (remaining variables after it).
inline std::optional<std::vector<Rational>>
bruteForceLexmin(const ConstraintSystem &sys, Int bound,
                 std::vector<std::size_t> order = {}) {
  const std::size_t n = sys.numVars();
  std::vector<bool> seen(n, false);
  for (std::size_t v : order)
    seen[v] = true;
  for (std::size_t v = 0; v < n; ++v)
    if (!seen[v])
      order.push_back(v);
  std::vector<std::size_t> pos(n);
  for (std::size_t k = 0; k < n; ++k)
    pos[order[k]] = k;

  // A row can be checked once its last variable (in order) is assigned;
  // before that, bound its best case over the unassigned box.
  const auto &rows = sys.rows();
  std::vector<Rational> x(n);
  std::vector<std::vector<std::size_t>> rowsAt(n + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t last = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (!rows[r].coeffs[v].isZero())
        last = std::max(last, pos[v] + 1);
    rowsAt[last].push_back(r);
  }
  for (std::size_t r : rowsAt[0])
    if (!rows[r].satisfiedBy(x))
      return std::nullopt;

  auto hopeless = [&](std::size_t depth) {
    // Rows with unassigned variables: maximum (and minimum for equalities)
    // over the remaining box must admit zero.
    for (std::size_t k = depth + 1; k <= n; ++k)
      for (std::size_t r : rowsAt[k]) {
        Rational lo = rows[r].constant, hi = rows[r].constant;
        for (std::size_t v = 0; v < n; ++v) {
          const Rational &c = rows[r].coeffs[v];
          if (c.isZero())
            continue;
          if (pos[v] < depth) {
            lo += c * x[v];
            hi += c * x[v];
          } else if (c.sign() > 0) {
            hi += c * Rational(bound);
          } else {
            lo += c * Rational(bound);
          }
        }
        if (hi.sign() < 0)
          return true;
        if (rows[r].rel == Relation::Equal && lo.sign() > 0)
          return true;
      }
    return false;
  };

  std::function<bool(std::size_t)> dfs = [&](std::size_t depth) -> bool {
    if (depth == n)
      return true;
    std::size_t v = order[depth];
    for (Int val = 0; val <= bound; ++val) {
      x[v] = Rational(val);
      bool ok = true;
      for (std::size_t r : rowsAt[depth + 1])
        if (!rows[r].satisfiedBy(x)) {
          ok = false;
          break;
        }
      if (ok && !hopeless(depth + 1) && dfs(depth + 1))
        return true;
    }
    x[v] = Rational(0);
    return false;
  };
  if (!dfs(0))
    return std::nullopt;
  return x;
}

// ---------------------------------------------------------------------------
// Corpus.

struct CorpusEntry {
  std::string name;
  Program program;
};

inline std::vector<CorpusEntry> loadCorpus(const std::string &dir) {
  if (!std::filesystem::is_directory(dir))
    throw ParseError(dir + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto &ent : std::filesystem::directory_iterator(dir))
    if (ent.path().extension() == ".json")
      files.push_back(ent.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusEntry> out;
  for (const auto &f : files)
    out.push_back({f.stem().string(), loadProgram(f.string())});
  return out;
}

// ---------------------------------------------------------------------------
// Differential and invariant suite.

enum class CheckStatus { Pass, Fail, Skip };

inline const char *toString(CheckStatus s) {
  switch (s) {
  case CheckStatus::Pass:
    return "pass";
  case CheckStatus::Fail:
    return "fail";
  case CheckStatus::Skip:
    return "skip";
  }
  return "?";
}

struct CheckResult {
  std::string name;
  std::string claim;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures; // instance id + counterexample
  std::vector<std::string> notes;

  [[nodiscard]] CheckStatus status() const {
    if (!failures.empty())
      return CheckStatus::Fail;
    return checked == 0 ? CheckStatus::Skip : CheckStatus::Pass;
  }
  void fail(std::string msg) { failures.push_back(std::move(msg)); }
};

struct SuiteReport {
  std::vector<CheckResult> results;

  [[nodiscard]] bool ok() const {
    return std::none_of(results.begin(), results.end(), [](const auto &r) {
      return r.status() == CheckStatus::Fail;
    });
  }
  [[nodiscard]] const CheckResult &get(const std::string &name) const {
    for (const auto &r : results)
      if (r.name == name)
        return r;
    throw InternalError("no check named " + name);
  }
};

namespace detail {

inline std::string vecStr(const std::vector<Rational> &v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + v[i].str();
  return s + ")";
}

inline std::vector<Rational> scaled(const std::vector<Rational> &v,
                                    const Rational &k) {
  std::vector<Rational> out;
  out.reserve(v.size());
  for (const auto &x : v)
    out.push_back(x * k);
  return out;
}

inline SchedulerConfig restrictedConfig(SolveMode mode) {
  SchedulerConfig c;
  c.mode = mode;
  c.allowSkew = false;
  c.allowShift = false;
  return c;
}

/// The first hyperplane of every band: outer-parallel flag per band.
inline std::vector<bool> bandLeadParallel(const ScheduleResult &r) {
  std::vector<bool> out;
  std::optional<std::size_t> last;
  for (const auto &tr : r.trace) {
    if (last && *last == tr.band)
      continue;
    last = tr.band;
    out.push_back(tr.outerParallel);
  }
  return out;
}

template <class T> std::string listStr(const std::vector<T> &v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i)
    os << (i ? "," : "") << v[i];
  os << "]";
  return os.str();
}

} // namespace detail

struct SuiteOptions {
  Int gridBound = 3;
  std::size_t maxOracleVars = 16;
  std::size_t minScalingSystems = 50;
};

/// Runs every check over the programs.
inline SuiteReport checkSuite(const std::vector<CorpusEntry> &corpus,
                                const SuiteOptions &opts = {}) {
  CheckResult lpExact{"lp-exact", "LP optima are exact rationals satisfying every row", 0, 0, {}, {}};
  CheckResult scaling{"scaling-invariance", "k * LP optimum satisfies all rows for k in {2, 7/3, 10}", 0, 0, {}, {}};
  CheckResult objectiveLift{"objective-lift", "c_s * LP objective (u, w) equals the ILP objective", 0, 0, {}, {}};
  CheckResult rowLift{"row-lift", "c_s * LP row equals the brute-force integer lexmin row", 0, 0, {}, {}};
  CheckResult ilpOracle{"ilp-oracle", "branch-and-bound agrees with brute force inside the grid", 0, 0, {}, {}};
  CheckResult parallelAgree{"parallel-hyperplane-agreement", "per band, LP finds u=w=0 iff ILP does", 0, 0, {}, {}};
  CheckResult bandAgree{"band-size-agreement", "per band, LP and ILP find the same number of rows", 0, 0, {}, {}};
  CheckResult restrictedAgree{"restricted-equality", "no skew/shift: LP raw * c_s equals ILP, u and w included", 0, 0, {}, {}};
  CheckResult skewLegal{"skew-legality", "skew output violates no dependence", 0, 0, {}, {}};
  CheckResult skewNoop{"skew-noop", "skew is a bitwise no-op on tileable input", 0, 0, {}, {}};
  CheckResult dfpLegalRank{"dfp-legal-full-rank", "final dfp transform is legal with full row rank", 0, 0, {}, {}};
  CheckResult jointFusion{"pairwise-joint-fusion", "pairwise-fusable dimension sets are jointly fusable with shifts", 0, 0, {}, {}};
  CheckResult sccColorable{"scc-colorable", "every isolated SCC has a colorable dimension", 0, 0, {}, {}};
  CheckResult fusionTransitive{"fusion-transitivity", "fusion and permutability of dimensions is transitive", 0, 0, {}, {}};

  struct LpSystem {
    std::string id;
    const ConstraintSystem *system;
    const std::vector<Rational> *values;
  };

  for (const auto &entry : corpus) {
    const Program &prog = entry.program;
    const std::string &id = entry.name;
    DDG ddg = computeDependences(prog);
    std::vector<std::pair<std::string, ScheduleResult>> keep;

    // Scheduler runs in both modes.
    SchedulerConfig lpCfg, ilpCfg;
    lpCfg.mode = SolveMode::LP;
    ilpCfg.mode = SolveMode::ILP;
    ScheduleResult lp = schedule(prog, ddg, lpCfg);
    std::optional<ScheduleResult> ilp;
    try {
      ilp = schedule(prog, ddg, ilpCfg);
    } catch (const ResourceLimitError &e) {
      parallelAgree.notes.push_back(id + ": ILP node limit hit, skipped");
    }

    std::vector<LpSystem> systems;
    for (std::size_t k = 0; k < lp.trace.size(); ++k)
      systems.push_back({id + "/pluto-lp/level" + std::to_string(lp.trace[k].level),
                         &lp.trace[k].solution.system, &lp.trace[k].solution.raw});

    // Lifted LP levels against the integer oracle.
    for (const auto &tr : lp.trace) {
      const auto &sol = tr.solution;
      std::string where = id + "/level" + std::to_string(tr.level);
      if (sol.system.numVars() > opts.maxOracleVars) {
        ++rowLift.skipped;
        ++objectiveLift.skipped;
        continue;
      }
      LPProblem p;
      p.system = sol.system;
      p.objectives = unitObjectives(sol.order, sol.system.numVars());
      p.integral = sol.order;
      LPResult ilpRes = solveILP(p);
      if (!ilpRes.optimal()) {
        ++rowLift.skipped;
        ++objectiveLift.skipped;
        continue;
      }
      bool inGrid = std::all_of(ilpRes.values.begin(), ilpRes.values.end(),
                                [&](const Rational &v) {
                                  return v <= Rational(opts.gridBound);
                                });
      if (!inGrid) {
        ++rowLift.skipped;
        ++objectiveLift.skipped;
        rowLift.notes.push_back(where + ": ILP optimum outside the grid, skipped");
        continue;
      }
      auto oracle = bruteForceLexmin(sol.system, opts.gridBound, sol.order);
      ++ilpOracle.checked;
      if (!oracle || *oracle != ilpRes.values) {
        ilpOracle.fail(where + ": solveILP " + detail::vecStr(ilpRes.values) +
                       " vs oracle " + (oracle ? detail::vecStr(*oracle) : "none"));
        continue;
      }
      const std::vector<Rational> &lifted = sol.scaled;
      ++rowLift.checked;
      if (lifted != *oracle)
        rowLift.fail(where + ": c_s=" + sol.scale.str() + ", scaled LP " +
                  detail::vecStr(lifted) + " vs oracle " + detail::vecStr(*oracle));
      ++objectiveLift.checked;
      bool objEq = true;
      for (std::size_t v : sol.layout.uVars())
        objEq = objEq && lifted[v] == (*oracle)[v];
      objEq = objEq && lifted[sol.layout.w()] == (*oracle)[sol.layout.w()];
      if (!objEq)
        objectiveLift.fail(where + ": c_s*(u,w) differs from the ILP optimum");
    }

    // Band-wise LP/ILP differential.
    if (ilp) {
      auto a = detail::bandLeadParallel(lp), b = detail::bandLeadParallel(*ilp);
      ++parallelAgree.checked;
      if (a != b)
        parallelAgree.fail(id + ": LP outer-parallel per band " + detail::listStr(a) +
                  " vs ILP " + detail::listStr(b));
      ++bandAgree.checked;
      if (lp.bandRowCounts != ilp->bandRowCounts)
        bandAgree.fail(id + ": LP rows per band " + detail::listStr(lp.bandRowCounts) +
                  " vs ILP " + detail::listStr(ilp->bandRowCounts));
    }

    // Restricted configuration: no skew, no shift.
    std::optional<ScheduleResult> rlp, rilp;
    try {
      rlp = schedule(prog, ddg, detail::restrictedConfig(SolveMode::LP));
      rilp = schedule(prog, ddg, detail::restrictedConfig(SolveMode::ILP));
    } catch (const InternalError &) {
      ++restrictedAgree.skipped;
      restrictedAgree.notes.push_back(id + ": needs skewing or shifting, not in the subset");
      rlp.reset();
      rilp.reset();
    }
    if (rlp && rilp) {
      ++restrictedAgree.checked;
      if (rlp->trace.size() != rilp->trace.size()) {
        restrictedAgree.fail(id + ": different number of levels");
      } else {
        for (std::size_t k = 0; k < rlp->trace.size(); ++k) {
          const auto &l = rlp->trace[k].solution;
          const auto &i = rilp->trace[k].solution;
          auto lifted = detail::scaled(l.raw, l.scale);
          if (lifted != i.raw)
            restrictedAgree.fail(id + "/level" + std::to_string(rlp->trace[k].level) +
                      ": c_s*LP " + detail::vecStr(lifted) + " vs ILP " +
                      detail::vecStr(i.raw));
        }
      }
      for (std::size_t k = 0; k < rlp->trace.size(); ++k)
        systems.push_back({id + "/restricted-lp/level" +
                               std::to_string(rlp->trace[k].level),
                           &rlp->trace[k].solution.system,
                           &rlp->trace[k].solution.raw});
    }

    // dfp pipeline.
    FarkasCache cache(prog);
    ColoringResult col = permuteAndFuse(prog, ddg, cache);
    LevelSolver replay(prog, ddg, cache);
    for (const auto &lv : col.permutation.levels)
      replay.apply(lv);
    for (std::size_t k = 0; k < replay.solutions().size(); ++k)
      systems.push_back({id + "/scale-shift/" + std::to_string(k),
                         &replay.solutions()[k].system,
                         &replay.solutions()[k].raw});
    AffineTransform scaledT = scaleAndShift(prog, ddg, col.permutation, cache);
    SkewResult skew = introduceSkew(prog, ddg, scaledT);

    ++skewLegal.checked;
    if (auto rep = checkLegality(prog, ddg, skew.transform); !rep.ok())
      skewLegal.fail(id + ": " + rep.violations.front().message + " on " +
                rep.violations.front().src + "->" + rep.violations.front().dst);
    bool tileable = true;
    for (std::size_t l = 0; l < scaledT.numLevels() && tileable; ++l) {
      if (scaledT.levelKinds[l] != LevelKind::Loop)
        continue;
      auto considered = detail::consideredDeps(prog, ddg.edges(), scaledT, l);
      tileable = !detail::hasNegativeComponent(prog, ddg.edges(), considered,
                                               scaledT, l);
    }
    if (tileable) {
      ++skewNoop.checked;
      if (!(skew.transform == scaledT))
        skewNoop.fail(id + ": skew changed a tileable transform");
    } else {
      ++skewNoop.skipped;
    }
    ++dfpLegalRank.checked;
    {
      auto rep = checkLegality(prog, ddg, skew.transform);
      if (!rep.ok())
        dfpLegalRank.fail(id + ": final transform violates " + rep.violations.front().src +
                   "->" + rep.violations.front().dst);
      if (!fullRank(prog, skew.transform))
        dfpLegalRank.fail(id + ": final transform is not full rank");
    }

    // Each SCC on its own has a colorable dimension.
    for (const auto &scc : ddg.sccs().components) {
      std::vector<DependencePolyhedron> internal;
      for (const auto &d : ddg.edges())
        if (std::find(scc.begin(), scc.end(), d.src) != scc.end() &&
            std::find(scc.begin(), scc.end(), d.dst) != scc.end())
          internal.push_back(d);
      DDG sub(prog.statements.size(), internal);
      FusionConflictGraph g = buildFCG(prog, sub, cache);
      Coloring c{std::vector<std::optional<std::size_t>>(g.numVertices()), 1};
      detail::SccColorer colorer(prog, g, sub, c, 0);
      ++sccColorable.checked;
      if (!colorer.run(scc)) {
        std::string members;
        for (std::size_t s : scc)
          members += prog.statements[s].id + " ";
        sccColorable.fail(id + ": SCC { " + members + "} has no colorable dimension");
      }
    }

    // Pairwise feasibility implies joint feasibility.
    const std::size_t n = prog.statements.size();
    auto pairOk = [&](std::size_t s, std::size_t i, std::size_t t, std::size_t j,
                      const FcgOptions &o) {
      return jointlyFusable(prog, ddg, {{s, i}, {t, j}}, cache, o);
    };
    for (bool param : {false, true}) {
      FcgOptions o;
      o.parametricShift = param;
      for (std::size_t i = 0; i < prog.maxDim(); ++i) {
        std::vector<std::size_t> set;
        for (std::size_t s = 0; s < n; ++s)
          if (prog.statements[s].dim() > i)
            set.push_back(s);
        if (set.size() < 2)
          continue;
        bool allPairs = true;
        for (std::size_t a = 0; a < set.size() && allPairs; ++a)
          for (std::size_t b = a + 1; b < set.size() && allPairs; ++b)
            allPairs = pairOk(set[a], i, set[b], i, o);
        if (!allPairs)
          continue;
        std::vector<std::pair<std::size_t, std::size_t>> pins;
        for (std::size_t s : set)
          pins.emplace_back(s, i);
        ++jointFusion.checked;
        if (!jointlyFusable(prog, ddg, pins, cache, o))
          jointFusion.fail(id + ": dimension " + std::to_string(i) +
                     " pairwise fusable but not jointly" +
                     (param ? " (parametric shifts)" : ""));
      }
    }
    if (tileable) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c) {
            if (!(a < b && b < c))
              continue;
            const auto &A = prog.statements[a], &B = prog.statements[b],
                       &C = prog.statements[c];
            for (std::size_t i = 0; i < A.dim(); ++i)
              for (std::size_t j = 0; j < B.dim(); ++j)
                for (std::size_t k = 0; k < C.dim(); ++k) {
                  // A direct a-c conflict is an FCG edge, not a transitivity
                  // failure, so all three pairs are hypotheses.
                  if (!pairOk(a, i, b, j, {}) || !pairOk(b, j, c, k, {}) ||
                      !pairOk(a, i, c, k, {}))
                    continue;
                  ++fusionTransitive.checked;
                  if (!jointlyFusable(prog, ddg, {{a, i}, {b, j}, {c, k}}, cache))
                    fusionTransitive.fail(id + ": " + A.id + "." + A.domain.iterators[i] +
                               ", " + B.id + "." + B.domain.iterators[j] + ", " +
                               C.id + "." + C.domain.iterators[k] +
                               " pairwise fusable but not jointly");
                }
          }
    } else {
      ++fusionTransitive.skipped;
    }

    // Exactness and scaling over every LP system gathered for this program.
    static const Rational factors[] = {Rational(2), Rational(7, 3), Rational(10)};
    for (const auto &sys : systems) {
      ++lpExact.checked;
      if (!sys.system->isSatisfiedBy(*sys.values))
        lpExact.fail(sys.id + ": LP optimum does not satisfy its own system");
      ++scaling.checked;
      for (const auto &k : factors)
        if (!sys.system->isSatisfiedBy(detail::scaled(*sys.values, k)))
          scaling.fail(sys.id + ": scaling by " + k.str() + " violates a row");
    }
  }

  if (scaling.checked < opts.minScalingSystems)
    scaling.fail("only " + std::to_string(scaling.checked) +
              " LP systems collected, need " +
              std::to_string(opts.minScalingSystems));

  SuiteReport rep;
  for (auto *r : {&lpExact, &scaling, &objectiveLift, &rowLift, &ilpOracle, &parallelAgree, &bandAgree, &restrictedAgree,
                  &skewLegal, &skewNoop, &dfpLegalRank, &jointFusion, &sccColorable, &fusionTransitive})
    rep.results.push_back(std::move(*r));
  return rep;
}

inline nlohmann::json toJson(const SuiteReport &rep) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &r : rep.results)
    out.push_back({{"name", r.name},
                   {"claim", r.claim},
                   {"status", toString(r.status())},
                   {"checked", r.checked},
                   {"skipped", r.skipped},
                   {"failures", r.failures},
                   {"notes", r.notes}});
  return {{"ok", rep.ok()}, {"results", out}};
}

inline std::string summary(const SuiteReport &rep) {
  std::ostringstream os;
  for (const auto &r : rep.results) {
    os << toString(r.status()) << "  " << r.name << "  (" << r.checked
       << " checked, " << r.skipped << " skipped)  " << r.claim << "\n";
    for (const auto &f : r.failures)
      os << "      " << f << "\n";
  }
  return os.str();
}

} // namespace polysched
