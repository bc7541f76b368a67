#pragma once

// Iterative hyperplane search: the scheduling ILP and its rational relaxation.

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/farkas.hpp"
#include "polysched/model.hpp"
#include "polysched/ratlp.hpp"
#include "polysched/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

enum class SolveMode { ILP, LP };

inline const char *toString(SolveMode m) {
  return m == SolveMode::ILP ? "ilp" : "lp";
}

struct SchedulerConfig {
  SolveMode mode = SolveMode::LP;
  bool allowParametricShift = true;
  bool allowShift = true;
  bool allowSkew = true;
  /// Distribute weakly connected statement groups at the outermost level.
  bool separateComponents = true;
  LexminMode lexmin = LexminMode::Staged;
  std::size_t nodeLimit = 100000;

  [[nodiscard]] LayoutOptions layoutOptions() const {
    return {allowShift && allowParametricShift, allowShift};
  }
};

/// Integer basis of the null space of `rows` (each of length `dim`).
inline std::vector<std::vector<Rational>>
nullSpaceBasis(std::vector<std::vector<Rational>> rows, std::size_t dim) {
  std::vector<std::size_t> pivotCol;
  std::size_t r = 0;
  for (std::size_t c = 0; c < dim && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && rows[p][c].isZero())
      ++p;
    if (p == rows.size())
      continue;
    std::swap(rows[p], rows[r]);
    Rational inv = Rational(1) / rows[r][c];
    for (auto &x : rows[r])
      x *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c].isZero())
        continue;
      Rational f = rows[i][c];
      for (std::size_t k = 0; k < dim; ++k)
        rows[i][k] -= f * rows[r][k];
    }
    pivotCol.push_back(c);
    ++r;
  }
  std::vector<bool> isPivot(dim, false);
  for (std::size_t c : pivotCol)
    isPivot[c] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t f = 0; f < dim; ++f) {
    if (isPivot[f])
      continue;
    std::vector<Rational> v(dim);
    v[f] = 1;
    for (std::size_t i = 0; i < pivotCol.size(); ++i)
      v[pivotCol[i]] = -rows[i][f];
    mpz_class l = 1;
    for (const auto &x : v)
      l = lcm(l, x.denominator());
    Rational scale = fromMpz(l);
    for (auto &x : v)
      x *= scale;
    basis.push_back(std::move(v));
  }
  return basis;
}

struct OrthoBasis {
  /// perStatement[s] spans the orthogonal complement of the iterator parts
  /// of the rows already found for statement s.
  std::vector<std::vector<std::vector<Rational>>> perStatement;
};

/// Null-space basis of a statement's prior rows, each vector oriented so its
/// component sum is non-negative (first non-zero entry positive on ties).
inline std::vector<std::vector<Rational>>
buildOrthoBasis(const std::vector<Hyperplane> &priorRows, std::size_t dim) {
  std::vector<std::vector<Rational>> m;
  for (const auto &h : priorRows)
    m.push_back(iteratorPart(h, dim));
  auto basis = nullSpaceBasis(std::move(m), dim);
  for (auto &a : basis) {
    Rational sum;
    for (const auto &x : a)
      sum += x;
    int sign = sum.sign();
    if (sign == 0)
      for (const auto &x : a)
        if (!x.isZero()) {
          sign = x.sign();
          break;
        }
    if (sign < 0)
      for (auto &x : a)
        x = -x;
  }
  return basis;
}

inline OrthoBasis buildOrthoBasis(const AffineTransform &t, const Program &prog) {
  OrthoBasis b;
  for (std::size_t s = 0; s < prog.statements.size(); ++s)
    b.perStatement.push_back(buildOrthoBasis(t.rows[s], prog.statements[s].dim()));
  return b;
}

struct HyperplaneSolution {
  CoefficientLayout layout;
  ConstraintSystem system;
  std::vector<std::size_t> order; // lexmin priority
  std::vector<Rational> raw;      // solver output
  std::vector<Rational> scaled;   // integral
  Rational scale = 1;
  std::vector<Hyperplane> rows; // scaled, one per program statement

  [[nodiscard]] bool outerParallel() const {
    for (std::size_t v : layout.uVars())
      if (!raw[v].isZero())
        return false;
    return raw[layout.w()].isZero();
  }
};

namespace detail {

/// Legality dependences (indices into ddg.edges()) that are still live.
inline std::vector<std::size_t> liveLegalityDeps(const DDG &ddg) {
  std::vector<std::size_t> out;
  for (std::size_t e : ddg.active())
    if (ddg.edges()[e].constrainsLegality())
      out.push_back(e);
  return out;
}

/// Variable groups of the layout, one per weakly connected statement set
/// under `deps`.
inline std::vector<std::vector<std::size_t>>
componentGroups(const CoefficientLayout &layout, const DDG &ddg,
                const std::vector<std::size_t> &deps) {
  const std::size_t n = ddg.numStatements();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e : deps) {
    const auto &d = ddg.edges()[e];
    if (layout.has(d.src) && layout.has(d.dst))
      parent[find(d.src)] = find(d.dst);
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, SIZE_MAX);
  for (std::size_t s : layout.statements()) {
    std::size_t r = find(s);
    if (slot[r] == SIZE_MAX) {
      slot[r] = groups.size();
      groups.emplace_back();
    }
    auto vars = layout.statementVars(s);
    groups[slot[r]].insert(groups[slot[r]].end(), vars.begin(), vars.end());
  }
  return groups;
}

inline std::optional<HyperplaneSolution>
solveLayout(CoefficientLayout layout, ConstraintSystem sys, const Program &prog,
            const DDG &ddg, const std::vector<std::size_t> &deps,
            const SchedulerConfig &cfg) {
  LPProblem p;
  p.system = sys;
  std::vector<std::size_t> order = layout.lexOrder();
  p.objectives = unitObjectives(order, layout.numVars());
  p.mode = cfg.lexmin;
  p.nodeLimit = cfg.nodeLimit;
  LPResult r;
  if (cfg.mode == SolveMode::ILP) {
    p.integral = order;
    r = solveILP(p);
  } else {
    r = solveLexmin(p);
  }
  if (r.status == LPStatus::Unbounded)
    throw InternalError("scheduling LP is unbounded");
  if (!r.optimal())
    return std::nullopt;
  HyperplaneSolution sol{std::move(layout), std::move(sys), std::move(order),
                         std::move(r.values), {}, Rational(1), {}};
  auto groups = componentGroups(sol.layout, ddg, deps);
  std::vector<std::size_t> shared = sol.layout.uVars();
  shared.push_back(sol.layout.w());
  ScaledAssignment sa = scaleToIntegral(sol.raw, groups, shared);
  sol.scaled = std::move(sa.values);
  sol.scale = sa.scale;
  for (std::size_t s = 0; s < prog.statements.size(); ++s) {
    if (sol.layout.has(s)) {
      sol.rows.push_back(sol.layout.extract(s, sol.scaled));
    } else {
      sol.rows.emplace_back(prog.statements[s].dim() + prog.numParams() + 1,
                            Rational(0));
    }
  }
  return sol;
}

inline std::vector<std::size_t> allStatements(const Program &prog) {
  std::vector<std::size_t> v(prog.statements.size());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

} // namespace detail

/// One level where statement s may only use iterator dims[s] (coefficient at
/// least 1) or, when dims[s] is empty, no iterator at all.
inline std::optional<HyperplaneSolution>
solveFixedDimensions(const Program &prog, const DDG &ddg,
                     const std::vector<std::size_t> &deps,
                     const std::vector<std::optional<std::size_t>> &dims,
                     const SchedulerConfig &cfg, FarkasCache &cache,
                     std::optional<std::vector<std::size_t>> statements = {}) {
  std::vector<std::size_t> stmts =
      statements ? *statements : detail::allStatements(prog);
  std::vector<std::vector<bool>> masks;
  for (std::size_t s : stmts) {
    std::vector<bool> m(prog.statements[s].dim(), false);
    if (dims[s])
      m[*dims[s]] = true;
    masks.push_back(std::move(m));
  }
  CoefficientLayout layout(prog, stmts, masks, cfg.layoutOptions());
  ConstraintSystem sys = layout.emptySystem();
  for (std::size_t e : deps)
    cache.addRows(ddg.edges()[e], layout, sys, true);
  for (std::size_t s : stmts)
    if (dims[s])
      sys.addLowerBoundRow(layout.c(s, *dims[s]), Rational(1));
  return detail::solveLayout(std::move(layout), std::move(sys), prog, ddg, deps,
                             cfg);
}

/// Next hyperplane for every statement, legal for `deps` and linearly
/// independent of the rows already in `prior`; nullopt when none exists.
inline std::optional<HyperplaneSolution>
findHyperplane(const Program &prog, const DDG &ddg,
               const std::vector<std::size_t> &deps, const AffineTransform &prior,
               const SchedulerConfig &cfg, FarkasCache &cache) {
  const std::size_t n = prog.statements.size();
  std::vector<bool> complete(n);
  for (std::size_t s = 0; s < n; ++s)
    complete[s] = iteratorRank(prior, s, prog.statements[s].dim()) ==
                  prog.statements[s].dim();

  if (!cfg.allowSkew) {
    // Each incomplete statement takes exactly one unused loop dimension.
    std::vector<std::vector<std::size_t>> choices(n);
    for (std::size_t s = 0; s < n; ++s) {
      if (complete[s])
        continue;
      const std::size_t m = prog.statements[s].dim();
      std::size_t base = iteratorRank(prior, s, m);
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<std::vector<Rational>> rows;
        for (const auto &h : prior.rows[s])
          rows.push_back(iteratorPart(h, m));
        std::vector<Rational> e(m);
        e[k] = 1;
        rows.push_back(std::move(e));
        if (rank(std::move(rows)) > base)
          choices[s].push_back(k);
      }
      if (choices[s].empty())
        return std::nullopt;
    }
    std::vector<std::size_t> pick(n, 0);
    std::size_t tried = 0;
    for (;;) {
      if (++tried > cfg.nodeLimit)
        throw ResourceLimitError("dimension enumeration limit exceeded",
                                 cfg.nodeLimit);
      std::vector<std::optional<std::size_t>> dims(n);
      for (std::size_t s = 0; s < n; ++s)
        if (!complete[s])
          dims[s] = choices[s][pick[s]];
      if (auto sol = solveFixedDimensions(prog, ddg, deps, dims, cfg, cache))
        return sol;
      std::size_t s = n;
      while (s-- > 0) {
        if (complete[s])
          continue;
        if (++pick[s] < choices[s].size())
          break;
        pick[s] = 0;
      }
      if (s == SIZE_MAX)
        return std::nullopt;
    }
  }

  CoefficientLayout layout(prog, detail::allStatements(prog), cfg.layoutOptions());
  ConstraintSystem sys = layout.emptySystem();
  for (std::size_t e : deps)
    cache.addRows(ddg.edges()[e], layout, sys, true);
  // Independence candidates per statement: the summed basis first, then
  // each basis vector in both orientations.
  std::vector<std::vector<std::vector<Rational>>> candidates(n);
  std::size_t variants = 1;
  for (std::size_t s = 0; s < n; ++s) {
    if (complete[s])
      continue;
    const std::size_t m = prog.statements[s].dim();
    std::vector<Rational> triv(layout.numVars());
    for (std::size_t i = 0; i < m; ++i)
      triv[layout.c(s, i)] = 1;
    sys.addInequality(triv, Rational(-1));
    if (prior.rows[s].empty())
      continue;
    auto basis = buildOrthoBasis(prior.rows[s], m);
    auto lift = [&](const std::vector<Rational> &a, int sign) {
      std::vector<Rational> row(layout.numVars());
      for (std::size_t i = 0; i < m; ++i)
        row[layout.c(s, i)] = Rational(sign) * a[i];
      return row;
    };
    std::vector<Rational> sum(m);
    for (const auto &a : basis)
      for (std::size_t i = 0; i < m; ++i)
        sum[i] += a[i];
    auto &cand = candidates[s];
    cand.push_back(lift(sum, 1));
    for (const auto &a : basis)
      for (int sign : {1, -1}) {
        auto row = lift(a, sign);
        if (std::find(cand.begin(), cand.end(), row) == cand.end())
          cand.push_back(std::move(row));
      }
    variants = std::max(variants, cand.size());
  }
  for (std::size_t v = 0; v < variants; ++v) {
    ConstraintSystem trial = sys;
    for (std::size_t s = 0; s < n; ++s)
      if (!candidates[s].empty())
        trial.addInequality(candidates[s][std::min(v, candidates[s].size() - 1)],
                            Rational(-1));
    if (auto sol = detail::solveLayout(layout, std::move(trial), prog, ddg, deps,
                                       cfg))
      return sol;
  }
  return std::nullopt;
}

struct LevelTrace {
  std::size_t level = 0;
  std::size_t band = 0;
  bool outerParallel = false;
  HyperplaneSolution solution;
};

struct ScheduleResult {
  AffineTransform transform;
  DDG ddg;
  std::vector<LevelTrace> trace;
  /// Loop rows found per band, in band order (empty bands omitted).
  std::vector<std::size_t> bandRowCounts;
};

namespace detail {

inline Hyperplane constantRow(const Program &prog, std::size_t s,
                              const Rational &value) {
  Hyperplane h(prog.statements[s].dim() + prog.numParams() + 1);
  h.back() = value;
  return h;
}

/// Appends a scalar level that orders statement groups; groups[k] gets k.
inline void appendOrderingLevel(AffineTransform &t, const Program &prog,
                                const std::vector<std::vector<std::size_t>> &groups,
                                bool recordCut) {
  std::vector<Hyperplane> rows(prog.statements.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t s : groups[g])
      rows[s] = constantRow(prog, s, Rational(static_cast<Int>(g)));
  if (recordCut)
    t.cuts.push_back({t.numLevels(), groups});
  appendLevel(t, std::move(rows), LevelKind::Scalar);
}

/// Splits the statements between the lowest pair of SCCs joined by a live
/// legality dependence; empty when no such pair exists.
inline std::vector<std::vector<std::size_t>> lowestSccCut(const DDG &ddg) {
  const auto &scc = ddg.sccs();
  std::size_t k = SIZE_MAX;
  for (std::size_t e : liveLegalityDeps(ddg)) {
    const auto &d = ddg.edges()[e];
    std::size_t a = scc.componentOf[d.src], b = scc.componentOf[d.dst];
    if (a != b)
      k = std::min(k, std::max(a, b));
  }
  if (k == SIZE_MAX)
    return {};
  std::vector<std::vector<std::size_t>> groups(2);
  for (std::size_t c = 0; c < scc.components.size(); ++c)
    for (std::size_t s : scc.components[c])
      groups[c < k ? 0 : 1].push_back(s);
  for (auto &g : groups)
    std::sort(g.begin(), g.end());
  return groups;
}

/// Statements grouped by SCC ordinal over the live inter-statement legality
/// dependences; empty when every such dependence is already ordered
/// instance-wise by the transform.
inline std::vector<std::vector<std::size_t>>
unorderedSccGroups(const Program &prog, const DDG &ddg, const AffineTransform &t) {
  std::vector<std::pair<std::size_t, std::size_t>> arcs;
  bool unordered = false;
  for (std::size_t e : liveLegalityDeps(ddg)) {
    const auto &d = ddg.edges()[e];
    if (d.src == d.dst)
      continue;
    arcs.emplace_back(d.src, d.dst);
    if (!unordered && !dependenceStatus(d, prog, t).satisfiedAt)
      unordered = true;
  }
  if (!unordered)
    return {};
  return sccDecompose(prog.statements.size(), arcs).components;
}

} // namespace detail

/// Completes a transform with a final scalar level when statements that are
/// fused on every level still have unordered instance pairs.
inline void appendTrailingOrder(AffineTransform &t, const Program &prog,
                                const DDG &ddg) {
  auto groups = detail::unorderedSccGroups(prog, ddg, t);
  if (groups.size() > 1)
    detail::appendOrderingLevel(t, prog, groups, false);
}

inline ScheduleResult schedule(const Program &prog, const DDG &input,
                               const SchedulerConfig &cfg) {
  const std::size_t n = prog.statements.size();
  ScheduleResult res{emptyTransform(n), input, {}, {}};
  AffineTransform &t = res.transform;
  DDG &ddg = res.ddg;
  if (n == 0)
    return res;
  FarkasCache cache(prog);

  if (cfg.separateComponents) {
    std::vector<DependencePolyhedron> live;
    for (std::size_t e : detail::liveLegalityDeps(ddg))
      live.push_back(ddg.edges()[e]);
    auto comps = DDG(n, live).connectedComponents();
    if (comps.size() > 1) {
      detail::appendOrderingLevel(t, prog, comps, true);
      ddg = removeSatisfiedDeps(ddg, prog, t, t.numLevels());
    }
  }

  auto allComplete = [&] {
    for (std::size_t s = 0; s < n; ++s)
      if (iteratorRank(t, s, prog.statements[s].dim()) < prog.statements[s].dim())
        return false;
    return true;
  };

  std::size_t band = 0, bandRows = 0, bandStart = t.numLevels();
  auto closeBand = [&] {
    if (bandRows > 0)
      res.bandRowCounts.push_back(bandRows);
    bandRows = 0;
    ++band;
    bandStart = t.numLevels();
  };

  std::size_t guard = 0, totalDim = 0;
  for (const auto &s : prog.statements)
    totalDim += s.dim();
  const std::size_t guardLimit = 4 * (totalDim + n + ddg.edges().size() + 1);
  while (!allComplete()) {
    if (++guard > guardLimit)
      throw InternalError("scheduler made no progress");
    auto deps = detail::liveLegalityDeps(ddg);
    if (auto sol = findHyperplane(prog, ddg, deps, t, cfg, cache)) {
      appendLevel(t, sol->rows, LevelKind::Loop);
      res.trace.push_back({t.numLevels() - 1, band, sol->outerParallel(),
                           std::move(*sol)});
      ++bandRows;
      continue;
    }
    if (t.numLevels() > bandStart) {
      std::size_t before = deps.size();
      ddg = removeSatisfiedDeps(ddg, prog, t, t.numLevels());
      closeBand();
      if (detail::liveLegalityDeps(ddg).size() < before)
        continue;
    }
    auto groups = detail::lowestSccCut(ddg);
    if (groups.empty())
      throw InternalError("no hyperplane, no removable dependence and no cut "
                          "available");
    detail::appendOrderingLevel(t, prog, groups, true);
    ddg = removeSatisfiedDeps(ddg, prog, t, t.numLevels());
    closeBand();
  }
  closeBand();
  ddg = removeSatisfiedDeps(ddg, prog, t, t.numLevels());
  appendTrailingOrder(t, prog, ddg);
  annotateTransform(t, prog, input.edges());
  return res;
}

} // namespace polysched
