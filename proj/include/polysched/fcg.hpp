#pragma once

// Fusion conflict graph: one vertex per statement dimension, an edge wherever
// two dimensions cannot be fused and permuted to the outermost level
// together. Convex SCC-driven coloring turns it into a loop permutation.

#include "polysched/errors.hpp"
#include "polysched/farkas.hpp"
#include "polysched/model.hpp"
#include "polysched/pluto.hpp"
#include "polysched/ratlp.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

struct FcgVertex {
  std::size_t stmt = 0;
  std::size_t dim = 0;

  friend bool operator==(const FcgVertex &, const FcgVertex &) = default;
};

struct FcgEdge {
  std::size_t a = 0; // a <= b; a == b is a self-loop
  std::size_t b = 0;
  bool intraStatement = false;

  friend auto operator<=>(const FcgEdge &, const FcgEdge &) = default;
};

class FusionConflictGraph {
public:
  FusionConflictGraph() = default;
  explicit FusionConflictGraph(const Program &prog) {
    for (std::size_t s = 0; s < prog.statements.size(); ++s) {
      vertexOf_.emplace_back();
      for (std::size_t i = 0; i < prog.statements[s].dim(); ++i) {
        vertexOf_.back().push_back(vertices_.size());
        vertices_.push_back({s, i});
      }
    }
    adj_.assign(vertices_.size(), std::vector<bool>(vertices_.size(), false));
  }

  [[nodiscard]] std::size_t numVertices() const { return vertices_.size(); }
  [[nodiscard]] const std::vector<FcgVertex> &vertices() const { return vertices_; }
  [[nodiscard]] std::size_t vertex(std::size_t stmt, std::size_t dim) const {
    return vertexOf_.at(stmt).at(dim);
  }
  [[nodiscard]] std::size_t stmtOf(std::size_t v) const { return vertices_[v].stmt; }
  [[nodiscard]] bool adjacent(std::size_t a, std::size_t b) const { return adj_[a][b]; }
  [[nodiscard]] bool selfLoop(std::size_t v) const { return adj_[v][v]; }

  /// Sorted edge list.
  [[nodiscard]] std::vector<FcgEdge> edges() const {
    std::vector<FcgEdge> out;
    for (std::size_t a = 0; a < vertices_.size(); ++a)
      for (std::size_t b = a; b < vertices_.size(); ++b)
        if (adj_[a][b])
          out.push_back({a, b, a != b && stmtOf(a) == stmtOf(b)});
    return out;
  }

  void addEdge(std::size_t a, std::size_t b) {
    adj_[a][b] = adj_[b][a] = true;
  }

  [[nodiscard]] std::string vertexName(const Program &prog, std::size_t v) const {
    const auto &st = prog.statements[vertices_[v].stmt];
    return st.id + "." + st.domain.iterators[vertices_[v].dim];
  }

private:
  std::vector<FcgVertex> vertices_;
  std::vector<std::vector<std::size_t>> vertexOf_;
  std::vector<std::vector<bool>> adj_;
};

struct FcgOptions {
  /// Parametric shifts make almost every pair fusable (a shift by N
  /// sequences the two loops), so they stay off unless asked for.
  bool parametricShift = false;
};

namespace detail {

inline bool fusable(const Program &prog, const DDG &ddg,
                    const std::vector<std::size_t> &deps,
                    const std::vector<std::pair<std::size_t, std::size_t>> &pins,
                    const FcgOptions &opts, FarkasCache &cache) {
  std::vector<std::size_t> stmts;
  for (auto [s, i] : pins)
    stmts.push_back(s);
  std::sort(stmts.begin(), stmts.end());
  stmts.erase(std::unique(stmts.begin(), stmts.end()), stmts.end());
  std::vector<std::vector<bool>> masks;
  for (std::size_t s : stmts)
    masks.emplace_back(prog.statements[s].dim(), false);
  for (auto [s, i] : pins) {
    auto k = static_cast<std::size_t>(
        std::find(stmts.begin(), stmts.end(), s) - stmts.begin());
    masks[k][i] = true;
  }
  CoefficientLayout layout(prog, stmts, masks, {opts.parametricShift, true});
  ConstraintSystem sys = layout.emptySystem();
  for (std::size_t e : deps)
    cache.addRows(ddg.edges()[e], layout, sys, true);
  for (auto [s, i] : pins)
    sys.addLowerBoundRow(layout.c(s, i), Rational(1));
  LPProblem p;
  p.system = std::move(sys);
  return solveLP(p).optimal();
}

/// Live dependences whose endpoints both lie in `stmts`.
inline std::vector<std::size_t> depsWithin(const DDG &ddg,
                                           const std::vector<std::size_t> &stmts) {
  std::vector<std::size_t> out;
  for (std::size_t e : ddg.active()) {
    const auto &d = ddg.edges()[e];
    bool a = std::find(stmts.begin(), stmts.end(), d.src) != stmts.end();
    bool b = std::find(stmts.begin(), stmts.end(), d.dst) != stmts.end();
    if (a && b)
      out.push_back(e);
  }
  return out;
}

} // namespace detail

/// Joint feasibility of fusing the pinned (statement, dimension) pairs at the
/// outermost level under every live dependence among those statements.
inline bool jointlyFusable(const Program &prog, const DDG &ddg,
                           const std::vector<std::pair<std::size_t, std::size_t>> &pins,
                           FarkasCache &cache, const FcgOptions &opts = {}) {
  std::vector<std::size_t> stmts;
  for (auto [s, i] : pins)
    stmts.push_back(s);
  return detail::fusable(prog, ddg, detail::depsWithin(ddg, stmts), pins, opts,
                         cache);
}

inline FusionConflictGraph buildFCG(const Program &prog, const DDG &ddg,
                                    FarkasCache &cache,
                                    const FcgOptions &opts = {}) {
  FusionConflictGraph g(prog);
  const std::size_t n = prog.statements.size();

  for (std::size_t s = 0; s < n; ++s) {
    auto intra = detail::depsWithin(ddg, {s});
    if (intra.empty())
      continue;
    for (std::size_t i = 0; i < prog.statements[s].dim(); ++i)
      if (!detail::fusable(prog, ddg, intra, {{s, i}}, opts, cache))
        g.addEdge(g.vertex(s, i), g.vertex(s, i));
  }

  std::set<std::pair<std::size_t, std::size_t>> connected;
  for (std::size_t e : ddg.active()) {
    const auto &d = ddg.edges()[e];
    if (d.src != d.dst)
      connected.insert(std::minmax(d.src, d.dst));
  }
  for (auto [s, t] : connected) {
    auto deps = detail::depsWithin(ddg, {s, t});
    for (std::size_t i = 0; i < prog.statements[s].dim(); ++i)
      for (std::size_t j = 0; j < prog.statements[t].dim(); ++j)
        if (!detail::fusable(prog, ddg, deps, {{s, i}, {t, j}}, opts, cache))
          g.addEdge(g.vertex(s, i), g.vertex(t, j));
  }

  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < prog.statements[s].dim(); ++i)
      for (std::size_t j = i + 1; j < prog.statements[s].dim(); ++j)
        g.addEdge(g.vertex(s, i), g.vertex(s, j));
  return g;
}

struct Coloring {
  std::vector<std::optional<std::size_t>> colorOf;
  std::size_t maxColors = 0;

  [[nodiscard]] std::size_t numColored() const {
    return static_cast<std::size_t>(
        std::count_if(colorOf.begin(), colorOf.end(),
                      [](const auto &c) { return c.has_value(); }));
  }
};

/// One level of the permutation skeleton: either a loop level where each
/// statement runs one original dimension (or none, once exhausted), or a
/// scalar level ordering statement groups.
struct PermutationLevel {
  LevelKind kind = LevelKind::Loop;
  std::vector<std::optional<std::size_t>> dims;
  std::vector<std::vector<std::size_t>> groups;
  /// Drop dependences satisfied by the outer levels before solving this one.
  bool refresh = false;
};

struct Permutation {
  std::vector<PermutationLevel> levels;
  std::vector<CutRecord> cuts;

  /// 0/1 matrices: one unit iterator row per loop level, constants for
  /// scalar levels.
  [[nodiscard]] AffineTransform matrices(const Program &prog) const {
    const std::size_t n = prog.statements.size();
    AffineTransform t = emptyTransform(n);
    for (const auto &lv : levels) {
      std::vector<Hyperplane> rows;
      for (std::size_t s = 0; s < n; ++s) {
        Hyperplane h(prog.statements[s].dim() + prog.numParams() + 1);
        if (lv.kind == LevelKind::Loop) {
          if (lv.dims[s])
            h[*lv.dims[s]] = 1;
        } else {
          for (std::size_t g = 0; g < lv.groups.size(); ++g)
            if (std::find(lv.groups[g].begin(), lv.groups[g].end(), s) !=
                lv.groups[g].end())
              h.back() = Rational(static_cast<Int>(g));
        }
        rows.push_back(std::move(h));
      }
      appendLevel(t, std::move(rows), lv.kind);
    }
    t.cuts = cuts;
    return t;
  }
};

/// Incremental solve of the permutation skeleton: scalar levels become
/// ordering rows, loop levels are solved with the scale/shift LP.
class LevelSolver {
public:
  LevelSolver(const Program &prog, DDG ddg, FarkasCache &cache)
      : prog_(&prog), ddg_(std::move(ddg)), cache_(&cache),
        t_(emptyTransform(prog.statements.size())) {
    cfg_.mode = SolveMode::LP;
  }

  [[nodiscard]] const DDG &ddg() const { return ddg_; }
  [[nodiscard]] const AffineTransform &transform() const { return t_; }
  AffineTransform &transform() { return t_; }

  /// Marks dependences satisfied by the levels so far; returns how many.
  std::size_t refresh() {
    std::size_t before = ddg_.active().size();
    ddg_ = removeSatisfiedDeps(ddg_, *prog_, t_, t_.numLevels());
    return before - ddg_.active().size();
  }

  void apply(const PermutationLevel &lv) {
    if (lv.refresh)
      refresh();
    if (lv.kind == LevelKind::Scalar) {
      detail::appendOrderingLevel(t_, *prog_, lv.groups, true);
      refresh();
      return;
    }
    auto deps = detail::liveLegalityDeps(ddg_);
    auto sol = solveFixedDimensions(*prog_, ddg_, deps, lv.dims, cfg_, *cache_);
    if (!sol)
      throw InternalError("scale/shift solve infeasible at level " +
                          std::to_string(t_.numLevels()));
    appendLevel(t_, sol->rows, LevelKind::Loop);
    solutions_.push_back(std::move(*sol));
  }

  /// Every loop-level LP solved so far, in order.
  [[nodiscard]] const std::vector<HyperplaneSolution> &solutions() const {
    return solutions_;
  }

private:
  const Program *prog_;
  DDG ddg_;
  FarkasCache *cache_;
  AffineTransform t_;
  SchedulerConfig cfg_;
  std::vector<HyperplaneSolution> solutions_;
};

struct ColoringResult {
  Coloring coloring;
  FusionConflictGraph fcg; // final graph after every rebuild
  DDG ddg;                 // with dependences satisfied by cuts/outer levels
  Permutation permutation;
  std::size_t rebuilds = 0;
};

namespace detail {

class SccColorer {
public:
  SccColorer(const Program &prog, const FusionConflictGraph &g, const DDG &ddg,
             Coloring &col, std::size_t color)
      : prog_(prog), g_(g), ddg_(ddg), col_(col), color_(color) {}

  /// Colors one vertex of every statement of `scc` that still has an
  /// uncolored dimension; lowest dimension first, backtracking inside the SCC.
  bool run(const std::vector<std::size_t> &scc) {
    todo_.clear();
    for (std::size_t s : scc)
      if (!hasColor(s, color_) && hasFreeDim(s))
        todo_.push_back(s);
    return search(0);
  }

private:
  [[nodiscard]] bool hasColor(std::size_t s, std::size_t c) const {
    for (std::size_t i = 0; i < prog_.statements[s].dim(); ++i)
      if (col_.colorOf[g_.vertex(s, i)] == c)
        return true;
    return false;
  }
  [[nodiscard]] bool hasFreeDim(std::size_t s) const {
    for (std::size_t i = 0; i < prog_.statements[s].dim(); ++i)
      if (!col_.colorOf[g_.vertex(s, i)])
        return true;
    return false;
  }

  [[nodiscard]] bool admissible(std::size_t v) const {
    if (col_.colorOf[v] || g_.selfLoop(v))
      return false;
    for (std::size_t u = 0; u < g_.numVertices(); ++u)
      if (u != v && col_.colorOf[u] == color_ && g_.adjacent(u, v))
        return false;
    return true;
  }

  /// Every live predecessor that can still take this color must have it.
  [[nodiscard]] bool convex(std::size_t s) const {
    for (std::size_t p : ddg_.predecessors(s)) {
      if (hasColor(p, color_))
        continue;
      if (!hasFreeDim(p))
        continue;
      bool pending = std::find(todo_.begin(), todo_.end(), p) != todo_.end();
      if (!pending)
        return false;
    }
    return true;
  }

  bool search(std::size_t k) {
    if (k == todo_.size()) {
      for (std::size_t s : todo_)
        if (!convex(s))
          return false;
      return true;
    }
    std::size_t s = todo_[k];
    if (!convex(s))
      return false;
    for (std::size_t i = 0; i < prog_.statements[s].dim(); ++i) {
      std::size_t v = g_.vertex(s, i);
      if (!admissible(v))
        continue;
      col_.colorOf[v] = color_;
      if (search(k + 1))
        return true;
      col_.colorOf[v].reset();
    }
    return false;
  }

  const Program &prog_;
  const FusionConflictGraph &g_;
  const DDG &ddg_;
  Coloring &col_;
  std::size_t color_;
  std::vector<std::size_t> todo_;
};

/// Rebuilds the graph over the solver's current dependences.
inline void rebuild(ColoringResult &res, const Program &prog,
                    const LevelSolver &solver, FarkasCache &cache,
                    const FcgOptions &opts) {
  res.fcg = buildFCG(prog, solver.ddg(), cache, opts);
  ++res.rebuilds;
}

} // namespace detail

/// Convex coloring, one color per loop level, outermost first.
inline ColoringResult colorFCG(const Program &prog, FusionConflictGraph fcg,
                               const DDG &ddg, std::size_t maxColors,
                               FarkasCache &cache, const FcgOptions &opts = {}) {
  ColoringResult res{{std::vector<std::optional<std::size_t>>(fcg.numVertices()),
                      maxColors},
                     std::move(fcg), ddg, {}, 0};
  LevelSolver solver(prog, ddg, cache);
  const std::size_t n = prog.statements.size();
  bool pendingRefresh = false;

  for (std::size_t c = 0; c < maxColors; ++c) {
    std::size_t sccIdx = 0;
    std::optional<std::size_t> retried;
    while (sccIdx < solver.ddg().sccs().components.size()) {
      const auto &sccs = solver.ddg().sccs().components;
      detail::SccColorer colorer(prog, res.fcg, solver.ddg(), res.coloring, c);
      if (colorer.run(sccs[sccIdx])) {
        ++sccIdx;
        continue;
      }
      if (retried && *retried == sccIdx)
        throw InternalError("coloring failed after rebuild and cut at color " +
                            std::to_string(c));
      retried = sccIdx;
      if (sccIdx == 0) {
        solver.refresh();
        pendingRefresh = true;
      } else {
        std::vector<std::vector<std::size_t>> groups(2);
        for (std::size_t k = 0; k < sccs.size(); ++k)
          for (std::size_t s : sccs[k])
            groups[k < sccIdx ? 0 : 1].push_back(s);
        for (auto &gr : groups)
          std::sort(gr.begin(), gr.end());
        PermutationLevel cut{LevelKind::Scalar, {}, groups, false};
        res.permutation.cuts.push_back({solver.transform().numLevels(), groups});
        solver.apply(cut);
        res.permutation.levels.push_back(std::move(cut));
      }
      detail::rebuild(res, prog, solver, cache, opts);
      // SCC ordinals may shift once dependences disappear; restart the walk.
      sccIdx = 0;
    }
    PermutationLevel lv{LevelKind::Loop, std::vector<std::optional<std::size_t>>(n),
                        {}, pendingRefresh};
    pendingRefresh = false;
    bool any = false;
    for (std::size_t v = 0; v < res.fcg.numVertices(); ++v)
      if (res.coloring.colorOf[v] == c) {
        lv.dims[res.fcg.stmtOf(v)] = res.fcg.vertices()[v].dim;
        any = true;
      }
    if (!any)
      continue;
    solver.apply(PermutationLevel{lv.kind, lv.dims, {}, false});
    res.permutation.levels.push_back(std::move(lv));
  }
  res.ddg = solver.ddg();
  return res;
}

inline std::size_t maxColors(const Program &prog) { return prog.maxDim(); }

/// Builds the conflict graph and colors it.
inline ColoringResult permuteAndFuse(const Program &prog, const DDG &ddg,
                                     FarkasCache &cache,
                                     const FcgOptions &opts = {}) {
  return colorFCG(prog, buildFCG(prog, ddg, cache, opts), ddg, maxColors(prog),
                  cache, opts);
}

} // namespace polysched
