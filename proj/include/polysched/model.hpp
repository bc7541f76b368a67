#pragma once

// Program IR: statements with affine domains and accesses, dependence
// polyhedra, the dependence graph, and multi-level affine transforms.

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/ratlp.hpp"
#include "polysched/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

using Int = std::int64_t;

/// Integer affine constraint; the last coefficient is the constant term.
struct AffineConstraint {
  std::vector<Int> coeffs;
  Relation rel = Relation::GreaterEqual;

  friend bool operator==(const AffineConstraint &,
                         const AffineConstraint &) = default;
};

struct IndexSet {
  std::vector<std::string> iterators;
  std::vector<std::string> params;
  /// Each row has |iterators| + |params| + 1 entries.
  std::vector<AffineConstraint> constraints;

  [[nodiscard]] std::size_t dim() const { return iterators.size(); }
};

enum class AccessKind { Read, Write };

struct Access {
  std::string array;
  AccessKind kind = AccessKind::Read;
  /// One row per array subscript; |iterators| + |params| + 1 entries each.
  std::vector<std::vector<Int>> map;
};

struct Statement {
  std::string id;
  IndexSet domain;
  std::vector<Access> accesses;
  int order = 0;

  [[nodiscard]] std::size_t dim() const { return domain.dim(); }
};

enum class DepKind { RAW, WAR, WAW, RAR };

inline const char *toString(DepKind k) {
  switch (k) {
  case DepKind::RAW:
    return "RAW";
  case DepKind::WAR:
    return "WAR";
  case DepKind::WAW:
    return "WAW";
  case DepKind::RAR:
    return "RAR";
  }
  return "?";
}

struct DependencePolyhedron {
  std::size_t src = 0;
  std::size_t dst = 0;
  DepKind kind = DepKind::RAW;
  /// Rows over (src iterators, dst iterators, params, constant).
  std::vector<AffineConstraint> relation;
  std::optional<std::size_t> satisfiedAtLevel;

  [[nodiscard]] bool satisfied() const { return satisfiedAtLevel.has_value(); }
  /// RAR pairs never constrain legality.
  [[nodiscard]] bool constrainsLegality() const { return kind != DepKind::RAR; }
};

struct Program {
  std::vector<std::string> params;
  /// Sorted by textual order; indices are statement handles everywhere.
  std::vector<Statement> statements;
  std::optional<std::vector<DependencePolyhedron>> dependences;

  [[nodiscard]] std::size_t numParams() const { return params.size(); }
  [[nodiscard]] std::size_t maxDim() const {
    std::size_t m = 0;
    for (const auto &s : statements)
      m = std::max(m, s.dim());
    return m;
  }
  [[nodiscard]] std::optional<std::size_t> indexOf(std::string_view id) const {
    for (std::size_t i = 0; i < statements.size(); ++i)
      if (statements[i].id == id)
        return i;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Strongly connected components.

struct SccDecomposition {
  /// Components in topological order; members sorted by statement index.
  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> componentOf;
};

/// Tarjan SCCs, then a topological sort of the condensation that prefers the
/// component with the smallest statement index among the ready ones.
inline SccDecomposition
sccDecompose(std::size_t numVertices,
             std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::vector<std::size_t>> adj(numVertices);
  for (auto [u, v] : edges)
    adj[u].push_back(v);
  for (auto &a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  std::vector<int> index(numVertices, -1), low(numVertices, 0);
  std::vector<bool> onStack(numVertices, false);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> comp(numVertices, SIZE_MAX);
  std::size_t numComps = 0;
  int counter = 0;

  // Iterative Tarjan.
  struct Frame {
    std::size_t v;
    std::size_t next;
  };
  for (std::size_t root = 0; root < numVertices; ++root) {
    if (index[root] >= 0)
      continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    onStack[root] = true;
    while (!call.empty()) {
      Frame &f = call.back();
      if (f.next < adj[f.v].size()) {
        std::size_t w = adj[f.v][f.next++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          onStack[w] = true;
          call.push_back({w, 0});
        } else if (onStack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      std::size_t v = f.v;
      call.pop_back();
      if (!call.empty())
        low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        for (;;) {
          std::size_t w = stack.back();
          stack.pop_back();
          onStack[w] = false;
          comp[w] = numComps;
          if (w == v)
            break;
        }
        ++numComps;
      }
    }
  }

  std::vector<std::vector<std::size_t>> members(numComps);
  for (std::size_t v = 0; v < numVertices; ++v)
    members[comp[v]].push_back(v);
  std::vector<std::vector<std::size_t>> cadj(numComps);
  std::vector<std::size_t> indeg(numComps, 0);
  for (auto [u, v] : edges) {
    if (comp[u] != comp[v])
      cadj[comp[u]].push_back(comp[v]);
  }
  for (auto &a : cadj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    for (std::size_t c : a)
      ++indeg[c];
  }
  using Key = std::pair<std::size_t, std::size_t>; // (min member, comp)
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  for (std::size_t c = 0; c < numComps; ++c)
    if (indeg[c] == 0)
      ready.push({members[c].front(), c});
  SccDecomposition out;
  out.componentOf.assign(numVertices, 0);
  while (!ready.empty()) {
    auto [_, c] = ready.top();
    ready.pop();
    for (std::size_t v : members[c])
      out.componentOf[v] = out.components.size();
    out.components.push_back(members[c]);
    for (std::size_t n : cadj[c])
      if (--indeg[n] == 0)
        ready.push({members[n].front(), n});
  }
  if (out.components.size() != numComps)
    throw InternalError("condensation of the dependence graph is cyclic");
  return out;
}

// ---------------------------------------------------------------------------
// Dependence graph.

class DDG {
public:
  DDG() = default;
  DDG(std::size_t numStatements, std::vector<DependencePolyhedron> edges)
      : numStatements_(numStatements), edges_(std::move(edges)) {
    for (const auto &e : edges_)
      if (e.src >= numStatements_ || e.dst >= numStatements_)
        throw InternalError("dependence references unknown statement");
    refresh();
  }

  [[nodiscard]] std::size_t numStatements() const { return numStatements_; }
  [[nodiscard]] const std::vector<DependencePolyhedron> &edges() const {
    return edges_;
  }
  /// SCCs over the dependences not yet satisfied.
  [[nodiscard]] const SccDecomposition &sccs() const { return sccs_; }

  /// Indices of unsatisfied dependences.
  [[nodiscard]] std::vector<std::size_t> active() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges_.size(); ++i)
      if (!edges_[i].satisfied())
        out.push_back(i);
    return out;
  }

  [[nodiscard]] DDG withSatisfied(std::size_t edge, std::size_t level) const {
    DDG copy = *this;
    if (!copy.edges_[edge].satisfiedAtLevel)
      copy.edges_[edge].satisfiedAtLevel = level;
    copy.refresh();
    return copy;
  }

  /// Statements with an unsatisfied dependence into `s` (excluding itself).
  [[nodiscard]] std::vector<std::size_t> predecessors(std::size_t s) const {
    std::vector<std::size_t> out;
    for (const auto &e : edges_)
      if (!e.satisfied() && e.dst == s && e.src != s)
        out.push_back(e.src);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Weakly connected components over unsatisfied dependences, ordered by
  /// smallest member.
  [[nodiscard]] std::vector<std::vector<std::size_t>> connectedComponents() const {
    std::vector<std::size_t> parent(numStatements_);
    for (std::size_t i = 0; i < numStatements_; ++i)
      parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x)
        x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto &e : edges_)
      if (!e.satisfied())
        parent[find(e.src)] = find(e.dst);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> slot(numStatements_, SIZE_MAX);
    for (std::size_t s = 0; s < numStatements_; ++s) {
      std::size_t r = find(s);
      if (slot[r] == SIZE_MAX) {
        slot[r] = comps.size();
        comps.emplace_back();
      }
      comps[slot[r]].push_back(s);
    }
    return comps;
  }

private:
  void refresh() {
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    for (const auto &e : edges_)
      if (!e.satisfied())
        arcs.emplace_back(e.src, e.dst);
    sccs_ = sccDecompose(numStatements_, arcs);
  }

  std::size_t numStatements_ = 0;
  std::vector<DependencePolyhedron> edges_;
  SccDecomposition sccs_;
};

// ---------------------------------------------------------------------------
// Affine transforms.

enum class LevelKind { Loop, Scalar };

struct Band {
  std::size_t start = 0; // first level
  std::size_t end = 0;   // one past the last level
  bool permutable = true;
  bool parallel = false; // outermost level of the band is parallel

  friend bool operator==(const Band &, const Band &) = default;
};

struct CutRecord {
  std::size_t level = 0;
  /// Statement groups in the order the cut places them.
  std::vector<std::vector<std::size_t>> partition;

  friend bool operator==(const CutRecord &, const CutRecord &) = default;
};

/// A hyperplane row for statement S is (c_1..c_m, d_1..d_p, c_0).
using Hyperplane = std::vector<Rational>;

struct AffineTransform {
  /// rows[statement][level]
  std::vector<std::vector<Hyperplane>> rows;
  std::vector<LevelKind> levelKinds;
  std::vector<bool> parallel;
  std::vector<Band> bands;
  std::vector<CutRecord> cuts;

  [[nodiscard]] std::size_t numLevels() const { return levelKinds.size(); }

  friend bool operator==(const AffineTransform &,
                         const AffineTransform &) = default;
};

inline AffineTransform emptyTransform(std::size_t numStatements) {
  AffineTransform t;
  t.rows.resize(numStatements);
  return t;
}

/// Appends one level; `perStatement` must hold a row for every statement.
inline void appendLevel(AffineTransform &t, std::vector<Hyperplane> perStatement,
                        LevelKind kind) {
  if (perStatement.size() != t.rows.size())
    throw InternalError("level must define a row for every statement");
  for (std::size_t s = 0; s < perStatement.size(); ++s)
    t.rows[s].push_back(std::move(perStatement[s]));
  t.levelKinds.push_back(kind);
  t.parallel.push_back(false);
}

/// Iterator part of a statement's hyperplane.
inline std::vector<Rational> iteratorPart(const Hyperplane &h, std::size_t dim) {
  return {h.begin(), h.begin() + static_cast<std::ptrdiff_t>(dim)};
}

/// Rank of a set of rational vectors (exact Gaussian elimination).
inline std::size_t rank(std::vector<std::vector<Rational>> m) {
  std::size_t r = 0;
  if (m.empty())
    return 0;
  const std::size_t cols = m.front().size();
  for (std::size_t c = 0; c < cols && r < m.size(); ++c) {
    std::size_t p = r;
    while (p < m.size() && m[p][c].isZero())
      ++p;
    if (p == m.size())
      continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = r + 1; i < m.size(); ++i) {
      if (m[i][c].isZero())
        continue;
      Rational f = m[i][c] / m[r][c];
      for (std::size_t k = c; k < cols; ++k)
        m[i][k] -= f * m[r][k];
    }
    ++r;
  }
  return r;
}

inline std::size_t iteratorRank(const AffineTransform &t, std::size_t stmt,
                                std::size_t dim) {
  std::vector<std::vector<Rational>> m;
  for (const auto &h : t.rows[stmt])
    m.push_back(iteratorPart(h, dim));
  return rank(std::move(m));
}

// ---------------------------------------------------------------------------
// Dependence-difference queries.

/// The dependence polyhedron as a constraint system over free variables
/// (src iterators, dst iterators, params), with params >= 0 added.
inline ConstraintSystem dependenceSystem(const DependencePolyhedron &dep,
                                         const Program &prog) {
  const auto &src = prog.statements[dep.src];
  const auto &dst = prog.statements[dep.dst];
  const std::size_t ms = src.dim(), mt = dst.dim(), np = prog.numParams();
  ConstraintSystem sys;
  for (std::size_t i = 0; i < ms; ++i)
    sys.addVar("s_" + src.domain.iterators[i], std::nullopt);
  for (std::size_t i = 0; i < mt; ++i)
    sys.addVar("t_" + dst.domain.iterators[i], std::nullopt);
  for (std::size_t i = 0; i < np; ++i)
    sys.addVar(prog.params[i], Rational(0));
  for (const auto &c : dep.relation) {
    if (c.coeffs.size() != ms + mt + np + 1)
      throw InternalError("dependence relation row has wrong width");
    std::vector<Rational> co(c.coeffs.begin(), c.coeffs.end() - 1);
    sys.addRow({std::move(co), Rational(c.coeffs.back()), c.rel});
  }
  return sys;
}

/// phi_dst(t) - phi_src(s) as a linear form over the dependence variables:
/// returns (coefficients, constant).
inline std::pair<std::vector<Rational>, Rational>
differenceForm(const DependencePolyhedron &dep, const Program &prog,
               const Hyperplane &rowSrc, const Hyperplane &rowDst) {
  const std::size_t ms = prog.statements[dep.src].dim();
  const std::size_t mt = prog.statements[dep.dst].dim();
  const std::size_t np = prog.numParams();
  std::vector<Rational> g(ms + mt + np);
  for (std::size_t i = 0; i < ms; ++i)
    g[i] = -rowSrc[i];
  for (std::size_t i = 0; i < mt; ++i)
    g[ms + i] = rowDst[i];
  for (std::size_t j = 0; j < np; ++j)
    g[ms + mt + j] = rowDst[mt + j] - rowSrc[ms + j];
  return {std::move(g), rowDst[mt + np] - rowSrc[ms + np]};
}

/// Exact rational minimum of the difference over the dependence polyhedron;
/// nullopt when unbounded below.
inline std::optional<Rational> minDifference(const DependencePolyhedron &dep,
                                             const Program &prog,
                                             const Hyperplane &rowSrc,
                                             const Hyperplane &rowDst) {
  auto [g, g0] = differenceForm(dep, prog, rowSrc, rowDst);
  LPProblem p;
  p.system = dependenceSystem(dep, prog);
  p.objectives.push_back(std::move(g));
  LPResult r = solveLP(p);
  if (r.status == LPStatus::Infeasible)
    throw InternalError("dependence polyhedron is empty");
  if (r.status == LPStatus::Unbounded)
    return std::nullopt;
  return r.objectiveValues.front() + g0;
}

/// Exact rational maximum of the difference; nullopt when unbounded above.
inline std::optional<Rational> maxDifference(const DependencePolyhedron &dep,
                                             const Program &prog,
                                             const Hyperplane &rowSrc,
                                             const Hyperplane &rowDst) {
  auto [g, g0] = differenceForm(dep, prog, rowSrc, rowDst);
  for (auto &x : g)
    x = -x;
  LPProblem p;
  p.system = dependenceSystem(dep, prog);
  p.objectives.push_back(std::move(g));
  LPResult r = solveLP(p);
  if (r.status == LPStatus::Infeasible)
    throw InternalError("dependence polyhedron is empty");
  if (r.status == LPStatus::Unbounded)
    return std::nullopt;
  return g0 - r.objectiveValues.front();
}

/// Marks every unsatisfied dependence whose difference is >= 1 on one of the
/// first `levelCount` levels as satisfied at the first such level.
inline DDG removeSatisfiedDeps(const DDG &ddg, const Program &prog,
                               const AffineTransform &t,
                               std::size_t levelCount) {
  if (levelCount > t.numLevels())
    throw InternalError("removeSatisfiedDeps: transform has only " +
                        std::to_string(t.numLevels()) + " levels");
  DDG out = ddg;
  for (std::size_t e : ddg.active()) {
    const auto &dep = ddg.edges()[e];
    for (std::size_t l = 0; l < levelCount; ++l) {
      auto m = minDifference(dep, prog, t.rows[dep.src][l], t.rows[dep.dst][l]);
      if (m && *m >= Rational(1)) {
        out = out.withSatisfied(e, l);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise dependence status under a transform.

namespace detail {

inline std::optional<Rational> minimize(const ConstraintSystem &sys,
                                        std::vector<Rational> objective,
                                        const Rational &offset) {
  LPProblem p;
  p.system = sys;
  p.objectives.push_back(std::move(objective));
  LPResult r = solveLP(p);
  if (r.status == LPStatus::Infeasible)
    throw InternalError("dependence polyhedron is empty");
  if (r.status == LPStatus::Unbounded)
    return std::nullopt;
  return r.objectiveValues.front() + offset;
}

} // namespace detail

struct LevelCheck {
  std::optional<Rational> min; // nullopt: unbounded below
  std::optional<Rational> max; // nullopt: unbounded above
};

/// Walks the levels of a transform for one dependence. At every level only
/// the instance pairs that are tied on all outer levels are considered.
struct DependenceStatus {
  std::vector<LevelCheck> levels; // one entry per examined level
  std::optional<std::size_t> violatedAt;
  std::optional<std::size_t> satisfiedAt;

  [[nodiscard]] bool legal() const { return !violatedAt && satisfiedAt; }
};

inline DependenceStatus dependenceStatus(const DependencePolyhedron &dep,
                                         const Program &prog,
                                         const AffineTransform &t,
                                         bool withMax = false) {
  DependenceStatus st;
  ConstraintSystem sys = dependenceSystem(dep, prog);
  for (std::size_t l = 0; l < t.numLevels(); ++l) {
    auto [g, g0] = differenceForm(dep, prog, t.rows[dep.src][l], t.rows[dep.dst][l]);
    LevelCheck lc;
    lc.min = detail::minimize(sys, g, g0);
    if (withMax) {
      std::vector<Rational> neg = g;
      for (auto &x : neg)
        x = -x;
      auto m = detail::minimize(sys, std::move(neg), -g0);
      if (m)
        lc.max = -*m;
    }
    st.levels.push_back(lc);
    if (!lc.min || lc.min->sign() < 0) {
      st.violatedAt = l;
      return st;
    }
    if (lc.min->sign() > 0) {
      st.satisfiedAt = l;
      return st;
    }
    sys.addEquality(std::move(g), g0);
  }
  return st;
}

/// Recomputes parallel flags and permutable bands of a transform. A loop
/// level is parallel when every legality dependence still live at that level
/// has a zero difference there; a band is a maximal run of loop levels on
/// which every dependence live at its start is non-negative.
inline void annotateTransform(AffineTransform &t, const Program &prog,
                              const std::vector<DependencePolyhedron> &deps) {
  const std::size_t L = t.numLevels();
  t.parallel.assign(L, false);
  t.bands.clear();
  std::vector<std::vector<ConstraintSystem>> perLevel(deps.size());
  std::vector<std::vector<bool>> liveAt(deps.size(), std::vector<bool>(L, false));
  for (std::size_t e = 0; e < deps.size(); ++e) {
    if (!deps[e].constrainsLegality())
      continue;
    ConstraintSystem sys = dependenceSystem(deps[e], prog);
    for (std::size_t l = 0; l < L; ++l) {
      perLevel[e].push_back(sys);
      liveAt[e][l] = true;
      auto [g, g0] = differenceForm(deps[e], prog, t.rows[deps[e].src][l],
                                    t.rows[deps[e].dst][l]);
      auto m = detail::minimize(sys, g, g0);
      if (!m || m->sign() != 0)
        break;
      sys.addEquality(std::move(g), g0);
    }
  }
  auto diffRange = [&](std::size_t e, std::size_t from, std::size_t l) {
    auto [g, g0] = differenceForm(deps[e], prog, t.rows[deps[e].src][l],
                                  t.rows[deps[e].dst][l]);
    LevelCheck lc;
    lc.min = detail::minimize(perLevel[e][from], g, g0);
    for (auto &x : g)
      x = -x;
    if (auto m = detail::minimize(perLevel[e][from], g, -g0))
      lc.max = -*m;
    return lc;
  };
  for (std::size_t l = 0; l < L; ++l) {
    if (t.levelKinds[l] != LevelKind::Loop)
      continue;
    bool par = true;
    for (std::size_t e = 0; e < deps.size() && par; ++e) {
      if (!liveAt[e][l])
        continue;
      LevelCheck lc = diffRange(e, l, l);
      par = lc.min && lc.max && lc.min->isZero() && lc.max->isZero();
    }
    t.parallel[l] = par;
  }
  std::size_t l = 0;
  while (l < L) {
    if (t.levelKinds[l] != LevelKind::Loop) {
      ++l;
      continue;
    }
    std::size_t end = l + 1;
    while (end < L && t.levelKinds[end] == LevelKind::Loop) {
      bool ok = true;
      for (std::size_t e = 0; e < deps.size() && ok; ++e) {
        if (!liveAt[e][l])
          continue;
        auto [g, g0] = differenceForm(deps[e], prog, t.rows[deps[e].src][end],
                                      t.rows[deps[e].dst][end]);
        auto m = detail::minimize(perLevel[e][l], g, g0);
        ok = m && m->sign() >= 0;
      }
      if (!ok)
        break;
      ++end;
    }
    t.bands.push_back({l, end, true, t.parallel[l]});
    l = end;
  }
}

} // namespace polysched
