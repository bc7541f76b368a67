#pragma once

// Exact rational linear programming: two-phase primal simplex with Bland's
// rule, staged lexicographic minimization, and depth-first branch-and-bound.
// There is no floating point anywhere on the solve path.

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

enum class LPStatus { Optimal, Infeasible, Unbounded };

inline const char *toString(LPStatus s) {
  switch (s) {
  case LPStatus::Optimal:
    return "optimal";
  case LPStatus::Infeasible:
    return "infeasible";
  case LPStatus::Unbounded:
    return "unbounded";
  }
  return "?";
}

enum class LexminMode { Staged, Weighted };

struct LPProblem {
  ConstraintSystem system;
  /// Objectives in priority order; each has one entry per system variable.
  std::vector<std::vector<Rational>> objectives;
  /// Variables required to be integral, in branching priority order.
  std::vector<std::size_t> integral;
  LexminMode mode = LexminMode::Staged;
  /// Weighted mode combines objective k with weight base^(K-1-k).
  Rational weightBase = Rational(1000000);
  std::size_t nodeLimit = 100000;
};

struct LPResult {
  LPStatus status = LPStatus::Infeasible;
  std::vector<Rational> values;
  /// Value of every objective of the problem at `values`.
  std::vector<Rational> objectiveValues;
  /// Branch-and-bound nodes explored beyond the root.
  std::size_t branches = 0;

  [[nodiscard]] bool optimal() const { return status == LPStatus::Optimal; }
};

/// One unit objective per variable, in the given order: lexmin(x_order[0], ...).
inline std::vector<std::vector<Rational>>
unitObjectives(std::span<const std::size_t> order, std::size_t numVars) {
  std::vector<std::vector<Rational>> objs;
  objs.reserve(order.size());
  for (std::size_t v : order) {
    std::vector<Rational> o(numVars);
    o[v] = 1;
    objs.push_back(std::move(o));
  }
  return objs;
}

namespace detail {

/// Dense simplex tableau over non-negative structural columns.
class Tableau {
public:
  // Column layout: structural columns first, then slacks, then artificials.
  std::size_t numCols = 0;
  std::size_t firstArtificial = 0;
  std::vector<std::vector<Rational>> a; // m rows x numCols
  std::vector<Rational> rhs;
  std::vector<std::size_t> basis;
  std::vector<bool> frozen;

  void pivot(std::size_t pr, std::size_t pc, std::vector<Rational> &cost,
             Rational &costValue) {
    std::vector<Rational> &prow = a[pr];
    Rational p = prow[pc];
    std::vector<std::size_t> nz;
    nz.reserve(numCols);
    if (p != Rational(1)) {
      for (std::size_t j = 0; j < numCols; ++j) {
        if (!prow[j].isZero()) {
          prow[j] /= p;
          nz.push_back(j);
        }
      }
      rhs[pr] /= p;
    } else {
      for (std::size_t j = 0; j < numCols; ++j)
        if (!prow[j].isZero())
          nz.push_back(j);
    }
    auto eliminateIn = [&](std::vector<Rational> &row, Rational &value) {
      Rational f = row[pc];
      if (f.isZero())
        return;
      for (std::size_t j : nz)
        row[j] -= f * prow[j];
      value -= f * rhs[pr];
    };
    for (std::size_t r = 0; r < a.size(); ++r)
      if (r != pr)
        eliminateIn(a[r], rhs[r]);
    eliminateIn(cost, costValue);
    basis[pr] = pc;
  }

  /// Reduced costs of objective `c` (one entry per column) for the current
  /// basis, and the objective value (negated, in the usual tableau sense).
  void price(std::span<const Rational> c, std::vector<Rational> &d,
             Rational &negValue) const {
    d.assign(c.begin(), c.end());
    negValue = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      const Rational &cb = c[basis[r]];
      if (cb.isZero())
        continue;
      for (std::size_t j = 0; j < numCols; ++j)
        if (!a[r][j].isZero())
          d[j] -= cb * a[r][j];
      negValue -= cb * rhs[r];
    }
  }

  /// Minimizes the priced objective with Bland's rule. Returns false if
  /// unbounded.
  bool optimize(std::vector<Rational> &d, Rational &negValue) {
    for (;;) {
      std::size_t enter = numCols;
      for (std::size_t j = 0; j < numCols; ++j) {
        if (!frozen[j] && d[j].sign() < 0) {
          enter = j;
          break;
        }
      }
      if (enter == numCols)
        return true;
      std::size_t leave = a.size();
      Rational best;
      for (std::size_t r = 0; r < a.size(); ++r) {
        if (a[r][enter].sign() <= 0)
          continue;
        Rational ratio = rhs[r] / a[r][enter];
        if (leave == a.size() || ratio < best ||
            (ratio == best && basis[r] < basis[leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave == a.size())
        return false;
      pivot(leave, enter, d, negValue);
    }
  }
};

/// Maps the original (possibly free / lower-bounded) variables onto
/// non-negative tableau columns.
struct ColumnMap {
  struct Entry {
    std::size_t pos;
    std::optional<std::size_t> neg; // second column for free variables
    Rational shift;                 // x = shift + pos - neg
  };
  std::vector<Entry> vars;
  std::size_t numStructural = 0;

  explicit ColumnMap(const ConstraintSystem &sys) {
    vars.reserve(sys.numVars());
    for (std::size_t i = 0; i < sys.numVars(); ++i) {
      Entry e{numStructural++, std::nullopt, Rational(0)};
      if (const auto &lb = sys.lowerBound(i))
        e.shift = *lb;
      else
        e.neg = numStructural++;
      vars.push_back(e);
    }
  }

  [[nodiscard]] std::vector<Rational> structuralCost(std::span<const Rational> c,
                                                     std::size_t numCols) const {
    std::vector<Rational> out(numCols);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      out[vars[i].pos] = c[i];
      if (vars[i].neg)
        out[*vars[i].neg] = -c[i];
    }
    return out;
  }
};

} // namespace detail

namespace lp {

inline Rational dot(std::span<const Rational> c, std::span<const Rational> x) {
  Rational v;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!c[i].isZero())
      v += c[i] * x[i];
  return v;
}

/// Core solver: staged lexicographic minimization over the rational
/// polyhedron. An empty objective list is a pure feasibility check.
inline LPResult solveStaged(const ConstraintSystem &sys,
                            std::span<const std::vector<Rational>> objectives) {
  detail::ColumnMap cmap(sys);
  const std::size_t m = sys.numRows();
  const std::size_t nStruct = cmap.numStructural;

  // Rows: sum a_j y_j (+/- slack) (+ artificial) = rhs >= 0.
  std::size_t numSlack = 0;
  for (const auto &r : sys.rows())
    numSlack += r.rel == Relation::GreaterEqual;

  struct RowPlan {
    std::vector<Rational> coeffs; // over structural columns
    Rational rhs;
    std::optional<std::size_t> slack;
    int slackSign = 0;
    bool needsArtificial = false;
  };
  std::vector<RowPlan> plans;
  plans.reserve(m);
  std::size_t nextSlack = nStruct;
  std::size_t numArtificial = 0;
  for (const auto &row : sys.rows()) {
    RowPlan p;
    p.coeffs.assign(nStruct, Rational(0));
    Rational b = row.constant;
    for (std::size_t i = 0; i < row.coeffs.size(); ++i) {
      const Rational &c = row.coeffs[i];
      if (c.isZero())
        continue;
      const auto &e = cmap.vars[i];
      p.coeffs[e.pos] += c;
      if (e.neg)
        p.coeffs[*e.neg] -= c;
      if (!e.shift.isZero())
        b += c * e.shift;
    }
    // a.y + b {>=,=} 0
    if (row.rel == Relation::GreaterEqual) {
      p.slack = nextSlack++;
      if (b.sign() >= 0) {
        // -a.y + s = b
        for (auto &c : p.coeffs)
          if (!c.isZero())
            c = -c;
        p.rhs = b;
        p.slackSign = 1;
      } else {
        // a.y - s = -b > 0
        p.rhs = -b;
        p.slackSign = -1;
        p.needsArtificial = true;
      }
    } else {
      if (b.sign() > 0) {
        for (auto &c : p.coeffs)
          if (!c.isZero())
            c = -c;
        p.rhs = b;
      } else {
        p.rhs = -b;
      }
      p.needsArtificial = true;
    }
    numArtificial += p.needsArtificial;
    plans.push_back(std::move(p));
  }

  detail::Tableau t;
  t.firstArtificial = nStruct + numSlack;
  t.numCols = t.firstArtificial + numArtificial;
  t.frozen.assign(t.numCols, false);
  t.a.reserve(m);
  t.rhs.reserve(m);
  t.basis.reserve(m);
  std::size_t nextArt = t.firstArtificial;
  for (auto &p : plans) {
    std::vector<Rational> row(t.numCols);
    std::move(p.coeffs.begin(), p.coeffs.end(), row.begin());
    if (p.slack)
      row[*p.slack] = p.slackSign;
    if (p.needsArtificial) {
      row[nextArt] = 1;
      t.basis.push_back(nextArt++);
    } else {
      t.basis.push_back(*p.slack);
    }
    t.a.push_back(std::move(row));
    t.rhs.push_back(std::move(p.rhs));
  }

  std::vector<Rational> d;
  Rational negValue;

  // Phase 1.
  if (numArtificial > 0) {
    std::vector<Rational> c1(t.numCols);
    for (std::size_t j = t.firstArtificial; j < t.numCols; ++j)
      c1[j] = 1;
    t.price(c1, d, negValue);
    if (!t.optimize(d, negValue))
      throw InternalError("phase-1 simplex reported unbounded");
    if (negValue.sign() != 0)
      return {LPStatus::Infeasible, {}, {}, 0};
    // Drive artificials out of the basis; drop redundant rows.
    for (std::size_t r = 0; r < t.a.size();) {
      if (t.basis[r] < t.firstArtificial) {
        ++r;
        continue;
      }
      std::size_t col = t.firstArtificial;
      for (std::size_t j = 0; j < t.firstArtificial; ++j) {
        if (!t.a[r][j].isZero()) {
          col = j;
          break;
        }
      }
      if (col == t.firstArtificial) {
        t.a.erase(t.a.begin() + static_cast<std::ptrdiff_t>(r));
        t.rhs.erase(t.rhs.begin() + static_cast<std::ptrdiff_t>(r));
        t.basis.erase(t.basis.begin() + static_cast<std::ptrdiff_t>(r));
        continue;
      }
      t.pivot(r, col, d, negValue);
      ++r;
    }
    for (std::size_t j = t.firstArtificial; j < t.numCols; ++j)
      t.frozen[j] = true;
  }

  // Phase 2: one stage per objective; after each stage every non-basic
  // column with positive reduced cost is pinned at zero, which restricts the
  // later stages to the optimal face.
  for (const auto &obj : objectives) {
    auto c = cmap.structuralCost(obj, t.numCols);
    t.price(c, d, negValue);
    if (!t.optimize(d, negValue))
      return {LPStatus::Unbounded, {}, {}, 0};
    std::vector<bool> isBasic(t.numCols, false);
    for (std::size_t b : t.basis)
      isBasic[b] = true;
    for (std::size_t j = 0; j < t.numCols; ++j)
      if (!isBasic[j] && d[j].sign() > 0)
        t.frozen[j] = true;
  }

  std::vector<Rational> y(t.numCols);
  for (std::size_t r = 0; r < t.a.size(); ++r)
    y[t.basis[r]] = t.rhs[r];
  LPResult res;
  res.status = LPStatus::Optimal;
  res.values.resize(sys.numVars());
  for (std::size_t i = 0; i < sys.numVars(); ++i) {
    const auto &e = cmap.vars[i];
    Rational v = e.shift + y[e.pos];
    if (e.neg)
      v -= y[*e.neg];
    res.values[i] = std::move(v);
  }
  for (const auto &obj : objectives)
    res.objectiveValues.push_back(dot(obj, res.values));
  return res;
}

} // namespace lp

/// Minimizes the first objective (or checks feasibility if there is none).
inline LPResult solveLP(const LPProblem &problem) {
  std::span<const std::vector<Rational>> objs;
  if (!problem.objectives.empty())
    objs = std::span(problem.objectives).first(1);
  LPResult r = lp::solveStaged(problem.system, objs);
  if (r.optimal()) {
    r.objectiveValues.clear();
    for (const auto &o : problem.objectives)
      r.objectiveValues.push_back(lp::dot(o, r.values));
  }
  return r;
}

/// Lexicographic minimum of the objective list, staged (exact) or with a
/// single weighted-sum objective.
inline LPResult solveLexmin(const LPProblem &problem) {
  if (problem.objectives.empty())
    throw InternalError("lexmin requires at least one objective");
  if (problem.mode == LexminMode::Staged)
    return lp::solveStaged(problem.system, problem.objectives);
  const std::size_t n = problem.system.numVars();
  std::vector<Rational> combined(n);
  Rational weight = 1;
  for (auto it = problem.objectives.rbegin(); it != problem.objectives.rend();
       ++it) {
    for (std::size_t i = 0; i < n; ++i)
      if (!(*it)[i].isZero())
        combined[i] += weight * (*it)[i];
    weight *= problem.weightBase;
  }
  std::vector<std::vector<Rational>> single{combined};
  LPResult r = lp::solveStaged(problem.system, single);
  if (r.optimal()) {
    r.objectiveValues.clear();
    for (const auto &o : problem.objectives)
      r.objectiveValues.push_back(lp::dot(o, r.values));
  }
  return r;
}

namespace detail {

inline bool lexLess(std::span<const Rational> a, std::span<const Rational> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace detail

/// Branch-and-bound over the lexmin relaxation. Depth-first, "down" branch
/// first, branching on the first fractional variable in `integral` order.
inline LPResult solveILP(const LPProblem &problem) {
  struct Node {
    std::vector<LinearRow> extra;
  };
  LPResult best;
  best.status = LPStatus::Infeasible;
  std::size_t nodes = 0;
  std::vector<Node> stack;
  stack.push_back({});
  bool sawUnbounded = false;
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    if (nodes > problem.nodeLimit)
      throw ResourceLimitError("branch-and-bound node limit exceeded",
                               problem.nodeLimit);
    ++nodes;
    LPProblem sub = problem;
    for (auto &row : node.extra)
      sub.system.addRow(row);
    LPResult r = problem.objectives.empty() ? solveLP(sub) : solveLexmin(sub);
    if (r.status == LPStatus::Infeasible)
      continue;
    if (r.status == LPStatus::Unbounded) {
      sawUnbounded = true;
      continue;
    }
    if (best.optimal() &&
        !detail::lexLess(r.objectiveValues, best.objectiveValues))
      continue;
    std::optional<std::size_t> frac;
    for (std::size_t v : problem.integral) {
      if (!r.values[v].isInteger()) {
        frac = v;
        break;
      }
    }
    if (!frac) {
      best = std::move(r);
      if (problem.objectives.empty())
        break;
      continue;
    }
    const std::size_t n = problem.system.numVars();
    Rational val = r.values[*frac];
    Node up = node, down = std::move(node);
    {
      std::vector<Rational> c(n);
      c[*frac] = 1;
      up.extra.push_back({c, -val.ceil(), Relation::GreaterEqual});
      c[*frac] = -1;
      down.extra.push_back({c, val.floor(), Relation::GreaterEqual});
    }
    stack.push_back(std::move(up));
    stack.push_back(std::move(down));
  }
  if (!best.optimal() && sawUnbounded)
    best.status = LPStatus::Unbounded;
  best.branches = nodes - 1;
  return best;
}

struct ScaledAssignment {
  std::vector<Rational> values;
  Rational scale = 1; // c_s
};

/// Multiplies the assignment by the lcm of its denominators.
inline ScaledAssignment scaleToIntegral(std::span<const Rational> values) {
  mpz_class l = 1;
  for (const auto &v : values)
    l = lcm(l, v.denominator());
  ScaledAssignment out;
  out.scale = fromMpz(l);
  out.values.reserve(values.size());
  for (const auto &v : values)
    out.values.push_back(v * out.scale);
  return out;
}

/// Per-group scaling: each group of variables is multiplied by the lcm of its
/// own denominators; variables in `shared` get the lcm over everything, which
/// is also the returned scale.
inline ScaledAssignment
scaleToIntegral(std::span<const Rational> values,
                std::span<const std::vector<std::size_t>> groups,
                std::span<const std::size_t> shared) {
  ScaledAssignment out;
  out.values.assign(values.begin(), values.end());
  mpz_class global = 1;
  for (const auto &v : values)
    global = lcm(global, v.denominator());
  for (const auto &g : groups) {
    mpz_class l = 1;
    for (std::size_t v : g)
      l = lcm(l, values[v].denominator());
    Rational f = fromMpz(l);
    for (std::size_t v : g)
      out.values[v] = values[v] * f;
  }
  out.scale = fromMpz(global);
  for (std::size_t v : shared)
    out.values[v] = values[v] * out.scale;
  return out;
}

} // namespace polysched
