#pragma once

// Post-passes over a permutation: per-level scale/shift solve and skewing
// for tileability.

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/farkas.hpp"
#include "polysched/fcg.hpp"
#include "polysched/model.hpp"
#include "polysched/pluto.hpp"
#include "polysched/ratlp.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

/// Replaces the 0/1 permutation rows by scaled and shifted rows, level by
/// level, then orders statements that remain tied on every level.
inline AffineTransform scaleAndShift(const Program &prog, const DDG &ddg,
                                     const Permutation &perm, FarkasCache &cache) {
  LevelSolver solver(prog, ddg, cache);
  for (const auto &lv : perm.levels)
    solver.apply(lv);
  solver.refresh();
  AffineTransform t = solver.transform();
  appendTrailingOrder(t, prog, solver.ddg());
  annotateTransform(t, prog, ddg.edges());
  return t;
}

struct SkewResult {
  AffineTransform transform;
  std::vector<std::size_t> skewedLevels;
  std::optional<std::string> diagnostic; // set when a skew LP was infeasible
};

namespace detail {

/// Legality dependences relevant at `level`: those not already satisfied by a
/// scalar level above it.
inline std::vector<std::size_t> consideredDeps(const Program &prog,
                                               const std::vector<DependencePolyhedron> &deps,
                                               const AffineTransform &t,
                                               std::size_t level) {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < deps.size(); ++e) {
    const auto &d = deps[e];
    if (!d.constrainsLegality())
      continue;
    bool cutAbove = false;
    for (std::size_t l = 0; l < level; ++l) {
      auto m = minDifference(d, prog, t.rows[d.src][l], t.rows[d.dst][l]);
      if (m && *m >= Rational(1)) {
        cutAbove = t.levelKinds[l] == LevelKind::Scalar;
        break;
      }
    }
    if (!cutAbove)
      out.push_back(e);
  }
  return out;
}

inline bool hasNegativeComponent(const Program &prog,
                                 const std::vector<DependencePolyhedron> &deps,
                                 const std::vector<std::size_t> &considered,
                                 const AffineTransform &t, std::size_t level) {
  for (std::size_t e : considered) {
    const auto &d = deps[e];
    auto m = minDifference(d, prog, t.rows[d.src][level], t.rows[d.dst][level]);
    if (!m || m->sign() < 0)
      return true;
  }
  return false;
}

/// Solves for alpha_s >= 1, beta_{s,k} >= 0 such that the rows
/// alpha_s * row_s(level) + sum_k beta_{s,k} * row_s(k) keep every
/// considered dependence non-negative; lexmin (u, w, beta, alpha).
inline std::optional<std::vector<Hyperplane>>
solveSkew(const Program &prog, const std::vector<DependencePolyhedron> &deps,
          const std::vector<std::size_t> &considered, const AffineTransform &t,
          std::size_t level) {
  const std::size_t n = prog.statements.size();
  const std::size_t np = prog.numParams();
  std::vector<std::size_t> outer;
  for (std::size_t l = 0; l < level; ++l)
    if (t.levelKinds[l] == LevelKind::Loop)
      outer.push_back(l);

  ConstraintSystem z;
  std::vector<std::size_t> u;
  for (std::size_t j = 0; j < np; ++j)
    u.push_back(z.addVar("u_" + prog.params[j], Rational(0)));
  const std::size_t w = z.addVar("w", Rational(0));
  std::vector<std::size_t> alpha(n);
  std::vector<std::vector<std::size_t>> beta(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t k = 0; k < outer.size(); ++k)
      beta[s].push_back(z.addVar(prog.statements[s].id + ".beta_" +
                                     std::to_string(outer[k]),
                                 Rational(0)));
  for (std::size_t s = 0; s < n; ++s)
    alpha[s] = z.addVar(prog.statements[s].id + ".alpha", Rational(0));
  const std::size_t nz = z.numVars();

  // Symbolic hyperplane entry e of statement s as a form over z.
  auto entry = [&](std::size_t s, std::size_t e) {
    std::vector<Rational> f(nz);
    f[alpha[s]] = t.rows[s][level][e];
    for (std::size_t k = 0; k < outer.size(); ++k)
      f[beta[s][k]] = t.rows[s][outer[k]][e];
    return f;
  };
  auto axpy = [](std::vector<Rational> &y, const std::vector<Rational> &x, int a) {
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!x[i].isZero())
        y[i] += Rational(a) * x[i];
  };

  ConstraintSystem sys = z;
  for (std::size_t e : considered) {
    const auto &d = deps[e];
    const std::size_t ms = prog.statements[d.src].dim();
    const std::size_t mt = prog.statements[d.dst].dim();
    SymbolicForm f;
    f.perDim.assign(ms + mt + np, std::vector<Rational>(nz));
    f.constant.assign(nz, Rational(0));
    for (std::size_t i = 0; i < ms; ++i)
      axpy(f.perDim[i], entry(d.src, i), -1);
    for (std::size_t i = 0; i < mt; ++i)
      axpy(f.perDim[ms + i], entry(d.dst, i), 1);
    for (std::size_t j = 0; j < np; ++j) {
      axpy(f.perDim[ms + mt + j], entry(d.dst, mt + j), 1);
      axpy(f.perDim[ms + mt + j], entry(d.src, ms + j), -1);
    }
    axpy(f.constant, entry(d.dst, mt + np), 1);
    axpy(f.constant, entry(d.src, ms + np), -1);

    ConstraintSystem poly = dependenceSystem(d, prog);
    ConstraintSystem legal = farkasNonNegative(poly, f, z);
    for (const auto &r : legal.rows())
      sys.addRow(r);
    SymbolicForm b = f;
    for (auto &v : b.perDim)
      for (auto &x : v)
        x = -x;
    for (auto &x : b.constant)
      x = -x;
    for (std::size_t j = 0; j < np; ++j)
      b.perDim[ms + mt + j][u[j]] += 1;
    b.constant[w] += 1;
    ConstraintSystem bound = farkasNonNegative(poly, std::move(b), z);
    for (const auto &r : bound.rows())
      sys.addRow(r);
  }
  for (std::size_t s = 0; s < n; ++s)
    sys.addLowerBoundRow(alpha[s], Rational(1));

  std::vector<std::size_t> order = u;
  order.push_back(w);
  for (std::size_t s = 0; s < n; ++s)
    order.insert(order.end(), beta[s].begin(), beta[s].end());
  for (std::size_t s = 0; s < n; ++s)
    order.push_back(alpha[s]);
  LPProblem p;
  p.system = std::move(sys);
  p.objectives = unitObjectives(order, nz);
  LPResult r = solveLexmin(p);
  if (!r.optimal())
    return std::nullopt;
  ScaledAssignment sa = scaleToIntegral(r.values);

  std::vector<Hyperplane> rows;
  for (std::size_t s = 0; s < n; ++s) {
    Hyperplane h(t.rows[s][level].size());
    for (std::size_t e = 0; e < h.size(); ++e) {
      Rational v = sa.values[alpha[s]] * t.rows[s][level][e];
      for (std::size_t k = 0; k < outer.size(); ++k)
        v += sa.values[beta[s][k]] * t.rows[s][outer[k]][e];
      h[e] = v;
    }
    rows.push_back(std::move(h));
  }
  return rows;
}

} // namespace detail

/// Removes negative dependence components level by level, outermost first,
/// by adding non-negative multiples of outer rows.
inline SkewResult introduceSkew(const Program &prog, const DDG &ddg,
                                const AffineTransform &input) {
  SkewResult res{input, {}, std::nullopt};
  AffineTransform &t = res.transform;
  const auto &deps = ddg.edges();
  for (std::size_t level = 0; level < t.numLevels(); ++level) {
    if (t.levelKinds[level] != LevelKind::Loop)
      continue;
    auto considered = detail::consideredDeps(prog, deps, t, level);
    if (!detail::hasNegativeComponent(prog, deps, considered, t, level))
      continue;
    auto rows = detail::solveSkew(prog, deps, considered, t, level);
    if (!rows) {
      res.transform = input;
      res.skewedLevels.clear();
      res.diagnostic = "not tileable: no skew removes the negative component at "
                       "level " + std::to_string(level);
      return res;
    }
    for (std::size_t s = 0; s < rows->size(); ++s)
      t.rows[s][level] = std::move((*rows)[s]);
    res.skewedLevels.push_back(level);
  }
  if (!res.skewedLevels.empty())
    annotateTransform(t, prog, deps);
  return res;
}

struct DfpResult {
  ColoringResult coloring;
  AffineTransform scaled; // after scale/shift, before skewing
  SkewResult skew;

  [[nodiscard]] const AffineTransform &transform() const { return skew.transform; }
};

/// Permutation and fusion from the conflict graph, then scale/shift and
/// skew post-passes.
inline DfpResult scheduleDfp(const Program &prog, const DDG &ddg,
                             const FcgOptions &opts = {}) {
  FarkasCache cache(prog);
  DfpResult res;
  res.coloring = permuteAndFuse(prog, ddg, cache, opts);
  res.scaled = scaleAndShift(prog, ddg, res.coloring.permutation, cache);
  res.skew = introduceSkew(prog, ddg, res.scaled);
  return res;
}

} // namespace polysched
