#pragma once

// Linearization of the legality and bounding conditions through the affine
// form of Farkas' lemma.
//
// Scheduling variables are laid out as
//   u_1..u_p, w, then per statement  c_1..c_m, d_1..d_p, c_0
// where a layout may omit some c_k (pinned to zero), the d block (no
// parametric shifts) or c_0 (no constant shifts).

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/model.hpp"
#include "polysched/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

struct LayoutOptions {
  bool parametricShift = true;
  bool constantShift = true;
};

class CoefficientLayout {
public:
  static constexpr std::size_t absent = SIZE_MAX;

  /// Layout over `statements` with every iterator coefficient present.
  CoefficientLayout(const Program &prog, std::vector<std::size_t> statements,
                    LayoutOptions opts = {})
      : CoefficientLayout(prog, statements, fullMasks(prog, statements), opts) {}

  /// `masks[k][i]` says whether c_i of statements[k] is a variable; absent
  /// coefficients are fixed at zero.
  CoefficientLayout(const Program &prog, std::vector<std::size_t> statements,
                    const std::vector<std::vector<bool>> &masks,
                    LayoutOptions opts = {})
      : numStatementsTotal_(prog.statements.size()), np_(prog.numParams()),
        opts_(opts), statements_(std::move(statements)) {
    for (std::size_t j = 0; j < np_; ++j)
      u_.push_back(addName("u_" + prog.params[j]));
    w_ = addName("w");
    slot_.assign(numStatementsTotal_, absent);
    for (std::size_t k = 0; k < statements_.size(); ++k) {
      std::size_t s = statements_[k];
      const Statement &st = prog.statements[s];
      slot_[s] = k;
      PerStatement ps;
      for (std::size_t i = 0; i < st.dim(); ++i)
        ps.c.push_back(masks[k][i] ? addName(st.id + ".c_" + st.domain.iterators[i])
                                   : absent);
      for (std::size_t j = 0; j < np_; ++j)
        ps.d.push_back(opts.parametricShift
                           ? addName(st.id + ".d_" + prog.params[j])
                           : absent);
      ps.c0 = opts.constantShift ? addName(st.id + ".c_0") : absent;
      per_.push_back(std::move(ps));
    }
  }

  [[nodiscard]] std::size_t numVars() const { return names_.size(); }
  [[nodiscard]] const std::vector<std::string> &names() const { return names_; }
  [[nodiscard]] const std::vector<std::size_t> &statements() const {
    return statements_;
  }
  [[nodiscard]] bool has(std::size_t stmt) const {
    return stmt < slot_.size() && slot_[stmt] != absent;
  }
  [[nodiscard]] const LayoutOptions &options() const { return opts_; }

  [[nodiscard]] std::size_t u(std::size_t j) const { return u_[j]; }
  [[nodiscard]] const std::vector<std::size_t> &uVars() const { return u_; }
  [[nodiscard]] std::size_t w() const { return w_; }
  [[nodiscard]] std::size_t c(std::size_t stmt, std::size_t i) const {
    return per(stmt).c[i];
  }
  [[nodiscard]] std::size_t d(std::size_t stmt, std::size_t j) const {
    return per(stmt).d[j];
  }
  [[nodiscard]] std::size_t c0(std::size_t stmt) const { return per(stmt).c0; }
  [[nodiscard]] std::size_t dim(std::size_t stmt) const {
    return per(stmt).c.size();
  }

  /// Variables that belong to one statement (present ones only).
  [[nodiscard]] std::vector<std::size_t> statementVars(std::size_t stmt) const {
    std::vector<std::size_t> out;
    const auto &p = per(stmt);
    for (std::size_t v : p.c)
      if (v != absent)
        out.push_back(v);
    for (std::size_t v : p.d)
      if (v != absent)
        out.push_back(v);
    if (p.c0 != absent)
      out.push_back(p.c0);
    return out;
  }

  /// lexmin priority: u, w, then per statement c_m..c_1, d_1..d_p, c_0.
  [[nodiscard]] std::vector<std::size_t> lexOrder() const {
    std::vector<std::size_t> order = u_;
    order.push_back(w_);
    for (const auto &p : per_) {
      for (auto it = p.c.rbegin(); it != p.c.rend(); ++it)
        if (*it != absent)
          order.push_back(*it);
      for (std::size_t v : p.d)
        if (v != absent)
          order.push_back(v);
      if (p.c0 != absent)
        order.push_back(p.c0);
    }
    return order;
  }

  /// Empty system with one non-negative variable per layout entry.
  [[nodiscard]] ConstraintSystem emptySystem() const {
    ConstraintSystem sys;
    for (const auto &n : names_)
      sys.addVar(n, Rational(0));
    return sys;
  }

  /// The hyperplane (c_1..c_m, d_1..d_p, c_0) of a statement under an
  /// assignment; absent entries are zero.
  [[nodiscard]] Hyperplane extract(std::size_t stmt,
                                   std::span<const Rational> x) const {
    const auto &p = per(stmt);
    Hyperplane h;
    auto get = [&](std::size_t v) { return v == absent ? Rational(0) : x[v]; };
    for (std::size_t v : p.c)
      h.push_back(get(v));
    for (std::size_t j = 0; j < np_; ++j)
      h.push_back(get(p.d[j]));
    h.push_back(get(p.c0));
    return h;
  }

  /// Linear form (over layout variables) for one symbolic coefficient of a
  /// statement's hyperplane; zero when the coefficient is absent.
  [[nodiscard]] std::vector<Rational> unit(std::size_t var) const {
    std::vector<Rational> f(numVars());
    if (var != absent)
      f[var] = 1;
    return f;
  }

private:
  struct PerStatement {
    std::vector<std::size_t> c;
    std::vector<std::size_t> d;
    std::size_t c0 = absent;
  };

  static std::vector<std::vector<bool>>
  fullMasks(const Program &prog, const std::vector<std::size_t> &stmts) {
    std::vector<std::vector<bool>> m;
    for (std::size_t s : stmts)
      m.emplace_back(prog.statements[s].dim(), true);
    return m;
  }

  std::size_t addName(std::string n) {
    names_.push_back(std::move(n));
    return names_.size() - 1;
  }
  [[nodiscard]] const PerStatement &per(std::size_t stmt) const {
    if (!has(stmt))
      throw InternalError("statement " + std::to_string(stmt) +
                          " is not part of this coefficient layout");
    return per_[slot_[stmt]];
  }

  std::size_t numStatementsTotal_;
  std::size_t np_;
  LayoutOptions opts_;
  std::vector<std::size_t> statements_;
  std::vector<std::size_t> slot_;
  std::vector<std::size_t> u_;
  std::size_t w_ = 0;
  std::vector<PerStatement> per_;
  std::vector<std::string> names_;
};

/// A function of the dependence variables x whose coefficients are linear
/// forms over the scheduling variables z:  sum_l G_l(z) x_l + G_0(z).
struct SymbolicForm {
  std::vector<std::vector<Rational>> perDim; // G_l, each of size |z|
  std::vector<Rational> constant;            // G_0 over z
  Rational constantOffset;                   // plain constant inside G_0
};

/// Rows over z equivalent to  form(x) >= 0  for every x in the (non-empty)
/// dependence polyhedron `poly`: equalities of `poly` are substituted away,
/// then Farkas multipliers are introduced and projected out.
inline ConstraintSystem farkasNonNegative(const ConstraintSystem &poly,
                                          SymbolicForm form,
                                          const ConstraintSystem &zSpace) {
  const std::size_t nx = poly.numVars();
  const std::size_t nz = zSpace.numVars();
  if (form.perDim.size() != nx)
    throw InternalError("symbolic form does not match polyhedron dimension");

  std::vector<LinearRow> rows = poly.rows();
  for (std::size_t i = 0; i < nx; ++i) {
    if (const auto &lb = poly.lowerBound(i)) {
      std::vector<Rational> c(nx);
      c[i] = 1;
      rows.push_back({std::move(c), -*lb, Relation::GreaterEqual});
    }
  }

  // Substitute equalities: x_p = -(sum_{k!=p} a_k x_k + b) / a_p.
  std::vector<bool> gone(nx, false);
  for (;;) {
    auto eq = std::find_if(rows.begin(), rows.end(), [](const LinearRow &r) {
      return r.rel == Relation::Equal && !r.isTrivial();
    });
    if (eq == rows.end())
      break;
    LinearRow piv = *eq;
    rows.erase(eq);
    std::size_t p = nx;
    for (std::size_t k = nx; k-- > 0;)
      if (!piv.coeffs[k].isZero()) {
        p = k;
        break;
      }
    const Rational ap = piv.coeffs[p];
    for (auto &r : rows) {
      if (r.coeffs[p].isZero())
        continue;
      Rational f = r.coeffs[p] / ap;
      for (std::size_t k = 0; k < nx; ++k)
        if (!piv.coeffs[k].isZero())
          r.coeffs[k] -= f * piv.coeffs[k];
      r.constant -= f * piv.constant;
      r.coeffs[p] = 0;
    }
    // G_p x_p  ->  -G_p (sum a_k x_k + b) / a_p
    std::vector<Rational> gp = std::move(form.perDim[p]);
    form.perDim[p].assign(nz, Rational(0));
    for (std::size_t k = 0; k < nx; ++k) {
      if (k == p || piv.coeffs[k].isZero())
        continue;
      Rational f = piv.coeffs[k] / ap;
      for (std::size_t v = 0; v < nz; ++v)
        if (!gp[v].isZero())
          form.perDim[k][v] -= f * gp[v];
    }
    if (!piv.constant.isZero()) {
      Rational f = piv.constant / ap;
      for (std::size_t v = 0; v < nz; ++v)
        if (!gp[v].isZero())
          form.constant[v] -= f * gp[v];
    }
    gone[p] = true;
  }
  for (auto &r : rows)
    if (r.rel == Relation::Equal && !r.isTrivial())
      throw InternalError("equality left after substitution");

  // Remaining inequality rows that mention some x.
  std::vector<const LinearRow *> ineq;
  for (const auto &r : rows)
    if (r.rel == Relation::GreaterEqual && !r.isTrivial())
      ineq.push_back(&r);

  // System over (z, lambda): G_l(z) - sum_k lambda_k A_kl == 0 for every
  // surviving dimension l, and G_0(z) + offset - sum_k lambda_k b_k >= 0.
  ConstraintSystem sys;
  for (std::size_t v = 0; v < nz; ++v)
    sys.addVar(zSpace.varName(v), zSpace.lowerBound(v));
  std::vector<std::size_t> lambdas;
  for (std::size_t k = 0; k < ineq.size(); ++k)
    lambdas.push_back(sys.addVar("lambda_" + std::to_string(k), Rational(0)));
  const std::size_t width = sys.numVars();
  for (std::size_t l = 0; l < nx; ++l) {
    if (gone[l])
      continue;
    std::vector<Rational> c(width);
    bool any = false;
    for (std::size_t v = 0; v < nz; ++v)
      if (!form.perDim[l][v].isZero()) {
        c[v] = form.perDim[l][v];
        any = true;
      }
    for (std::size_t k = 0; k < ineq.size(); ++k)
      if (!ineq[k]->coeffs[l].isZero()) {
        c[lambdas[k]] = -ineq[k]->coeffs[l];
        any = true;
      }
    if (any)
      sys.addEquality(std::move(c));
  }
  {
    std::vector<Rational> c(width);
    for (std::size_t v = 0; v < nz; ++v)
      c[v] = form.constant[v];
    for (std::size_t k = 0; k < ineq.size(); ++k)
      c[lambdas[k]] = -ineq[k]->constant;
    sys.addInequality(std::move(c), form.constantOffset);
  }
  ConstraintSystem projected = sys.eliminate(lambdas);
  return projected;
}

namespace detail {

/// Symbolic phi_dst(t) - phi_src(s) (times `sign`) over the dependence
/// variables (s, t, p), in a given layout.
inline SymbolicForm differenceSymbolic(const DependencePolyhedron &dep,
                                       const Program &prog,
                                       const CoefficientLayout &layout,
                                       int sign) {
  const std::size_t ms = prog.statements[dep.src].dim();
  const std::size_t mt = prog.statements[dep.dst].dim();
  const std::size_t np = prog.numParams();
  const std::size_t nz = layout.numVars();
  SymbolicForm f;
  f.perDim.assign(ms + mt + np, std::vector<Rational>(nz));
  f.constant.assign(nz, Rational(0));
  auto add = [&](std::vector<Rational> &target, std::size_t var, int s) {
    if (var != CoefficientLayout::absent)
      target[var] += Rational(s * sign);
  };
  for (std::size_t i = 0; i < ms; ++i)
    add(f.perDim[i], layout.c(dep.src, i), -1);
  for (std::size_t i = 0; i < mt; ++i)
    add(f.perDim[ms + i], layout.c(dep.dst, i), 1);
  for (std::size_t j = 0; j < np; ++j) {
    add(f.perDim[ms + mt + j], layout.d(dep.dst, j), 1);
    add(f.perDim[ms + mt + j], layout.d(dep.src, j), -1);
  }
  add(f.constant, layout.c0(dep.dst), 1);
  add(f.constant, layout.c0(dep.src), -1);
  return f;
}

} // namespace detail

/// phi_dst(t) - phi_src(s) >= 0 over the dependence polyhedron.
inline ConstraintSystem legalityConstraints(const DependencePolyhedron &dep,
                                            const Program &prog,
                                            const CoefficientLayout &layout) {
  return farkasNonNegative(dependenceSystem(dep, prog),
                           detail::differenceSymbolic(dep, prog, layout, 1),
                           layout.emptySystem());
}

/// phi_dst(t) - phi_src(s) <= u.p + w over the dependence polyhedron.
inline ConstraintSystem boundingConstraints(const DependencePolyhedron &dep,
                                            const Program &prog,
                                            const CoefficientLayout &layout) {
  SymbolicForm f = detail::differenceSymbolic(dep, prog, layout, -1);
  const std::size_t ms = prog.statements[dep.src].dim();
  const std::size_t mt = prog.statements[dep.dst].dim();
  for (std::size_t j = 0; j < prog.numParams(); ++j)
    f.perDim[ms + mt + j][layout.u(j)] += 1;
  f.constant[layout.w()] += 1;
  return farkasNonNegative(dependenceSystem(dep, prog), std::move(f),
                           layout.emptySystem());
}

/// Re-expresses rows written over `from` in the variables of `to`. Variables
/// of `from` that are absent in `to` are fixed at zero.
inline std::vector<LinearRow> remapRows(const ConstraintSystem &rowsIn,
                                        const CoefficientLayout &from,
                                        const CoefficientLayout &to) {
  std::map<std::string, std::size_t> target;
  for (std::size_t v = 0; v < to.numVars(); ++v)
    target.emplace(to.names()[v], v);
  std::vector<std::size_t> map(from.numVars(), CoefficientLayout::absent);
  for (std::size_t v = 0; v < from.numVars(); ++v) {
    auto it = target.find(from.names()[v]);
    if (it != target.end())
      map[v] = it->second;
  }
  std::vector<LinearRow> out;
  for (const auto &r : rowsIn.rows()) {
    LinearRow nr;
    nr.rel = r.rel;
    nr.constant = r.constant;
    nr.coeffs.assign(to.numVars(), Rational(0));
    for (std::size_t v = 0; v < r.coeffs.size(); ++v)
      if (!r.coeffs[v].isZero() && map[v] != CoefficientLayout::absent)
        nr.coeffs[map[v]] += r.coeffs[v];
    if (nr.isTrivial() && nr.rel == Relation::GreaterEqual &&
        nr.constant.sign() >= 0)
      continue;
    out.push_back(std::move(nr));
  }
  return out;
}

/// Per-dependence memo of the Farkas-projected rows, computed once in the
/// widest layout for the (src, dst) pair and remapped on demand.
class FarkasCache {
public:
  explicit FarkasCache(const Program &prog) : prog_(&prog) {}

  struct Entry {
    CoefficientLayout layout;
    ConstraintSystem legality;
    ConstraintSystem bounding;
  };

  const Entry &get(const DependencePolyhedron &dep) {
    std::vector<Int> key{static_cast<Int>(dep.src), static_cast<Int>(dep.dst)};
    for (const auto &row : dep.relation) {
      key.push_back(row.rel == Relation::Equal ? 1 : 0);
      key.insert(key.end(), row.coeffs.begin(), row.coeffs.end());
    }
    auto it = cache_.find(key);
    if (it != cache_.end())
      return it->second;
    std::vector<std::size_t> stmts{dep.src};
    if (dep.dst != dep.src)
      stmts.push_back(dep.dst);
    std::sort(stmts.begin(), stmts.end());
    CoefficientLayout layout(*prog_, stmts);
    Entry e{layout, legalityConstraints(dep, *prog_, layout),
            boundingConstraints(dep, *prog_, layout)};
    return cache_.emplace(key, std::move(e)).first->second;
  }

  /// Adds legality (and optionally bounding) rows of `dep` to `sys`.
  void addRows(const DependencePolyhedron &dep, const CoefficientLayout &layout,
               ConstraintSystem &sys, bool bounding) {
    const Entry &e = get(dep);
    for (auto &r : remapRows(e.legality, e.layout, layout))
      sys.addRow(std::move(r));
    if (bounding)
      for (auto &r : remapRows(e.bounding, e.layout, layout))
        sys.addRow(std::move(r));
  }

private:
  const Program *prog_;
  std::map<std::vector<Int>, Entry> cache_;
};

} // namespace polysched
