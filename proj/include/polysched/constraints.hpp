#pragma once

// Affine constraint systems over named rational variables, with
// Gaussian/Fourier-Motzkin projection.

#include "polysched/errors.hpp"
#include "polysched/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace polysched {

enum class Relation { GreaterEqual, Equal };

/// coeffs . x + constant  (>= 0 | == 0)
struct LinearRow {
  std::vector<Rational> coeffs;
  Rational constant;
  Relation rel = Relation::GreaterEqual;

  [[nodiscard]] Rational evaluate(std::span<const Rational> x) const {
    Rational v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      if (!coeffs[i].isZero())
        v += coeffs[i] * x[i];
    return v;
  }
  [[nodiscard]] bool satisfiedBy(std::span<const Rational> x) const {
    Rational v = evaluate(x);
    return rel == Relation::Equal ? v.isZero() : v.sign() >= 0;
  }
  [[nodiscard]] bool isTrivial() const {
    return std::all_of(coeffs.begin(), coeffs.end(),
                       [](const Rational &c) { return c.isZero(); });
  }

  friend bool operator==(const LinearRow &, const LinearRow &) = default;
};

namespace detail {

/// Scales a row by a positive factor so that every entry is an integer with
/// overall gcd 1. Equalities additionally get a positive leading coefficient.
inline void normalizeRow(LinearRow &row) {
  mpz_class den = 1;
  auto visitDen = [&](const Rational &r) {
    if (!r.isZero())
      den = lcm(den, r.denominator());
  };
  for (const auto &c : row.coeffs)
    visitDen(c);
  visitDen(row.constant);
  mpz_class g = 0;
  auto visitNum = [&](const Rational &r) {
    if (r.isZero())
      return;
    mpz_class n = (r * fromMpz(den)).numerator();
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), n.get_mpz_t());
  };
  for (const auto &c : row.coeffs)
    visitNum(c);
  visitNum(row.constant);
  if (g == 0)
    return;
  Rational factor = fromMpz(den) / fromMpz(g);
  if (row.rel == Relation::Equal) {
    for (const auto &c : row.coeffs) {
      if (!c.isZero()) {
        if (c.sign() < 0)
          factor = -factor;
        break;
      }
    }
  }
  if (factor == Rational(1))
    return;
  for (auto &c : row.coeffs)
    if (!c.isZero())
      c *= factor;
  row.constant *= factor;
}

} // namespace detail

class ConstraintSystem {
public:
  ConstraintSystem() = default;

  /// Adds a variable. A missing lower bound means the variable is free.
  std::size_t addVar(std::string name,
                     std::optional<Rational> lowerBound = Rational(0)) {
    names_.push_back(std::move(name));
    lower_.push_back(std::move(lowerBound));
    for (auto &r : rows_)
      r.coeffs.emplace_back();
    return names_.size() - 1;
  }

  void addRow(LinearRow row) {
    if (row.coeffs.size() != names_.size())
      throw InternalError("constraint row width " +
                          std::to_string(row.coeffs.size()) +
                          " does not match " + std::to_string(names_.size()) +
                          " variables");
    rows_.push_back(std::move(row));
  }
  /// coeffs . x + constant >= 0
  void addInequality(std::vector<Rational> coeffs, Rational constant = 0) {
    addRow({std::move(coeffs), std::move(constant), Relation::GreaterEqual});
  }
  void addEquality(std::vector<Rational> coeffs, Rational constant = 0) {
    addRow({std::move(coeffs), std::move(constant), Relation::Equal});
  }
  /// x_var >= value as an explicit row.
  void addLowerBoundRow(std::size_t var, const Rational &value) {
    std::vector<Rational> c(numVars());
    c[var] = 1;
    addInequality(std::move(c), -value);
  }
  void addFixRow(std::size_t var, const Rational &value) {
    std::vector<Rational> c(numVars());
    c[var] = 1;
    addEquality(std::move(c), -value);
  }
  void append(const ConstraintSystem &other) {
    if (other.numVars() != numVars())
      throw InternalError("appending constraint system of different width");
    rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
  }

  [[nodiscard]] std::size_t numVars() const { return names_.size(); }
  [[nodiscard]] std::size_t numRows() const { return rows_.size(); }
  [[nodiscard]] const std::vector<std::string> &varNames() const {
    return names_;
  }
  [[nodiscard]] const std::string &varName(std::size_t i) const {
    return names_[i];
  }
  [[nodiscard]] const std::optional<Rational> &lowerBound(std::size_t i) const {
    return lower_[i];
  }
  void setLowerBound(std::size_t i, std::optional<Rational> lb) {
    lower_[i] = std::move(lb);
  }
  [[nodiscard]] const std::vector<LinearRow> &rows() const { return rows_; }
  [[nodiscard]] std::optional<std::size_t> findVar(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name)
        return i;
    return std::nullopt;
  }

  /// True iff every row and every variable bound holds at x.
  [[nodiscard]] bool isSatisfiedBy(std::span<const Rational> x) const {
    if (x.size() != numVars())
      return false;
    for (std::size_t i = 0; i < numVars(); ++i)
      if (lower_[i] && x[i] < *lower_[i])
        return false;
    return std::all_of(rows_.begin(), rows_.end(),
                       [&](const LinearRow &r) { return r.satisfiedBy(x); });
  }

  /// Normalizes rows and drops duplicates, trivially true rows and rows
  /// dominated by a single other row with the same left-hand side.
  void simplify() {
    std::vector<LinearRow> out;
    std::map<std::vector<std::string>, std::size_t> seen;
    bool infeasible = false;
    for (auto &row : rows_) {
      detail::normalizeRow(row);
      if (row.isTrivial()) {
        bool ok = row.rel == Relation::Equal ? row.constant.isZero()
                                             : row.constant.sign() >= 0;
        if (!ok)
          infeasible = true;
        continue;
      }
      std::vector<std::string> key;
      key.reserve(row.coeffs.size() + 1);
      key.push_back(row.rel == Relation::Equal ? "=" : ">");
      for (const auto &c : row.coeffs)
        key.push_back(c.str());
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen.emplace(std::move(key), out.size());
        out.push_back(std::move(row));
      } else if (row.rel == Relation::GreaterEqual) {
        LinearRow &kept = out[it->second];
        if (row.constant < kept.constant)
          kept.constant = row.constant;
      } else if (row.constant != out[it->second].constant) {
        infeasible = true;
      }
    }
    if (infeasible) {
      out.clear();
      out.push_back({std::vector<Rational>(numVars()), Rational(-1),
                     Relation::GreaterEqual});
    }
    rows_ = std::move(out);
  }

  /// Projects the system onto the variables not listed in `vars`: equalities
  /// are used for Gaussian substitution first, the rest is Fourier-Motzkin.
  /// Bounds of eliminated variables are turned into rows before projection.
  [[nodiscard]] ConstraintSystem eliminate(std::span<const std::size_t> vars) const {
    std::vector<bool> drop(numVars(), false);
    for (std::size_t v : vars) {
      if (v >= numVars())
        throw InternalError("eliminating unknown variable index " +
                            std::to_string(v));
      drop[v] = true;
    }
    std::vector<LinearRow> rows = rows_;
    for (std::size_t v = 0; v < numVars(); ++v) {
      if (drop[v] && lower_[v]) {
        std::vector<Rational> c(numVars());
        c[v] = 1;
        rows.push_back({std::move(c), -*lower_[v], Relation::GreaterEqual});
      }
    }

    std::vector<std::size_t> pending;
    for (std::size_t v = 0; v < numVars(); ++v)
      if (drop[v])
        pending.push_back(v);

    // Gaussian elimination through equalities.
    for (auto it = pending.begin(); it != pending.end();) {
      std::size_t v = *it;
      auto eq = std::find_if(rows.begin(), rows.end(), [&](const LinearRow &r) {
        return r.rel == Relation::Equal && !r.coeffs[v].isZero();
      });
      if (eq == rows.end()) {
        ++it;
        continue;
      }
      LinearRow pivot = *eq;
      rows.erase(eq);
      for (auto &r : rows)
        substitute(r, pivot, v);
      it = pending.erase(it);
    }

    ConstraintSystem tmp = withRows(std::move(rows));
    tmp.simplify();
    rows = tmp.rows_;

    // Fourier-Motzkin for the rest, cheapest variable first.
    while (!pending.empty()) {
      auto best = pending.begin();
      std::size_t bestCost = SIZE_MAX;
      for (auto it = pending.begin(); it != pending.end(); ++it) {
        std::size_t pos = 0, neg = 0;
        for (const auto &r : rows) {
          int s = r.coeffs[*it].sign();
          pos += s > 0;
          neg += s < 0;
        }
        std::size_t cost = pos * neg;
        if (cost < bestCost || (cost == bestCost && *it < *best)) {
          bestCost = cost;
          best = it;
        }
      }
      std::size_t v = *best;
      pending.erase(best);

      std::vector<LinearRow> lower, upper, keep;
      for (auto &r : rows) {
        int sgn = r.coeffs[v].sign();
        if (sgn == 0)
          keep.push_back(std::move(r));
        else if (r.rel == Relation::Equal)
          throw InternalError("equality survived Gaussian elimination");
        else if (sgn > 0)
          lower.push_back(std::move(r));
        else
          upper.push_back(std::move(r));
      }
      for (const auto &lo : lower) {
        for (const auto &up : upper) {
          // lo: a x_v + L >= 0 (a>0), up: -b x_v + U >= 0 (b>0)
          Rational a = lo.coeffs[v];
          Rational b = -up.coeffs[v];
          LinearRow combined;
          combined.rel = Relation::GreaterEqual;
          combined.coeffs.resize(numVars());
          for (std::size_t k = 0; k < numVars(); ++k) {
            if (k == v || (lo.coeffs[k].isZero() && up.coeffs[k].isZero()))
              continue;
            combined.coeffs[k] = b * lo.coeffs[k] + a * up.coeffs[k];
          }
          combined.constant = b * lo.constant + a * up.constant;
          keep.push_back(std::move(combined));
        }
      }
      ConstraintSystem step = withRows(std::move(keep));
      step.simplify();
      rows = step.rows_;
    }

    // Rebuild over the remaining variables.
    ConstraintSystem out;
    std::vector<std::size_t> keepIdx;
    for (std::size_t v = 0; v < numVars(); ++v) {
      if (!drop[v]) {
        keepIdx.push_back(v);
        out.addVar(names_[v], lower_[v]);
      }
    }
    for (const auto &r : rows) {
      LinearRow nr;
      nr.rel = r.rel;
      nr.constant = r.constant;
      nr.coeffs.reserve(keepIdx.size());
      for (std::size_t v : keepIdx)
        nr.coeffs.push_back(r.coeffs[v]);
      out.rows_.push_back(std::move(nr));
    }
    out.simplify();
    return out;
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    for (const auto &r : rows_) {
      bool first = true;
      for (std::size_t i = 0; i < r.coeffs.size(); ++i) {
        if (r.coeffs[i].isZero())
          continue;
        if (!first)
          os << " + ";
        os << r.coeffs[i] << "*" << names_[i];
        first = false;
      }
      if (!r.constant.isZero() || first)
        os << (first ? "" : " + ") << r.constant;
      os << (r.rel == Relation::Equal ? " == 0\n" : " >= 0\n");
    }
    return os.str();
  }

private:
  [[nodiscard]] ConstraintSystem withRows(std::vector<LinearRow> rows) const {
    ConstraintSystem s;
    s.names_ = names_;
    s.lower_ = lower_;
    s.rows_ = std::move(rows);
    return s;
  }

  /// Replaces variable v in `row` using the equality `pivot` (pivot.coeffs[v]
  /// must be non-zero).
  static void substitute(LinearRow &row, const LinearRow &pivot, std::size_t v) {
    if (row.coeffs[v].isZero())
      return;
    Rational f = row.coeffs[v] / pivot.coeffs[v];
    for (std::size_t k = 0; k < row.coeffs.size(); ++k)
      if (!pivot.coeffs[k].isZero())
        row.coeffs[k] -= f * pivot.coeffs[k];
    row.constant -= f * pivot.constant;
    row.coeffs[v] = 0;
  }

  std::vector<std::string> names_;
  std::vector<std::optional<Rational>> lower_;
  std::vector<LinearRow> rows_;
};

} // namespace polysched
