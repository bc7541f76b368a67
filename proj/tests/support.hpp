#pragma once

#include "polysched.hpp"

#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace testing_support {

using namespace polysched;

inline Program corpusProgram(const std::string &name) {
  return loadProgram(std::string(POLYSCHED_CORPUS_DIR) + "/" + name + ".json");
}

/// Integer points of a statement domain with the parameters fixed.
inline std::vector<std::vector<Int>> enumerateDomain(const Statement &s,
                                                     const std::vector<Int> &params,
                                                     Int lo, Int hi) {
  std::vector<std::vector<Int>> out;
  std::vector<Int> x(s.dim(), lo);
  auto inside = [&] {
    for (const auto &c : s.domain.constraints) {
      Int v = c.coeffs.back();
      for (std::size_t i = 0; i < s.dim(); ++i)
        v += c.coeffs[i] * x[i];
      for (std::size_t j = 0; j < params.size(); ++j)
        v += c.coeffs[s.dim() + j] * params[j];
      if (c.rel == Relation::Equal ? v != 0 : v < 0)
        return false;
    }
    return true;
  };
  if (s.dim() == 0) {
    if (inside())
      out.push_back({});
    return out;
  }
  while (true) {
    if (inside())
      out.push_back(x);
    std::size_t k = s.dim();
    while (k > 0 && x[k - 1] == hi)
      x[--k] = lo;
    if (k == 0)
      break;
    ++x[k - 1];
  }
  return out;
}

inline std::vector<Int> evalAccess(const Access &a, const std::vector<Int> &it,
                                   const std::vector<Int> &params) {
  std::vector<Int> cell;
  for (const auto &row : a.map) {
    Int v = row.back();
    for (std::size_t i = 0; i < it.size(); ++i)
      v += row[i] * it[i];
    for (std::size_t j = 0; j < params.size(); ++j)
      v += row[it.size() + j] * params[j];
    cell.push_back(v);
  }
  return cell;
}

/// (src, dst, kind, src iteration, dst iteration)
using DepInstance =
    std::tuple<std::size_t, std::size_t, int, std::vector<Int>, std::vector<Int>>;

/// Instance-wise memory dependences by direct simulation of the accesses:
/// statements in textual order, each nest in lexicographic order.
inline std::set<DepInstance> simulateDependences(const Program &prog,
                                                 const std::vector<Int> &params) {
  std::set<DepInstance> out;
  const Int hi = params.empty() ? 4 : params[0] + 2;
  std::vector<std::vector<std::vector<Int>>> points;
  for (const auto &s : prog.statements)
    points.push_back(enumerateDomain(s, params, -2, hi));
  for (std::size_t a = 0; a < prog.statements.size(); ++a)
    for (std::size_t b = a; b < prog.statements.size(); ++b)
      for (const auto &x : points[a])
        for (const auto &y : points[b]) {
          if (a == b && !(x < y))
            continue;
          for (const auto &ra : prog.statements[a].accesses)
            for (const auto &rb : prog.statements[b].accesses) {
              if (ra.array != rb.array)
                continue;
              bool wa = ra.kind == AccessKind::Write, wb = rb.kind == AccessKind::Write;
              if (!wa && !wb && a == b)
                continue;
              if (evalAccess(ra, x, params) != evalAccess(rb, y, params))
                continue;
              DepKind k = wa && wb   ? DepKind::WAW
                          : wa       ? DepKind::RAW
                          : wb       ? DepKind::WAR
                                     : DepKind::RAR;
              out.emplace(a, b, static_cast<int>(k), x, y);
            }
        }
  return out;
}

/// Integer points of the dependence polyhedra, with the parameters fixed.
inline std::set<DepInstance> polyhedraPoints(const Program &prog, const DDG &ddg,
                                             const std::vector<Int> &params) {
  std::set<DepInstance> out;
  const Int hi = params.empty() ? 4 : params[0] + 2;
  for (const auto &d : ddg.edges()) {
    const auto &S = prog.statements[d.src], &T = prog.statements[d.dst];
    for (const auto &x : enumerateDomain(S, params, -2, hi))
      for (const auto &y : enumerateDomain(T, params, -2, hi)) {
        bool ok = true;
        for (const auto &c : d.relation) {
          Int v = c.coeffs.back();
          for (std::size_t i = 0; i < x.size(); ++i)
            v += c.coeffs[i] * x[i];
          for (std::size_t i = 0; i < y.size(); ++i)
            v += c.coeffs[x.size() + i] * y[i];
          for (std::size_t j = 0; j < params.size(); ++j)
            v += c.coeffs[x.size() + y.size() + j] * params[j];
          if (c.rel == Relation::Equal ? v != 0 : v < 0) {
            ok = false;
            break;
          }
        }
        if (ok)
          out.emplace(d.src, d.dst, static_cast<int>(d.kind), x, y);
      }
  }
  return out;
}

/// Value of a schedule row at an iteration with the parameters fixed.
inline Rational rowAt(const Hyperplane &h, const std::vector<Int> &it,
                      const std::vector<Int> &params) {
  Rational v = h.back();
  for (std::size_t i = 0; i < it.size(); ++i)
    v += h[i] * Rational(it[i]);
  for (std::size_t j = 0; j < params.size(); ++j)
    v += h[it.size() + j] * Rational(params[j]);
  return v;
}

/// Instance-wise legality: every dependence instance is mapped to a
/// lexicographically later schedule vector.
inline bool simulatedLegal(const Program &prog, const AffineTransform &t,
                           const std::vector<Int> &params) {
  // Explicit dependences describe a cycle the access simulation cannot see.
  auto instances = prog.dependences
                       ? polyhedraPoints(prog, computeDependences(prog), params)
                       : simulateDependences(prog, params);
  for (const auto &[a, b, kind, x, y] : instances) {
    if (kind == static_cast<int>(DepKind::RAR))
      continue;
    std::vector<Rational> sa, sb;
    for (std::size_t l = 0; l < t.numLevels(); ++l) {
      sa.push_back(rowAt(t.rows[a][l], x, params));
      sb.push_back(rowAt(t.rows[b][l], y, params));
    }
    if (sb < sa || sa == sb)
      return false;
  }
  return true;
}

inline std::vector<Rational> rats(std::initializer_list<Int> v) {
  std::vector<Rational> out;
  for (Int x : v)
    out.emplace_back(x);
  return out;
}

} // namespace testing_support
