#pragma once

// JSON program reader and memory-based dependence analysis.

#include "polysched/errors.hpp"
#include "polysched/model.hpp"
#include "polysched/ratlp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace polysched {

namespace detail {

using json = nlohmann::json;

inline std::string at(const std::string &path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline std::vector<Int> intRow(const json &row, std::size_t width,
                               const std::string &where) {
  if (!row.is_array())
    throw ParseError(where + ": expected an array of integers");
  if (row.size() != width)
    throw ParseError(where + ": expected " + std::to_string(width) +
                     " coefficients, got " + std::to_string(row.size()));
  std::vector<Int> out;
  out.reserve(width);
  for (std::size_t i = 0; i < width; ++i) {
    if (!row[i].is_number_integer())
      throw ParseError(at(where, i) + ": coefficient must be an integer");
    out.push_back(row[i].get<Int>());
  }
  return out;
}

/// `[c_1, ..., c_n, const, rel]` with rel one of "<=", ">=", "==".
inline AffineConstraint constraintRow(const json &row, std::size_t width,
                                      const std::string &where) {
  if (!row.is_array() || row.empty() || !row.back().is_string())
    throw ParseError(where + ": expected [coefficients..., constant, rel]");
  json nums = row;
  std::string rel = nums.back().get<std::string>();
  nums.erase(nums.end() - 1);
  AffineConstraint c{intRow(nums, width, where), Relation::GreaterEqual};
  if (rel == ">=") {
  } else if (rel == "<=") {
    for (auto &x : c.coeffs)
      x = -x;
  } else if (rel == "==") {
    c.rel = Relation::Equal;
  } else {
    throw ParseError(where + ": unknown relation '" + rel + "'");
  }
  return c;
}

inline std::vector<std::string> nameList(const json &j, const std::string &where) {
  if (!j.is_array())
    throw ParseError(where + ": expected an array of names");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string())
      throw ParseError(at(where, i) + ": expected a string");
    auto n = j[i].get<std::string>();
    if (!seen.insert(n).second)
      throw ParseError(at(where, i) + ": duplicate name '" + n + "'");
    out.push_back(std::move(n));
  }
  return out;
}

inline const json &field(const json &obj, const char *name,
                         const std::string &where) {
  if (!obj.is_object())
    throw ParseError(where + ": expected an object");
  auto it = obj.find(name);
  if (it == obj.end())
    throw ParseError(where + ": missing field '" + name + "'");
  return *it;
}

inline DepKind depKindFromString(const std::string &s, const std::string &where) {
  if (s == "RAW")
    return DepKind::RAW;
  if (s == "WAR")
    return DepKind::WAR;
  if (s == "WAW")
    return DepKind::WAW;
  if (s == "RAR")
    return DepKind::RAR;
  throw ParseError(where + ": unknown dependence kind '" + s + "'");
}

inline bool rationallyFeasible(const DependencePolyhedron &dep,
                               const Program &prog) {
  LPProblem p;
  p.system = dependenceSystem(dep, prog);
  return solveLP(p).optimal();
}

} // namespace detail

/// Parses and validates a program in the JSON input format.
inline Program parseProgram(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw ParseError("$: expected a JSON object");

  Program prog;
  if (doc.contains("params"))
    prog.params = detail::nameList(doc["params"], "params");
  const std::size_t np = prog.params.size();

  const json &stmts = detail::field(doc, "statements", "$");
  if (!stmts.is_array())
    throw ParseError("statements: expected an array");
  std::set<std::string> ids;
  for (std::size_t si = 0; si < stmts.size(); ++si) {
    const json &js = stmts[si];
    const std::string where = detail::at("statements", si);
    Statement s;
    const json &id = detail::field(js, "id", where);
    if (!id.is_string())
      throw ParseError(where + ".id: expected a string");
    s.id = id.get<std::string>();
    if (!ids.insert(s.id).second)
      throw ParseError(where + ": duplicate statement id '" + s.id + "'");
    const std::string sw = where + " (" + s.id + ")";
    s.domain.iterators =
        detail::nameList(detail::field(js, "iterators", sw), sw + ".iterators");
    for (const auto &it : s.domain.iterators)
      if (std::find(prog.params.begin(), prog.params.end(), it) !=
          prog.params.end())
        throw ParseError(sw + ": iterator '" + it + "' shadows a parameter");
    s.domain.params = prog.params;
    const std::size_t width = s.dim() + np + 1;
    if (js.contains("domain")) {
      const json &dom = js["domain"];
      if (!dom.is_array())
        throw ParseError(sw + ".domain: expected an array of rows");
      for (std::size_t r = 0; r < dom.size(); ++r)
        s.domain.constraints.push_back(
            detail::constraintRow(dom[r], width, detail::at(sw + ".domain", r)));
    }
    if (js.contains("accesses")) {
      const json &acc = js["accesses"];
      if (!acc.is_array())
        throw ParseError(sw + ".accesses: expected an array");
      for (std::size_t a = 0; a < acc.size(); ++a) {
        const std::string aw = detail::at(sw + ".accesses", a);
        Access access;
        const json &arr = detail::field(acc[a], "array", aw);
        if (!arr.is_string())
          throw ParseError(aw + ".array: expected a string");
        access.array = arr.get<std::string>();
        const json &kind = detail::field(acc[a], "kind", aw);
        if (kind == "read")
          access.kind = AccessKind::Read;
        else if (kind == "write")
          access.kind = AccessKind::Write;
        else
          throw ParseError(aw + ".kind: expected \"read\" or \"write\"");
        const json &map = detail::field(acc[a], "map", aw);
        if (!map.is_array())
          throw ParseError(aw + ".map: expected an array of rows");
        for (std::size_t r = 0; r < map.size(); ++r)
          access.map.push_back(
              detail::intRow(map[r], width, detail::at(aw + ".map", r)));
        s.accesses.push_back(std::move(access));
      }
    }
    if (js.contains("order")) {
      if (!js["order"].is_number_integer() || js["order"].get<Int>() < 0)
        throw ParseError(sw + ".order: expected a non-negative integer");
      s.order = js["order"].get<int>();
    } else {
      s.order = static_cast<int>(si);
    }
    prog.statements.push_back(std::move(s));
  }
  std::stable_sort(prog.statements.begin(), prog.statements.end(),
                   [](const Statement &a, const Statement &b) {
                     return a.order < b.order;
                   });

  if (doc.contains("dependences")) {
    const json &deps = doc["dependences"];
    if (!deps.is_array())
      throw ParseError("dependences: expected an array");
    std::vector<DependencePolyhedron> out;
    for (std::size_t d = 0; d < deps.size(); ++d) {
      const std::string dw = detail::at("dependences", d);
      DependencePolyhedron dep;
      auto stmtRef = [&](const char *name) {
        const json &j = detail::field(deps[d], name, dw);
        if (!j.is_string())
          throw ParseError(dw + "." + name + ": expected a statement id");
        auto idx = prog.indexOf(j.get<std::string>());
        if (!idx)
          throw ParseError(dw + "." + name + ": unknown statement '" +
                           j.get<std::string>() + "'");
        return *idx;
      };
      dep.src = stmtRef("src");
      dep.dst = stmtRef("dst");
      const json &kind = detail::field(deps[d], "kind", dw);
      if (!kind.is_string())
        throw ParseError(dw + ".kind: expected a string");
      dep.kind = detail::depKindFromString(kind.get<std::string>(), dw + ".kind");
      const std::size_t width = prog.statements[dep.src].dim() +
                                prog.statements[dep.dst].dim() + np + 1;
      const json &rel = detail::field(deps[d], "relation", dw);
      if (!rel.is_array())
        throw ParseError(dw + ".relation: expected an array of rows");
      for (std::size_t r = 0; r < rel.size(); ++r)
        dep.relation.push_back(
            detail::constraintRow(rel[r], width, detail::at(dw + ".relation", r)));
      if (!detail::rationallyFeasible(dep, prog))
        throw ParseError(dw + ": dependence relation is empty");
      out.push_back(std::move(dep));
    }
    prog.dependences = std::move(out);
  }
  return prog;
}

inline Program loadProgram(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseProgram(ss.str());
}

namespace detail {

/// Lifts a row over (iterators of one statement, params, const) into the
/// dependence space (src iterators, dst iterators, params, const).
inline std::vector<Int> liftRow(const std::vector<Int> &row, std::size_t dim,
                                std::size_t offset, std::size_t ms,
                                std::size_t mt, std::size_t np) {
  std::vector<Int> out(ms + mt + np + 1, 0);
  for (std::size_t i = 0; i < dim; ++i)
    out[offset + i] = row[i];
  for (std::size_t j = 0; j <= np; ++j)
    out[ms + mt + j] = row[dim + j];
  return out;
}

inline DepKind classify(AccessKind from, AccessKind to) {
  if (from == AccessKind::Write)
    return to == AccessKind::Read ? DepKind::RAW : DepKind::WAW;
  return to == AccessKind::Write ? DepKind::WAR : DepKind::RAR;
}

} // namespace detail

/// Memory-based dependences between every pair of conflicting accesses.
/// Different statements execute in textual order; instances of the same
/// statement in lexicographic order, one polyhedron per leading level.
/// Read-after-read pairs are kept between distinct statements only.
inline DDG computeDependences(const Program &prog) {
  const std::size_t n = prog.statements.size();
  if (prog.dependences)
    return DDG(n, *prog.dependences);
  const std::size_t np = prog.numParams();
  std::vector<DependencePolyhedron> deps;

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const Statement &sa = prog.statements[a];
      const Statement &sb = prog.statements[b];
      const std::size_t ms = sa.dim(), mt = sb.dim();
      std::vector<AffineConstraint> base;
      for (const auto &c : sa.domain.constraints)
        base.push_back({detail::liftRow(c.coeffs, ms, 0, ms, mt, np), c.rel});
      for (const auto &c : sb.domain.constraints)
        base.push_back({detail::liftRow(c.coeffs, mt, ms, ms, mt, np), c.rel});

      for (std::size_t x = 0; x < sa.accesses.size(); ++x) {
        for (std::size_t y = 0; y < sb.accesses.size(); ++y) {
          const Access &ax = sa.accesses[x];
          const Access &ay = sb.accesses[y];
          if (ax.array != ay.array)
            continue;
          const DepKind kind = detail::classify(ax.kind, ay.kind);
          if (kind == DepKind::RAR && a == b)
            continue;
          if (ax.map.size() != ay.map.size())
            throw ParseError("array '" + ax.array +
                             "' accessed with different ranks in " + sa.id +
                             " and " + sb.id);
          std::vector<AffineConstraint> rel = base;
          for (std::size_t r = 0; r < ax.map.size(); ++r) {
            auto lhs = detail::liftRow(ax.map[r], ms, 0, ms, mt, np);
            auto rhs = detail::liftRow(ay.map[r], mt, ms, ms, mt, np);
            for (std::size_t k = 0; k < lhs.size(); ++k)
              lhs[k] -= rhs[k];
            rel.push_back({std::move(lhs), Relation::Equal});
          }
          if (a != b) {
            DependencePolyhedron dep{a, b, kind, std::move(rel), std::nullopt};
            if (detail::rationallyFeasible(dep, prog))
              deps.push_back(std::move(dep));
            continue;
          }
          // Same statement: one piece per leading level k, s < t lexicographically.
          for (std::size_t k = 0; k < ms; ++k) {
            std::vector<AffineConstraint> piece = rel;
            for (std::size_t l = 0; l < k; ++l) {
              std::vector<Int> eq(ms + mt + np + 1, 0);
              eq[ms + l] = 1;
              eq[l] = -1;
              piece.push_back({std::move(eq), Relation::Equal});
            }
            std::vector<Int> lt(ms + mt + np + 1, 0);
            lt[ms + k] = 1;
            lt[k] = -1;
            lt.back() = -1;
            piece.push_back({std::move(lt), Relation::GreaterEqual});
            DependencePolyhedron dep{a, a, kind, std::move(piece), std::nullopt};
            if (detail::rationallyFeasible(dep, prog))
              deps.push_back(std::move(dep));
          }
        }
      }
    }
  }
  return DDG(n, std::move(deps));
}

} // namespace polysched
