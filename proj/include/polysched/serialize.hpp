#pragma once

// JSON for programs, transforms and DDGs; DOT for the fusion conflict graph.

#include "polysched/errors.hpp"
#include "polysched/fcg.hpp"
#include "polysched/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polysched {

using nlohmann::json;

namespace detail {

inline json constraintJson(const AffineConstraint &c) {
  json row = json::array();
  for (Int v : c.coeffs)
    row.push_back(v);
  row.push_back(c.rel == Relation::Equal ? "==" : ">=");
  return row;
}

inline std::vector<std::string> groupIds(const Program &prog,
                                         const std::vector<std::size_t> &g) {
  std::vector<std::string> out;
  for (std::size_t s : g)
    out.push_back(prog.statements[s].id);
  return out;
}

inline std::size_t statementIndex(const Program &prog, const json &id,
                                  const std::string &where) {
  if (!id.is_string())
    throw ParseError(where + ": expected a statement id");
  auto idx = prog.indexOf(id.get<std::string>());
  if (!idx)
    throw ParseError(where + ": unknown statement '" + id.get<std::string>() + "'");
  return *idx;
}

} // namespace detail

/// Inverse of parseProgram (explicit dependences included when present).
inline json programToJson(const Program &prog) {
  json stmts = json::array();
  for (const auto &s : prog.statements) {
    json dom = json::array();
    for (const auto &c : s.domain.constraints)
      dom.push_back(detail::constraintJson(c));
    json accs = json::array();
    for (const auto &a : s.accesses)
      accs.push_back({{"array", a.array},
                      {"kind", a.kind == AccessKind::Read ? "read" : "write"},
                      {"map", a.map}});
    stmts.push_back({{"id", s.id},
                     {"iterators", s.domain.iterators},
                     {"domain", dom},
                     {"accesses", accs},
                     {"order", s.order}});
  }
  json out = {{"params", prog.params}, {"statements", stmts}};
  if (prog.dependences) {
    json deps = json::array();
    for (const auto &d : *prog.dependences) {
      json rel = json::array();
      for (const auto &c : d.relation)
        rel.push_back(detail::constraintJson(c));
      deps.push_back({{"src", prog.statements[d.src].id},
                      {"dst", prog.statements[d.dst].id},
                      {"kind", toString(d.kind)},
                      {"relation", rel}});
    }
    out["dependences"] = deps;
  }
  return out;
}

inline json transformToJson(const Program &prog, const AffineTransform &t) {
  json stmts = json::array();
  for (std::size_t s = 0; s < prog.statements.size(); ++s) {
    json rows = json::array();
    for (const auto &h : t.rows[s]) {
      json row = json::array();
      for (const auto &v : h)
        row.push_back(v.str());
      rows.push_back(row);
    }
    stmts.push_back({{"id", prog.statements[s].id}, {"rows", rows}});
  }
  json levels = json::array();
  for (std::size_t l = 0; l < t.numLevels(); ++l)
    levels.push_back({{"kind", t.levelKinds[l] == LevelKind::Loop ? "loop" : "scalar"},
                      {"parallel", static_cast<bool>(t.parallel[l])}});
  json bands = json::array();
  for (const auto &b : t.bands)
    bands.push_back({{"start", b.start},
                     {"end", b.end},
                     {"parallel", b.parallel},
                     {"permutable", b.permutable}});
  json cuts = json::array();
  for (const auto &c : t.cuts) {
    json parts = json::array();
    for (const auto &g : c.partition)
      parts.push_back(detail::groupIds(prog, g));
    cuts.push_back({{"level", c.level}, {"partition", parts}});
  }
  return {{"statements", stmts}, {"levels", levels}, {"bands", bands}, {"cuts", cuts}};
}

inline AffineTransform transformFromJson(const Program &prog, const json &j) {
  try {
    const std::size_t n = prog.statements.size();
    AffineTransform t = emptyTransform(n);
    for (const auto &lv : j.at("levels")) {
      const std::string kind = lv.at("kind").get<std::string>();
      if (kind != "loop" && kind != "scalar")
        throw ParseError("levels: unknown kind '" + kind + "'");
      t.levelKinds.push_back(kind == "loop" ? LevelKind::Loop : LevelKind::Scalar);
      t.parallel.push_back(lv.at("parallel").get<bool>());
    }
    const json &stmts = j.at("statements");
    if (stmts.size() != n)
      throw ParseError("statements: expected " + std::to_string(n) + " entries");
    for (const auto &js : stmts) {
      std::size_t s = detail::statementIndex(prog, js.at("id"), "statements");
      const std::size_t width = prog.statements[s].dim() + prog.numParams() + 1;
      for (const auto &row : js.at("rows")) {
        if (row.size() != width)
          throw ParseError("rows of " + prog.statements[s].id + ": expected " +
                           std::to_string(width) + " entries");
        Hyperplane h;
        for (const auto &v : row)
          h.push_back(Rational::parse(v.get<std::string>()));
        t.rows[s].push_back(std::move(h));
      }
      if (t.rows[s].size() != t.numLevels())
        throw ParseError("rows of " + prog.statements[s].id +
                         ": one row per level expected");
    }
    for (const auto &b : j.at("bands"))
      t.bands.push_back({b.at("start").get<std::size_t>(), b.at("end").get<std::size_t>(),
                         b.at("permutable").get<bool>(), b.at("parallel").get<bool>()});
    for (const auto &c : j.at("cuts")) {
      CutRecord rec;
      rec.level = c.at("level").get<std::size_t>();
      for (const auto &g : c.at("partition")) {
        std::vector<std::size_t> group;
        for (const auto &id : g)
          group.push_back(detail::statementIndex(prog, id, "cuts"));
        rec.partition.push_back(std::move(group));
      }
      t.cuts.push_back(std::move(rec));
    }
    return t;
  } catch (const json::exception &e) {
    throw ParseError(std::string("transform: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw ParseError(std::string("transform: ") + e.what());
  }
}

inline json ddgToJson(const Program &prog, const DDG &ddg) {
  json edges = json::array();
  for (const auto &d : ddg.edges()) {
    json rel = json::array();
    for (const auto &c : d.relation)
      rel.push_back(detail::constraintJson(c));
    json e = {{"src", prog.statements[d.src].id},
              {"dst", prog.statements[d.dst].id},
              {"kind", toString(d.kind)},
              {"relation", rel}};
    if (d.satisfiedAtLevel)
      e["satisfied_at"] = *d.satisfiedAtLevel;
    edges.push_back(std::move(e));
  }
  json sccs = json::array();
  for (const auto &c : ddg.sccs().components)
    sccs.push_back(detail::groupIds(prog, c));
  json ids = json::array();
  for (const auto &s : prog.statements)
    ids.push_back(s.id);
  return {{"statements", ids}, {"dependences", edges}, {"sccs", sccs}};
}

/// Graphviz text: a cluster per statement, conflict edges solid, same-statement
/// clique edges dashed, vertices filled by color index.
inline std::string fcgToDot(const Program &prog, const FusionConflictGraph &g,
                            const Coloring &col) {
  static const char *palette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                  "#ff7f00", "#ffff33", "#a65628", "#f781bf"};
  std::ostringstream os;
  os << "graph fcg {\n  node [style=filled];\n";
  for (std::size_t s = 0; s < prog.statements.size(); ++s) {
    os << "  subgraph cluster_" << s << " {\n    label=\"" << prog.statements[s].id
       << "\";\n";
    for (std::size_t i = 0; i < prog.statements[s].dim(); ++i) {
      std::size_t v = g.vertex(s, i);
      os << "    v" << v << " [label=\"" << g.vertexName(prog, v) << "\"";
      if (col.colorOf[v]) {
        os << ", fillcolor=\"" << palette[*col.colorOf[v] % std::size(palette)]
           << "\", color_index=" << *col.colorOf[v];
      } else {
        os << ", fillcolor=\"white\"";
      }
      os << "];\n";
    }
    os << "  }\n";
  }
  for (const auto &e : g.edges())
    os << "  v" << e.a << " -- v" << e.b
       << (e.intraStatement ? " [style=dashed]" : "") << ";\n";
  os << "}\n";
  return os.str();
}

} // namespace polysched
