#include "polysched.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <string>

using namespace polysched;

namespace {

enum Exit { Ok = 0, VerifyFailed = 1, InputError = 2, Internal = 3 };

json fcgJson(const Program &prog, const ColoringResult &res) {
  json vertices = json::array();
  for (std::size_t v = 0; v < res.fcg.numVertices(); ++v) {
    json col = res.coloring.colorOf[v] ? json(*res.coloring.colorOf[v]) : json(nullptr);
    vertices.push_back({{"name", res.fcg.vertexName(prog, v)}, {"color", col}});
  }
  json edges = json::array();
  for (const auto &e : res.fcg.edges())
    edges.push_back({{"a", res.fcg.vertexName(prog, e.a)},
                     {"b", res.fcg.vertexName(prog, e.b)},
                     {"kind", e.a == e.b ? "self"
                              : e.intraStatement ? "intra"
                                                 : "conflict"}});
  return {{"vertices", vertices}, {"edges", edges}};
}

int runSchedule(const std::string &file, const std::string &algo) {
  Program prog = loadProgram(file);
  DDG ddg = computeDependences(prog);
  json out;
  if (algo == "dfp") {
    DfpResult r = scheduleDfp(prog, ddg);
    out = transformToJson(prog, r.transform());
    if (r.skew.diagnostic) {
      out["diagnostic"] = *r.skew.diagnostic;
      std::cerr << "warning: " << *r.skew.diagnostic << "\n";
    }
  } else {
    SchedulerConfig cfg;
    cfg.mode = algo == "ilp" ? SolveMode::ILP : SolveMode::LP;
    out = transformToJson(prog, schedule(prog, ddg, cfg).transform);
  }
  out["algo"] = algo;
  std::cout << out.dump(2) << "\n";
  return Ok;
}

int runFcg(const std::string &file, bool dot) {
  Program prog = loadProgram(file);
  DDG ddg = computeDependences(prog);
  FarkasCache cache(prog);
  ColoringResult res = permuteAndFuse(prog, ddg, cache);
  if (dot)
    std::cout << fcgToDot(prog, res.fcg, res.coloring);
  else
    std::cout << fcgJson(prog, res).dump(2) << "\n";
  return Ok;
}

int runVerify(const std::string &dir, bool asJson) {
  SuiteReport rep = checkSuite(loadCorpus(dir));
  if (asJson)
    std::cout << toJson(rep).dump(2) << "\n";
  else
    std::cout << summary(rep);
  return rep.ok() ? Ok : VerifyFailed;
}

int runBench(const std::string &file, int repeat) {
  Program prog = loadProgram(file);
  DDG ddg = computeDependences(prog);
  auto time = [&](auto &&fn) {
    double best = 1e300;
    for (int k = 0; k < repeat; ++k) {
      auto t0 = std::chrono::steady_clock::now();
      fn();
      auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };
  SchedulerConfig ilp, lp;
  ilp.mode = SolveMode::ILP;
  lp.mode = SolveMode::LP;
  json out = {
      {"file", file},
      {"repeat", repeat},
      {"seconds",
       {{"ilp", time([&] { (void)schedule(prog, ddg, ilp); })},
        {"lp", time([&] { (void)schedule(prog, ddg, lp); })},
        {"dfp", time([&] { (void)scheduleDfp(prog, ddg); })}}}};
  std::cout << out.dump(2) << "\n";
  return Ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Polyhedral loop scheduler: pluto-style ILP/LP and conflict-graph fusion"};
  app.require_subcommand(1);

  std::string file, algo = "dfp", corpus = POLYSCHED_CORPUS_DIR;
  bool dot = false, asJson = false;
  int repeat = 3;

  auto *sched = app.add_subcommand("schedule", "Emit the affine transform as JSON");
  sched->add_option("file", file, "Program JSON")->required();
  sched->add_option("--algo", algo, "Scheduler")
      ->check(CLI::IsMember({"ilp", "lp", "dfp"}));
  auto *deps = app.add_subcommand("deps", "Emit the dependence graph as JSON");
  deps->add_option("file", file, "Program JSON")->required();
  auto *fcg = app.add_subcommand("fcg", "Emit the colored fusion conflict graph");
  fcg->add_option("file", file, "Program JSON")->required();
  fcg->add_flag("--dot", dot, "Graphviz output instead of JSON");
  auto *verify = app.add_subcommand("verify", "Run the check suite over a corpus");
  verify->add_option("--corpus", corpus, "Directory of program JSON files");
  verify->add_flag("--json", asJson, "JSON report instead of text");
  auto *bench = app.add_subcommand("bench", "Time the ilp, lp and dfp paths");
  bench->add_option("file", file, "Program JSON")->required();
  bench->add_option("--repeat", repeat, "Runs per path (best is reported)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? Ok : InputError;
  }

  try {
    if (*sched)
      return runSchedule(file, algo);
    if (*deps) {
      Program prog = loadProgram(file);
      std::cout << ddgToJson(prog, computeDependences(prog)).dump(2) << "\n";
      return Ok;
    }
    if (*fcg)
      return runFcg(file, dot);
    if (*verify)
      return runVerify(corpus, asJson);
    if (*bench)
      return runBench(file, repeat);
  } catch (const ParseError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return InputError;
  } catch (const ResourceLimitError &e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return Internal;
  } catch (const InternalError &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return Internal;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return Internal;
  }
  return Internal;
}
