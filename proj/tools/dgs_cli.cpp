// Command-line front end: generate | solve | bench | analyze.

#include "dgs/dgs.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace dgs;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << Json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

std::vector<std::size_t> parse_order(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw CliError("invalid --sor-order entry '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(Method::parse(tok));
  if (out.empty()) throw CliError("no method given");
  return out;
}

/// Flags shared by the subcommands. Values left unset keep the config
/// file's (or the defaults').
struct Common {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::optional<double> eta_r;
  std::optional<double> eta_p;
  std::optional<double> gamma;
  std::optional<std::string> method;
  std::optional<bool> flagged;
  std::optional<std::string> sor_order;
  std::optional<std::size_t> grid;
  std::optional<std::uint32_t> tracks;
  std::optional<double> sigma_r;
  std::optional<double> sigma_t;
  std::optional<std::uint32_t> poses;

  void add_to(CLI::App* app, bool solver_flags) {
    app->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--out-dir", out_dir, "output directory (default: $DGS_OUTPUT_DIR or .)");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--grid", grid, "Grid3D scenario with this many robots");
    app->add_option("--tracks", tracks, "ParallelTracks scenario with this many links");
    app->add_option("--sigma-r", sigma_r, "rotation noise (deg)");
    app->add_option("--sigma-t", sigma_t, "translation noise (m)");
    app->add_option("--poses", poses, "poses per robot");
    if (!solver_flags) return;
    app->add_option("--eta", eta, "stopping threshold for both phases");
    app->add_option("--eta-r", eta_r, "rotation-phase stopping threshold");
    app->add_option("--eta-p", eta_p, "pose-phase stopping threshold");
    app->add_option("--gamma", gamma, "relaxation factor");
    app->add_option("--method", method, "dgs | dj | jor(g) | sor(g) | two_stage | gn (comma list for bench)");
    app->add_flag("--flagged,!--no-flagged", flagged, "flagged initialization");
    app->add_option("--sor-order", sor_order, "robot visiting order, e.g. 0,2,1,3");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (grid && tracks) throw CliError("--grid and --tracks are exclusive");
    if (grid) {
      c.scenario.kind = ScenarioKind::Grid3D;
      c.scenario.robot_count = *grid;
    }
    if (tracks) {
      c.scenario.kind = ScenarioKind::ParallelTracks;
      c.scenario.robot_count = 2;
      c.scenario.link_count = *tracks;
    }
    if (seed) c.seed = c.scenario.rng_seed = *seed;
    if (sigma_r) c.scenario.sigma_r_deg = *sigma_r;
    if (sigma_t) c.scenario.sigma_t = *sigma_t;
    if (poses) c.scenario.poses_per_robot = *poses;
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (method) c.methods = parse_methods(*method);
    if (eta) c.solver.eta_r = c.solver.eta_p = *eta;
    if (eta_r) c.solver.eta_r = *eta_r;
    if (eta_p) c.solver.eta_p = *eta_p;
    if (gamma) {
      c.solver.gamma = *gamma;
      for (auto& m : c.methods)
        if (m.kind == MethodKind::JOR || m.kind == MethodKind::SOR) m.gamma = *gamma;
    }
    if (flagged) c.solver.flagged_init = *flagged;
    if (sor_order) c.solver.sor_order = parse_order(*sor_order);
    c.validate();
    return c;
  }
};

std::string to_text(const std::function<void(std::ostream&)>& f) {
  std::ostringstream out;
  f(out);
  return out.str();
}

// The output location does not affect results, so it stays out of the
// manifest and its hash.
void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c) {
  Json config = to_json(c);
  config.erase("output_dir");
  write_text_file(dir / "manifest.json", make_manifest(command, config, c.seed).dump(2) + "\n");
}

int cmd_generate(const Common& common, bool objects) {
  const RunConfig c = common.resolve();
  const fs::path dir = resolve_output_dir(c.output_dir);
  MultiRobotGraph graph;
  Estimate truth;
  if (objects) {
    ObjectSceneSpec spec;
    spec.rng_seed = c.scenario.rng_seed;
    if (common.sigma_r) spec.sigma_r_deg = *common.sigma_r;
    if (common.sigma_t) spec.sigma_t = *common.sigma_t;
    if (common.poses) spec.poses_per_robot = *common.poses;
    ObjectScene sc = generate_object_scene(spec);
    graph = std::move(sc.graph);
    truth = std::move(sc.ground_truth);
  } else {
    Scenario sc = generate_scenario(c.scenario);
    graph = std::move(sc.graph);
    truth = std::move(sc.ground_truth);
  }
  write_text_file(dir / "graph.g2o", to_text([&](std::ostream& o) { write_graph(o, graph); }));
  write_text_file(dir / "ground_truth.g2o", to_text([&](std::ostream& o) { write_estimate(o, truth); }));
  write_manifest(dir, objects ? "generate --objects" : "generate", c);
  std::cout << Json{{"graph", (dir / "graph.g2o").string()},
                    {"ground_truth", (dir / "ground_truth.g2o").string()},
                    {"vertices", graph.vertices().size()},
                    {"edges", graph.edges().size()},
                    {"robots", graph.robot_count()}}
                   .dump()
            << '\n';
  return 0;
}

MultiRobotGraph load_or_generate(const std::string& graph_path, const RunConfig& c) {
  if (!graph_path.empty()) return parse_graph_file(graph_path).graph;
  return generate_scenario(c.scenario).graph;
}

int cmd_solve(const Common& common, const std::string& graph_path) {
  const RunConfig c = common.resolve();
  if (c.methods.size() != 1) throw CliError("solve takes exactly one method");
  const Method m = c.methods.front();
  const MultiRobotGraph graph = load_or_generate(graph_path, c);
  const fs::path dir = resolve_output_dir(c.output_dir);

  Json result{{"method", m.name()}};
  Estimate estimate;
  if (m.distributed()) {
    const DistributedResult d = run_distributed_two_stage(graph, method_config(m, c.solver));
    estimate = d.estimate;
    write_text_file(dir / "trace.csv", to_text([&](std::ostream& o) { write_trace_csv(o, d); }));
    write_text_file(dir / "ledger.csv",
                    to_text([&](std::ostream& o) { write_ledger_csv(o, d.ledger, d.separator_counts); }));
    result["rotation_iterations"] = d.rotation_iterations();
    result["pose_iterations"] = d.pose_iterations();
    result["bytes"] = d.ledger.total_bytes();
    result["converged"] = d.converged;
    result["diverged"] = d.diverged;
    if (d.diverged) {
      write_text_file(dir / "result.json", result.dump(2) + "\n");
      write_manifest(dir, "solve", c);
      return fail("diverged", "the " + m.name() + " iterations diverged", 3);
    }
  } else {
    const MethodRun run = run_method(graph, m, c.solver);
    estimate = run.estimate;
    result["gn_iterations"] = run.result.pose_iterations;
    result["converged"] = run.result.converged;
    result["diverged"] = run.result.diverged;
  }
  result["cost"] = graph_cost(graph, estimate);
  write_text_file(dir / "estimate.g2o", to_text([&](std::ostream& o) { write_estimate(o, estimate); }));
  write_text_file(dir / "result.json", result.dump(2) + "\n");
  write_manifest(dir, "solve", c);
  std::cout << result.dump() << '\n';
  return 0;
}

int cmd_bench(const Common& common, std::size_t runs, unsigned threads) {
  RunConfig c = common.resolve();
  if (runs) c.runs = runs;
  if (threads) c.threads = threads;
  c.validate();
  std::vector<ScenarioSpec> specs;
  for (std::size_t i = 0; i < c.runs; ++i) {
    ScenarioSpec s = c.scenario;
    s.rng_seed = monte_carlo_seed(c.scenario.rng_seed, i);
    specs.push_back(s);
  }
  const auto rows = build_comparison_table(specs, c.methods, c.solver, c.threads);
  const fs::path dir = resolve_output_dir(c.output_dir);
  write_text_file(dir / "bench.csv", to_text([&](std::ostream& o) { write_bench_csv(o, rows); }));
  write_manifest(dir, "bench", c);
  Json summary = Json::object();
  for (std::size_t k = 0; k < c.methods.size(); ++k) {
    std::vector<double> cost;
    std::vector<double> iters;
    for (const auto& r : rows) {
      cost.push_back(r.results[k].cost);
      iters.push_back(r.results[k].rotation_iterations + r.results[k].pose_iterations);
    }
    const Statistic sc = summarize(cost);
    const Statistic si = summarize(iters);
    summary[c.methods[k].name()] = {{"mean_cost", sc.mean}, {"mean_iterations", si.mean}};
  }
  std::cout << Json{{"csv", (dir / "bench.csv").string()}, {"runs", c.runs}, {"summary", summary}}.dump() << '\n';
  return 0;
}

int cmd_analyze(const Common& common, const std::string& graph_path, const std::vector<double>& gammas,
                const std::string& system) {
  const RunConfig c = common.resolve();
  const MultiRobotGraph graph = load_or_generate(graph_path, c);
  BlockLinearSystem sys;
  if (system == "rotation") {
    sys = build_rotation_system(graph);
  } else if (system == "pose") {
    const BlockLinearSystem rot = build_rotation_system(graph);
    sys = build_pose_system(graph, project_rotations(relaxed_rotations(rot, direct_solve(rot))));
  } else {
    throw CliError("--system must be 'rotation' or 'pose'");
  }
  Json rows = Json::array();
  for (double g : gammas) {
    const ConvergenceDiagnostics d = jor_convergence_matrix(sys, g);
    rows.push_back({{"gamma", g},
                    {"spectral_radius", d.spectral_radius},
                    {"jor_converges", d.spectral_radius < 1.0},
                    {"dense_fallback", d.used_dense_fallback}});
  }
  const Json out{{"system", system}, {"variables", sys.size()}, {"robots", sys.robot_count()}, {"jor", rows}};
  if (!c.output_dir.empty() || std::getenv("DGS_OUTPUT_DIR")) {
    const fs::path dir = resolve_output_dir(c.output_dir);
    write_text_file(dir / "analysis.json", out.dump(2) + "\n");
    write_manifest(dir, "analyze", c);
  }
  std::cout << out.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed chordal pose-graph optimization simulator"};
  app.require_subcommand(1);

  Common gen_opts;
  bool objects = false;
  auto* gen = app.add_subcommand("generate", "write a scenario graph and its ground truth");
  gen_opts.add_to(gen, false);
  gen->add_flag("--objects", objects, "two-robot object scene instead of a pose-only scenario");

  Common solve_opts;
  std::string solve_graph;
  auto* solve = app.add_subcommand("solve", "solve a graph with one method");
  solve_opts.add_to(solve, true);
  solve->add_option("--graph", solve_graph, "graph file (default: generate from the scenario flags)")
      ->check(CLI::ExistingFile);

  Common bench_opts;
  std::size_t runs = 0;
  unsigned threads = 0;
  auto* bench = app.add_subcommand("bench", "Monte Carlo comparison table as CSV");
  bench_opts.add_to(bench, true);
  bench->add_option("--runs", runs, "Monte Carlo runs");
  bench->add_option("--threads", threads, "worker threads (default: hardware concurrency)");

  Common analyze_opts;
  std::string analyze_graph;
  std::vector<double> gammas{1.0};
  std::string system = "rotation";
  auto* analyze = app.add_subcommand("analyze", "spectral radius of the JOR iteration matrix");
  analyze_opts.add_to(analyze, false);
  analyze->add_option("--graph", analyze_graph, "graph file")->check(CLI::ExistingFile);
  analyze->add_option("--gamma", gammas, "relaxation factors")->expected(1, -1);
  analyze->add_option("--system", system, "rotation | pose");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*gen) return cmd_generate(gen_opts, objects);
    if (*solve) return cmd_solve(solve_opts, solve_graph);
    if (*bench) {
      if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
      return cmd_bench(bench_opts, runs, threads);
    }
    if (*analyze) return cmd_analyze(analyze_opts, analyze_graph, gammas, system);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 1);
  } catch (const CliError& e) {
    return fail("usage", e.what(), 2);
  } catch (const GraphError& e) {
    return fail("invalid_input", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
