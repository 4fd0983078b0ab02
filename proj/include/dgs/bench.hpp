#ifndef DGS_BENCH_HPP
#define DGS_BENCH_HPP

#include "dgs/chordal.hpp"
#include "dgs/metrics.hpp"
#include "dgs/runtime.hpp"
#include "dgs/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

namespace dgs {

enum class MethodKind { DGS, DJ, JOR, SOR, TwoStage, GN };

struct Method {
  MethodKind kind = MethodKind::DGS;
  double gamma = 1.0;  // JOR and SOR only

  bool distributed() const { return kind != MethodKind::TwoStage && kind != MethodKind::GN; }

  std::string name() const {
    char buf[64];
    switch (kind) {
      case MethodKind::DGS: return "dgs";
      case MethodKind::DJ: return "dj";
      case MethodKind::JOR: std::snprintf(buf, sizeof buf, "jor(%g)", gamma); return buf;
      case MethodKind::SOR: std::snprintf(buf, sizeof buf, "sor(%g)", gamma); return buf;
      case MethodKind::TwoStage: return "two_stage";
      case MethodKind::GN: return "gn";
    }
    return "unknown";
  }

  /// Accepts dgs, dj, two_stage, gn, jor, sor, jor(g), sor(g) (case-sensitive).
  static Method parse(const std::string& text) {
    if (text == "dgs") return {MethodKind::DGS};
    if (text == "dj") return {MethodKind::DJ};
    if (text == "two_stage" || text == "two-stage") return {MethodKind::TwoStage};
    if (text == "gn") return {MethodKind::GN};
    for (auto [prefix, kind] : {std::pair{"jor", MethodKind::JOR}, std::pair{"sor", MethodKind::SOR}}) {
      const std::string p(prefix);
      if (text == p) return {kind, 1.0};
      if (text.size() > p.size() + 2 && text.compare(0, p.size() + 1, p + "(") == 0 && text.back() == ')') {
        const std::string arg = text.substr(p.size() + 1, text.size() - p.size() - 2);
        std::size_t used = 0;
        double g = 0.0;
        try {
          g = std::stod(arg, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != arg.size() || !(g > 0.0)) throw GraphError("invalid relaxation factor in method '" + text + "'");
        return {kind, g};
      }
    }
    throw GraphError("unknown method '" + text + "'");
  }
};

/// Solver settings for a distributed method, starting from `base`.
inline SolverConfig method_config(const Method& m, SolverConfig base) {
  switch (m.kind) {
    case MethodKind::DGS: base.scheme = Scheme::SuccessiveOverRelaxation; base.gamma = 1.0; break;
    case MethodKind::DJ: base.scheme = Scheme::Jacobi; base.gamma = 1.0; break;
    case MethodKind::JOR: base.scheme = Scheme::Jacobi; base.gamma = m.gamma; break;
    case MethodKind::SOR: base.scheme = Scheme::SuccessiveOverRelaxation; base.gamma = m.gamma; break;
    default: throw GraphError("method " + m.name() + " is not distributed");
  }
  return base;
}

struct MethodResult {
  std::string method;
  int rotation_iterations = 0;  // zero for centralized methods
  int pose_iterations = 0;      // GN iterations for GN
  double cost = 0.0;            // graph_cost of the estimate
  double ate = 0.0;             // m, against GN
  double are = 0.0;             // deg, against GN
  std::uint64_t bytes = 0;      // all robots
  bool converged = true;
  bool diverged = false;
};

struct BenchmarkRow {
  std::string scenario;
  std::uint64_t seed = 0;
  double eta_r = 0.0;
  double eta_p = 0.0;
  std::vector<MethodResult> results;  // in the requested method order

  const MethodResult& at(const std::string& method) const {
    for (const auto& r : results)
      if (r.method == method) return r;
    throw GraphError("method " + method + " not in benchmark row");
  }
};

struct MethodRun {
  Estimate estimate;
  MethodResult result;
};

/// Runs one method. GN starts from the two-stage estimate.
inline MethodRun run_method(const MultiRobotGraph& graph, const Method& m, const SolverConfig& base) {
  MethodRun out;
  out.result.method = m.name();
  if (m.distributed()) {
    const DistributedResult d = run_distributed_two_stage(graph, method_config(m, base));
    out.estimate = d.estimate;
    out.result.rotation_iterations = d.rotation_iterations();
    out.result.pose_iterations = d.pose_iterations();
    out.result.bytes = d.ledger.total_bytes();
    out.result.converged = d.converged;
    out.result.diverged = d.diverged;
  } else {
    const CentralizedResult two = solve_two_stage(graph);
    if (m.kind == MethodKind::TwoStage) {
      out.estimate = two.estimate;
    } else {
      const CentralizedResult gn = solve_gauss_newton(graph, two.estimate);
      out.estimate = gn.estimate;
      out.result.pose_iterations = gn.gn_iterations;
      out.result.converged = gn.converged;
      out.result.diverged = gn.diverged;
    }
  }
  return out;
}

namespace detail {

inline std::vector<VertexId> all_vertices(const MultiRobotGraph& graph) {
  std::vector<VertexId> out;
  for (const auto& [v, _] : graph.vertices()) out.push_back(v);
  return out;
}

}  // namespace detail

/// One benchmark row. Costs are recomputed from the estimates; ATE* and
/// ARE* are taken over every vertex against the GN estimate. A diverged run
/// reports NaN for its cost and errors.
inline BenchmarkRow benchmark_graph(const std::string& id, std::uint64_t seed, const MultiRobotGraph& graph,
                                    const std::vector<Method>& methods, const SolverConfig& base) {
  BenchmarkRow row;
  row.scenario = id;
  row.seed = seed;
  row.eta_r = base.eta_r;
  row.eta_p = base.eta_p;
  const MethodRun gn = run_method(graph, {MethodKind::GN}, base);
  const auto vertices = detail::all_vertices(graph);
  for (const Method& m : methods) {
    MethodRun run = m.kind == MethodKind::GN ? gn : run_method(graph, m, base);
    if (run.result.diverged && run.estimate.size() != vertices.size()) {
      run.result.cost = run.result.ate = run.result.are = std::numeric_limits<double>::quiet_NaN();
    } else {
      run.result.cost = graph_cost(graph, run.estimate);
      run.result.ate = ate_star(run.estimate, gn.estimate, vertices);
      run.result.are = are_star(run.estimate, gn.estimate, vertices);
    }
    row.results.push_back(std::move(run.result));
  }
  return row;
}

inline std::string scenario_id(const ScenarioSpec& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s_n%zu_sr%g_st%g_seed%llu", to_string(s.kind), s.robot_count, s.sigma_r_deg,
                s.sigma_t, static_cast<unsigned long long>(s.rng_seed));
  return buf;
}

/// One row per scenario, in input order. Scenarios are spread over
/// `threads` workers; every worker writes only its own rows.
inline std::vector<BenchmarkRow> build_comparison_table(const std::vector<ScenarioSpec>& scenarios,
                                                        const std::vector<Method>& methods, const SolverConfig& config,
                                                        unsigned threads = 1) {
  config.validate();
  for (const auto& s : scenarios) s.validate();
  std::vector<BenchmarkRow> rows(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(scenarios.size());
  auto work = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        const Scenario sc = generate_scenario(scenarios[i]);
        rows[i] = benchmark_graph(scenario_id(scenarios[i]), scenarios[i].rng_seed, sc.graph, methods, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenarios.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace dgs

#endif  // DGS_BENCH_HPP
