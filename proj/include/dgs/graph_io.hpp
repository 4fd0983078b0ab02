#ifndef DGS_GRAPH_IO_HPP
#define DGS_GRAPH_IO_HPP

#include "dgs/bench.hpp"
#include "dgs/object_slam.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dgs {

constexpr const char* kLibraryVersion = "1.0.0";
constexpr int kTraceCsvVersion = 1;
constexpr int kBenchCsvVersion = 1;

struct ParseError : GraphError {
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : GraphError(source + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

/// Graph text format, one record per line ('#' starts a comment):
///   VERTEX_SE3:QUAT id x y z qx qy qz qw
///   EDGE_SE3:QUAT from to x y z qx qy qz qw I11 I12 .. I16 I22 .. I66
///   ROBOT_VERTEX id robot index pose|object
///   ANCHOR id
/// The information matrix is the upper triangle, row-major, translation
/// first, with the rotation block on the rotation vector. Numeric ids are
/// file-local; ROBOT_VERTEX gives each one its VertexId. A file without any
/// ROBOT_VERTEX record is one robot whose pose indices are the ids.
namespace io_detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Eigen::Quaterniond checked_quaternion(double qx, double qy, double qz, double qw, const std::string& source,
                                             std::size_t line) {
  const Eigen::Quaterniond q(qw, qx, qy, qz);
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3)
    throw ParseError(source, line, "quaternion norm " + format_double(norm) + " is not 1");
  return q.normalized();
}

inline Mat6 info_from_upper(const std::vector<double>& upper) {
  Mat6 m;
  std::size_t k = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) m(i, j) = m(j, i) = upper[k++];
  return m;
}

struct ParsedVertex {
  Pose pose;
  std::size_t line = 0;
};

struct ParsedEdge {
  long from = 0;
  long to = 0;
  Pose z;
  Mat6 info;
  std::size_t line = 0;
};

struct Owner {
  VertexId id;
  std::size_t line = 0;
};

template <std::size_t N>
std::array<double, N> read_numbers(std::istringstream& in, const std::string& source, std::size_t line,
                                   const std::string& what) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(source, line, what + ": expected " + std::to_string(N) + " numbers");
    char* end = nullptr;
    out[i] = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(out[i]))
      throw ParseError(source, line, what + ": invalid number '" + tok + "'");
  }
  return out;
}

inline long read_id(std::istringstream& in, const std::string& source, std::size_t line, const std::string& what) {
  std::string tok;
  if (!(in >> tok)) throw ParseError(source, line, what + ": missing id");
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || v < 0) throw ParseError(source, line, what + ": invalid id '" + tok + "'");
  return v;
}

inline void expect_end(std::istringstream& in, const std::string& source, std::size_t line) {
  std::string extra;
  if (in >> extra) throw ParseError(source, line, "unexpected trailing token '" + extra + "'");
}

}  // namespace io_detail

/// File ids in VertexId order.
inline std::map<VertexId, long> file_ids(const MultiRobotGraph& graph) {
  std::map<VertexId, long> ids;
  for (const auto& [v, _] : graph.vertices()) ids.emplace(v, static_cast<long>(ids.size()));
  return ids;
}

struct ParsedGraph {
  MultiRobotGraph graph;
  Estimate vertices;  // poses stored on the VERTEX records
};

inline ParsedGraph parse_graph(std::istream& in, const std::string& source = "<input>") {
  using namespace io_detail;
  std::map<long, ParsedVertex> vertices;
  std::vector<ParsedEdge> edges;
  std::map<long, Owner> owners;
  std::optional<std::pair<long, std::size_t>> anchor;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "VERTEX_SE3:QUAT") {
      const long id = read_id(ss, source, line, tag);
      const auto v = read_numbers<7>(ss, source, line, tag);
      expect_end(ss, source, line);
      if (vertices.count(id)) throw ParseError(source, line, "duplicate vertex id " + std::to_string(id));
      const auto q = checked_quaternion(v[3], v[4], v[5], v[6], source, line);
      vertices[id] = {Pose{q.toRotationMatrix(), Vec3(v[0], v[1], v[2])}, line};
    } else if (tag == "EDGE_SE3:QUAT") {
      ParsedEdge e;
      e.line = line;
      e.from = read_id(ss, source, line, tag);
      e.to = read_id(ss, source, line, tag);
      const auto v = read_numbers<7>(ss, source, line, tag);
      const auto info = read_numbers<21>(ss, source, line, tag);
      expect_end(ss, source, line);
      const auto q = checked_quaternion(v[3], v[4], v[5], v[6], source, line);
      e.z = Pose{q.toRotationMatrix(), Vec3(v[0], v[1], v[2])};
      e.info = info_from_upper({info.begin(), info.end()});
      edges.push_back(e);
    } else if (tag == "ROBOT_VERTEX") {
      const long id = read_id(ss, source, line, tag);
      const long robot = read_id(ss, source, line, tag);
      const long index = read_id(ss, source, line, tag);
      std::string kind;
      if (!(ss >> kind) || (kind != "pose" && kind != "object"))
        throw ParseError(source, line, "ROBOT_VERTEX: kind must be 'pose' or 'object'");
      expect_end(ss, source, line);
      if (owners.count(id)) throw ParseError(source, line, "duplicate ROBOT_VERTEX for id " + std::to_string(id));
      const auto r = static_cast<std::size_t>(robot);
      const auto i = static_cast<std::uint32_t>(index);
      owners[id] = {kind == "pose" ? VertexId::pose(r, i) : VertexId::object(r, i), line};
    } else if (tag == "ANCHOR") {
      const long id = read_id(ss, source, line, tag);
      expect_end(ss, source, line);
      if (anchor) throw ParseError(source, line, "duplicate ANCHOR record");
      anchor = {id, line};
    } else {
      throw ParseError(source, line, "unknown record '" + tag + "'");
    }
  }

  std::map<long, VertexId> resolve;
  if (owners.empty()) {
    for (const auto& [id, _] : vertices) resolve[id] = VertexId::pose(0, static_cast<std::uint32_t>(id));
  } else {
    for (const auto& [id, v] : vertices)
      if (!owners.count(id)) throw ParseError(source, v.line, "vertex " + std::to_string(id) + " has no ROBOT_VERTEX record");
    std::map<VertexId, long> seen;
    for (const auto& [id, o] : owners) {
      if (!vertices.count(id)) throw ParseError(source, o.line, "ROBOT_VERTEX for unknown vertex " + std::to_string(id));
      if (!seen.emplace(o.id, id).second) throw ParseError(source, o.line, "two ids map to " + to_string(o.id));
      resolve[id] = o.id;
    }
  }

  ParsedGraph out;
  for (const auto& [id, v] : vertices) {
    out.graph.add_vertex(resolve.at(id), v.pose);
    out.vertices[resolve.at(id)] = v.pose;
  }
  for (const auto& e : edges) {
    for (long end : {e.from, e.to})
      if (!vertices.count(end)) throw ParseError(source, e.line, "edge references unknown vertex " + std::to_string(end));
    try {
      const IsotropicWeights w = weights_from_information(e.info);
      const VertexId a = resolve.at(e.from);
      const VertexId b = resolve.at(e.to);
      out.graph.add_edge({a, b, e.z.rotation, e.z.translation, w.omega_t_sq, w.omega_r_sq, infer_edge_kind(a, b)});
    } catch (const ParseError&) {
      throw;
    } catch (const GraphError& err) {
      throw ParseError(source, e.line, err.what());
    }
  }
  if (anchor) {
    if (!vertices.count(anchor->first)) throw ParseError(source, anchor->second, "ANCHOR references unknown vertex");
    try {
      out.graph.set_anchor(resolve.at(anchor->first));
    } catch (const GraphError& err) {
      throw ParseError(source, anchor->second, err.what());
    }
  } else if (!vertices.empty()) {
    // Default gauge: the first robot pose in VertexId order.
    for (const auto& [v, _] : out.graph.vertices())
      if (v.kind == VertexKind::RobotPose) {
        out.graph.set_anchor(v);
        break;
      }
  }
  if (out.graph.edges().empty()) throw ParseError(source, line, "graph has no edges");
  try {
    out.graph.validate();
  } catch (const GraphError& err) {
    throw ParseError(source, line, err.what());
  }
  return out;
}

inline ParsedGraph parse_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open " + path.string());
  return parse_graph(in, path.string());
}

namespace io_detail {

inline void write_pose(std::ostream& out, const Pose& p) {
  const Eigen::Quaterniond q = to_quaternion(p.rotation);
  for (double v : {p.translation.x(), p.translation.y(), p.translation.z(), q.x(), q.y(), q.z(), q.w()})
    out << ' ' << format_double(v);
}

inline void write_vertices(std::ostream& out, const std::map<VertexId, long>& ids, const Estimate& poses) {
  for (const auto& [v, id] : ids) {
    out << "VERTEX_SE3:QUAT " << id;
    write_pose(out, lookup(poses, v));
    out << '\n';
  }
  for (const auto& [v, id] : ids)
    out << "ROBOT_VERTEX " << id << ' ' << v.robot.value << ' ' << v.index << ' '
        << (v.kind == VertexKind::RobotPose ? "pose" : "object") << '\n';
}

}  // namespace io_detail

/// Writes the graph with `poses` on the vertex records (the stored initial
/// guesses, then the identity, when omitted).
inline void write_graph(std::ostream& out, const MultiRobotGraph& graph, const Estimate* poses = nullptr) {
  using namespace io_detail;
  const auto ids = file_ids(graph);
  Estimate stored;
  for (const auto& [v, p] : graph.vertices()) stored[v] = poses && poses->count(v) ? poses->at(v) : p.value_or(Pose{});
  out << "# dgs graph\n";
  write_vertices(out, ids, stored);
  out << "ANCHOR " << ids.at(graph.anchor()) << '\n';
  for (const auto& e : graph.edges()) {
    out << "EDGE_SE3:QUAT " << ids.at(e.from) << ' ' << ids.at(e.to);
    write_pose(out, Pose{e.rotation, e.translation});
    const Mat6 info = isotropic_information(e.omega_t_sq, e.omega_r_sq);
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) out << ' ' << format_double(info(i, j));
    out << '\n';
  }
}

/// Vertex records only: an estimate or a ground truth.
inline void write_estimate(std::ostream& out, const Estimate& estimate) {
  std::map<VertexId, long> ids;
  for (const auto& [v, _] : estimate) ids.emplace(v, static_cast<long>(ids.size()));
  out << "# dgs estimate\n";
  io_detail::write_vertices(out, ids, estimate);
}

inline Estimate parse_estimate(std::istream& in, const std::string& source = "<input>") {
  using namespace io_detail;
  std::map<long, std::pair<Pose, std::size_t>> poses;
  std::map<long, VertexId> owners;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "VERTEX_SE3:QUAT") {
      const long id = read_id(ss, source, line, tag);
      const auto v = read_numbers<7>(ss, source, line, tag);
      expect_end(ss, source, line);
      poses[id] = {Pose{checked_quaternion(v[3], v[4], v[5], v[6], source, line).toRotationMatrix(),
                        Vec3(v[0], v[1], v[2])},
                   line};
    } else if (tag == "ROBOT_VERTEX") {
      const long id = read_id(ss, source, line, tag);
      const auto robot = static_cast<std::size_t>(read_id(ss, source, line, tag));
      const auto index = static_cast<std::uint32_t>(read_id(ss, source, line, tag));
      std::string kind;
      if (!(ss >> kind) || (kind != "pose" && kind != "object"))
        throw ParseError(source, line, "ROBOT_VERTEX: kind must be 'pose' or 'object'");
      owners[id] = kind == "pose" ? VertexId::pose(robot, index) : VertexId::object(robot, index);
    } else {
      throw ParseError(source, line, "unexpected record '" + tag + "' in estimate");
    }
  }
  Estimate out;
  for (const auto& [id, p] : poses) {
    const VertexId v = owners.empty() ? VertexId::pose(0, static_cast<std::uint32_t>(id)) : [&] {
      auto it = owners.find(id);
      if (it == owners.end()) throw ParseError(source, p.second, "vertex " + std::to_string(id) + " has no ROBOT_VERTEX record");
      return it->second;
    }();
    out[v] = p.first;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trace_csv(std::ostream& out, const DistributedResult& result) {
  out << "# dgs trace v" << kTraceCsvVersion << '\n';
  out << "phase,iteration,change_norm,residual_error,robot_changes\n";
  auto emit = [&](const char* phase, const IterationTrace& t) {
    for (std::size_t k = 0; k < t.iterations.size(); ++k) {
      const auto& rec = t.iterations[k];
      out << phase << ',' << k + 1 << ',' << io_detail::format_double(rec.change_norm) << ','
          << (std::isnan(rec.residual_error) ? std::string() : io_detail::format_double(rec.residual_error)) << ',';
      for (std::size_t a = 0; a < rec.robot_change.size(); ++a)
        out << (a ? ";" : "") << io_detail::format_double(rec.robot_change[a]);
      out << '\n';
    }
  };
  emit("rotation", result.rotation_trace);
  emit("pose", result.pose_trace);
}

inline void write_ledger_csv(std::ostream& out, const CommunicationLedger& ledger,
                             const std::vector<std::size_t>& separator_counts = {}) {
  out << "robot,phase,messages,bytes,separators\n";
  const char* names[] = {"rotation", "pose", "objects"};
  for (std::size_t r = 0; r < ledger.robot_count(); ++r)
    for (int p = 0; p < 3; ++p) {
      const PhaseTraffic& t = ledger.traffic(RobotId(r), static_cast<CommPhase>(p));
      out << r << ',' << names[p] << ',' << t.messages << ',' << t.bytes << ','
          << (r < separator_counts.size() ? std::to_string(separator_counts[r]) : std::string()) << '\n';
    }
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  using io_detail::format_double;
  out << "# dgs bench v" << kBenchCsvVersion
      << "; cost = sum w_t |t_b - t_a - R_a t|^2 + (w_R / 2) |R_b - R_a R|_F^2; ate in m and are in deg against gn\n";
  out << "scenario,seed,eta_r,eta_p,method,rotation_iterations,pose_iterations,cost,ate_m,are_deg,bytes,converged,"
         "diverged\n";
  for (const auto& row : rows)
    for (const auto& r : row.results)
      out << row.scenario << ',' << row.seed << ',' << format_double(row.eta_r) << ',' << format_double(row.eta_p)
          << ',' << r.method << ',' << r.rotation_iterations << ',' << r.pose_iterations << ','
          << format_double(r.cost) << ',' << format_double(r.ate) << ',' << format_double(r.are) << ',' << r.bytes
          << ',' << (r.converged ? 1 : 0) << ',' << (r.diverged ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// JSON configuration

using Json = nlohmann::json;

inline Json to_json(const ScenarioSpec& s) {
  return {{"kind", to_string(s.kind)},       {"robots", s.robot_count},       {"poses", s.poses_per_robot},
          {"sigma_r_deg", s.sigma_r_deg},    {"sigma_t", s.sigma_t},          {"seed", s.rng_seed},
          {"link_count", s.link_count},      {"cube_side", s.cube_side},      {"cube_gap", s.cube_gap},
          {"track_step", s.track_step},      {"track_separation", s.track_separation}};
}

inline Json to_json(const SolverConfig& c) {
  return {{"scheme", c.scheme == Scheme::Jacobi ? "jacobi" : "sor"},
          {"gamma", c.gamma},
          {"eta_r", c.eta_r},
          {"eta_p", c.eta_p},
          {"max_iterations", c.max_iterations},
          {"flagged_init", c.flagged_init},
          {"sor_order", c.sor_order}};
}

namespace io_detail {

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw GraphError(std::string("config field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw GraphError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw GraphError("unknown field '" + key + "' in " + where);
  }
}

}  // namespace io_detail

inline ScenarioSpec scenario_from_json(const Json& j) {
  io_detail::reject_unknown(j, {"kind", "robots", "poses", "sigma_r_deg", "sigma_t", "seed", "link_count", "cube_side",
                                "cube_gap", "track_step", "track_separation"},
                            "scenario");
  ScenarioSpec s;
  std::string kind = to_string(s.kind);
  io_detail::read_field(j, "kind", kind);
  if (kind == "grid3d") s.kind = ScenarioKind::Grid3D;
  else if (kind == "parallel_tracks") s.kind = ScenarioKind::ParallelTracks;
  else throw GraphError("unknown scenario kind '" + kind + "'");
  io_detail::read_field(j, "robots", s.robot_count);
  io_detail::read_field(j, "poses", s.poses_per_robot);
  io_detail::read_field(j, "sigma_r_deg", s.sigma_r_deg);
  io_detail::read_field(j, "sigma_t", s.sigma_t);
  io_detail::read_field(j, "seed", s.rng_seed);
  io_detail::read_field(j, "link_count", s.link_count);
  io_detail::read_field(j, "cube_side", s.cube_side);
  io_detail::read_field(j, "cube_gap", s.cube_gap);
  io_detail::read_field(j, "track_step", s.track_step);
  io_detail::read_field(j, "track_separation", s.track_separation);
  s.validate();
  return s;
}

inline SolverConfig solver_from_json(const Json& j) {
  io_detail::reject_unknown(j, {"scheme", "gamma", "eta_r", "eta_p", "max_iterations", "flagged_init", "sor_order"},
                            "solver");
  SolverConfig c;
  std::string scheme = "sor";
  io_detail::read_field(j, "scheme", scheme);
  if (scheme == "sor") c.scheme = Scheme::SuccessiveOverRelaxation;
  else if (scheme == "jacobi") c.scheme = Scheme::Jacobi;
  else throw GraphError("unknown scheme '" + scheme + "'");
  io_detail::read_field(j, "gamma", c.gamma);
  io_detail::read_field(j, "eta_r", c.eta_r);
  io_detail::read_field(j, "eta_p", c.eta_p);
  io_detail::read_field(j, "max_iterations", c.max_iterations);
  io_detail::read_field(j, "flagged_init", c.flagged_init);
  io_detail::read_field(j, "sor_order", c.sor_order);
  c.validate();
  return c;
}

/// Everything needed to reproduce one CLI invocation.
struct RunConfig {
  ScenarioSpec scenario;
  SolverConfig solver;
  std::vector<Method> methods{{MethodKind::DGS}};
  std::string output_dir;
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  unsigned threads = 1;

  void validate() const {
    scenario.validate();
    solver.validate();
    if (methods.empty()) throw GraphError("no method selected");
    if (runs < 1) throw GraphError("runs must be positive");
    if (threads < 1) throw GraphError("threads must be positive");
    const std::size_t robots = scenario.robot_count;
    if (!solver.sor_order.empty()) {
      std::vector<char> seen(robots, 0);
      for (std::size_t r : solver.sor_order) {
        if (r >= robots || seen[r]) throw GraphError("sor_order must be a permutation of the robot ids");
        seen[r] = 1;
      }
      if (solver.sor_order.size() != robots) throw GraphError("sor_order must list every robot once");
    }
  }
};

inline Json to_json(const RunConfig& c) {
  Json methods = Json::array();
  for (const auto& m : c.methods) methods.push_back(m.name());
  return {{"scenario", to_json(c.scenario)}, {"solver", to_json(c.solver)}, {"methods", methods},
          {"output_dir", c.output_dir},      {"seed", c.seed},                {"runs", c.runs},
          {"threads", c.threads}};
}

inline RunConfig run_config_from_json(const Json& j) {
  io_detail::reject_unknown(j, {"scenario", "solver", "methods", "output_dir", "seed", "runs", "threads"}, "config");
  RunConfig c;
  if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  if (j.contains("methods")) {
    std::vector<std::string> names;
    io_detail::read_field(j, "methods", names);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(Method::parse(n));
  }
  io_detail::read_field(j, "output_dir", c.output_dir);
  io_detail::read_field(j, "seed", c.seed);
  io_detail::read_field(j, "runs", c.runs);
  io_detail::read_field(j, "threads", c.threads);
  if (j.contains("seed") && !(j.contains("scenario") && j.at("scenario").contains("seed"))) c.scenario.rng_seed = c.seed;
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw GraphError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

/// FNV-1a over the canonical (sorted-key, compact) JSON text.
inline std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Reproduction record. No timestamps, so identical runs give identical files.
inline Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed) {
  return {{"command", command},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"seed", seed},
          {"versions",
           {{"dgs", kLibraryVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"trace_csv", kTraceCsvVersion},
            {"bench_csv", kBenchCsvVersion}}},
          {"cost_convention", "sum w_t |t_b - t_a - R_a t|^2 + (w_R / 2) |R_b - R_a R|_F^2"}};
}

/// Explicit directory, else $DGS_OUTPUT_DIR, else the working directory.
inline std::filesystem::path resolve_output_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("DGS_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GraphError("cannot write " + path.string());
  out << content;
  if (!out) throw GraphError("failed writing " + path.string());
}

}  // namespace dgs

#endif  // DGS_GRAPH_IO_HPP
