#ifndef DGS_POSE_GRAPH_HPP
#define DGS_POSE_GRAPH_HPP

#include "dgs/se3.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dgs {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense robot index 0..n-1.
struct RobotId {
  std::size_t value = 0;

  constexpr RobotId() = default;
  constexpr explicit RobotId(std::size_t v) : value(v) {}
  auto operator<=>(const RobotId&) const = default;
};

enum class VertexKind : std::uint8_t { RobotPose = 0, ObjectLandmark = 1 };

struct VertexId {
  RobotId robot;
  std::uint32_t index = 0;
  VertexKind kind = VertexKind::RobotPose;

  auto operator<=>(const VertexId&) const = default;

  static VertexId pose(std::size_t robot, std::uint32_t index) {
    return {RobotId(robot), index, VertexKind::RobotPose};
  }
  static VertexId object(std::size_t robot, std::uint32_t index) {
    return {RobotId(robot), index, VertexKind::ObjectLandmark};
  }
};

inline std::string to_string(const VertexId& v) {
  return std::string(v.kind == VertexKind::RobotPose ? "x" : "o") + "(" +
         std::to_string(v.robot.value) + "," + std::to_string(v.index) + ")";
}

enum class EdgeKind : std::uint8_t { Odometry, LoopClosure, InterRobot, ObjectPose, ObjectObject };

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Odometry: return "odometry";
    case EdgeKind::LoopClosure: return "loop_closure";
    case EdgeKind::InterRobot: return "inter_robot";
    case EdgeKind::ObjectPose: return "object_pose";
    case EdgeKind::ObjectObject: return "object_object";
  }
  return "unknown";
}

/// Relative pose measurement z = (R, t) from `from` to `to`, with isotropic
/// translation information omega_t_sq (1/m^2) and rotation concentration
/// omega_r_sq.
struct RelativeMeasurement {
  VertexId from;
  VertexId to;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double omega_t_sq = 1.0;
  double omega_r_sq = 1.0;
  EdgeKind kind = EdgeKind::Odometry;

  bool is_separator() const { return from.robot != to.robot; }
};

/// Kind implied by the endpoints. Same-robot pose pairs are odometry when the
/// indices are consecutive and loop closures otherwise.
inline EdgeKind infer_edge_kind(const VertexId& a, const VertexId& b) {
  const bool a_pose = a.kind == VertexKind::RobotPose;
  const bool b_pose = b.kind == VertexKind::RobotPose;
  if (a.robot == b.robot) {
    if (a_pose && b_pose) {
      const auto d = static_cast<long long>(a.index) - static_cast<long long>(b.index);
      return (d == 1 || d == -1) ? EdgeKind::Odometry : EdgeKind::LoopClosure;
    }
    if (a_pose != b_pose) return EdgeKind::ObjectPose;
    throw GraphError("object-object edge within one robot: " + to_string(a) + " " + to_string(b));
  }
  if (a_pose && b_pose) return EdgeKind::InterRobot;
  if (!a_pose && !b_pose) return EdgeKind::ObjectObject;
  throw GraphError("pose-object edge across robots: " + to_string(a) + " " + to_string(b));
}

inline bool kind_consistent(const RelativeMeasurement& e) {
  const bool a_pose = e.from.kind == VertexKind::RobotPose;
  const bool b_pose = e.to.kind == VertexKind::RobotPose;
  const bool cross = e.from.robot != e.to.robot;
  switch (e.kind) {
    case EdgeKind::Odometry:
    case EdgeKind::LoopClosure: return !cross && a_pose && b_pose;
    case EdgeKind::InterRobot: return cross && a_pose && b_pose;
    case EdgeKind::ObjectPose: return !cross && a_pose != b_pose;
    case EdgeKind::ObjectObject: return cross && !a_pose && !b_pose;
  }
  return false;
}

using Estimate = std::map<VertexId, Pose>;

/// Measurements of a multi-robot team. Built once, then read-only.
class MultiRobotGraph {
 public:
  MultiRobotGraph() = default;
  explicit MultiRobotGraph(std::size_t robot_count) : robot_count_(robot_count) {}

  std::size_t robot_count() const { return robot_count_; }

  void add_vertex(const VertexId& v, std::optional<Pose> initial = std::nullopt) {
    if (v.robot.value >= robot_count_) robot_count_ = v.robot.value + 1;
    auto [it, inserted] = vertices_.emplace(v, initial);
    if (!inserted && initial) it->second = initial;
  }

  bool has_vertex(const VertexId& v) const { return vertices_.count(v) != 0; }

  std::size_t add_edge(RelativeMeasurement e) {
    if (!(e.omega_t_sq > 0.0) || !(e.omega_r_sq > 0.0))
      throw GraphError("edge weights must be positive: " + to_string(e.from) + " -> " + to_string(e.to));
    if (e.from == e.to) throw GraphError("self-loop on " + to_string(e.from));
    if (!kind_consistent(e))
      throw GraphError(std::string("edge kind ") + to_string(e.kind) + " inconsistent with endpoints " +
                       to_string(e.from) + " -> " + to_string(e.to));
    add_vertex(e.from);
    add_vertex(e.to);
    edges_.push_back(std::move(e));
    return edges_.size() - 1;
  }

  void set_anchor(const VertexId& v) {
    if (v.kind != VertexKind::RobotPose) throw GraphError("anchor must be a robot pose");
    add_vertex(v);
    anchor_ = v;
  }

  const VertexId& anchor() const { return anchor_; }
  const std::vector<RelativeMeasurement>& edges() const { return edges_; }
  const std::map<VertexId, std::optional<Pose>>& vertices() const { return vertices_; }

  std::vector<VertexId> vertices_of(RobotId robot) const {
    std::vector<VertexId> out;
    for (const auto& [v, _] : vertices_)
      if (v.robot == robot) out.push_back(v);
    return out;
  }

  /// Initial guesses stored with the vertices, when all are present.
  std::optional<Estimate> initial_estimate() const {
    Estimate est;
    for (const auto& [v, p] : vertices_) {
      if (!p) return std::nullopt;
      est.emplace(v, *p);
    }
    return est;
  }

  bool is_connected() const {
    if (vertices_.empty()) return false;
    std::map<VertexId, std::size_t> idx;
    for (const auto& [v, _] : vertices_) idx.emplace(v, idx.size());
    std::vector<std::size_t> parent(idx.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = idx.size();
    for (const auto& e : edges_) {
      auto a = find(idx.at(e.from));
      auto b = find(idx.at(e.to));
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

  /// Throws GraphError when the graph cannot be solved.
  void validate() const {
    if (edges_.empty()) throw GraphError("graph has no edges");
    if (!has_vertex(anchor_)) throw GraphError("anchor vertex " + to_string(anchor_) + " not in graph");
    if (anchor_.kind != VertexKind::RobotPose) throw GraphError("anchor must be a robot pose");
    if (!is_connected()) throw GraphError("graph is disconnected");
  }

 private:
  std::size_t robot_count_ = 0;
  std::map<VertexId, std::optional<Pose>> vertices_;
  std::vector<RelativeMeasurement> edges_;
  VertexId anchor_ = VertexId::pose(0, 0);
};

struct Measurement {
  Mat3 rotation;
  Vec3 translation;
};

/// Generative model: R = R_a^T R_b Exp(noise_rot), t = R_a^T (t_b - t_a) + noise_trans.
inline Measurement compose_measurement(const Pose& a, const Pose& b, const Vec3& noise_rot = Vec3::Zero(),
                                       const Vec3& noise_trans = Vec3::Zero()) {
  return {a.rotation.transpose() * b.rotation * exp_map(noise_rot),
          a.rotation.transpose() * (b.translation - a.translation) + noise_trans};
}

/// Information weights from standard deviations. A zero sigma maps to unit
/// weight so noiseless scenarios stay well-posed.
inline double weight_from_sigma(double sigma) { return sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0; }

inline double edge_cost(const RelativeMeasurement& e, const Pose& a, const Pose& b) {
  const Vec3 dt = b.translation - a.translation - a.rotation * e.translation;
  return e.omega_t_sq * dt.squaredNorm() + 0.5 * e.omega_r_sq * chordal_residual(a.rotation, b.rotation, e.rotation);
}

inline const Pose& lookup(const Estimate& est, const VertexId& v) {
  auto it = est.find(v);
  if (it == est.end()) throw GraphError("estimate missing vertex " + to_string(v));
  return it->second;
}

/// Sum over edges of w_t |t_b - t_a - R_a t|^2 + (w_R / 2) |R_b - R_a R|_F^2.
inline double graph_cost(const MultiRobotGraph& graph, const Estimate& estimate) {
  double cost = 0.0;
  for (const auto& e : graph.edges()) cost += edge_cost(e, lookup(estimate, e.from), lookup(estimate, e.to));
  return cost;
}

struct EdgePartition {
  std::vector<std::size_t> intra;       // both endpoints owned by the robot
  std::vector<std::size_t> separators;  // exactly one endpoint owned
};

inline EdgePartition partition_edges(const MultiRobotGraph& graph, RobotId robot) {
  if (robot.value >= graph.robot_count()) throw GraphError("robot " + std::to_string(robot.value) + " not in graph");
  EdgePartition out;
  const auto& edges = graph.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const bool a = edges[i].from.robot == robot;
    const bool b = edges[i].to.robot == robot;
    if (a && b)
      out.intra.push_back(i);
    else if (a || b)
      out.separators.push_back(i);
  }
  return out;
}

/// Breadth-first composition of measurements from the anchor (set to the
/// identity). Used as an initial guess and as a baseline estimate.
inline Estimate chain_spanning_tree(const MultiRobotGraph& graph) {
  graph.validate();
  std::map<VertexId, std::vector<std::size_t>> incident;
  const auto& edges = graph.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    incident[edges[i].from].push_back(i);
    incident[edges[i].to].push_back(i);
  }
  Estimate est;
  est.emplace(graph.anchor(), Pose::identity());
  std::queue<VertexId> frontier;
  frontier.push(graph.anchor());
  while (!frontier.empty()) {
    const VertexId v = frontier.front();
    frontier.pop();
    const Pose pv = est.at(v);
    for (std::size_t i : incident[v]) {
      const auto& e = edges[i];
      const Pose z{e.rotation, e.translation};
      if (e.from == v && !est.count(e.to)) {
        est.emplace(e.to, pv * z);
        frontier.push(e.to);
      } else if (e.to == v && !est.count(e.from)) {
        est.emplace(e.from, pv * z.inverse());
        frontier.push(e.from);
      }
    }
  }
  return est;
}

/// Applies T * x to every pose.
inline Estimate transform_estimate(const Estimate& est, const Pose& t) {
  Estimate out;
  for (const auto& [v, p] : est) out.emplace(v, t * p);
  return out;
}

}  // namespace dgs

#endif  // DGS_POSE_GRAPH_HPP
