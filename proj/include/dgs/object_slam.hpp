#ifndef DGS_OBJECT_SLAM_HPP
#define DGS_OBJECT_SLAM_HPP

#include "dgs/runtime.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace dgs {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct IsotropicWeights {
  double omega_t_sq = 1.0;
  double omega_r_sq = 1.0;
};

/// Block-isotropic 6x6 information (translation first, rotation second) to
/// edge weights. Anything else is rejected.
inline IsotropicWeights weights_from_information(const Mat6& info) {
  const double scale = std::max(info.cwiseAbs().maxCoeff(), 1e-300);
  if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw GraphError("information matrix is not symmetric");
  Mat6 off = info;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 1e-12 * scale) throw GraphError("information matrix is not diagonal (anisotropic)");
  const auto d = info.diagonal();
  const double t = d[0];
  const double r = d[3];
  for (int i = 0; i < 3; ++i)
    if (std::abs(d[i] - t) > 1e-9 * scale || std::abs(d[3 + i] - r) > 1e-9 * scale)
      throw GraphError("information matrix is anisotropic");
  if (!(t > 0.0) || !(r > 0.0)) throw GraphError("information matrix is not positive definite");
  return {t, r};
}

inline Mat6 isotropic_information(double omega_t_sq, double omega_r_sq) {
  Mat6 m = Mat6::Zero();
  m.diagonal() << omega_t_sq, omega_t_sq, omega_t_sq, omega_r_sq, omega_r_sq, omega_r_sq;
  return m;
}

/// Covariance of an object-pose measurement as a 6x6 matrix; it must be
/// block-isotropic and is mapped to (1/sigma_t^2, 1/sigma_R^2).
inline std::size_t add_object_pose_factor(MultiRobotGraph& graph, const VertexId& pose, const VertexId& object,
                                          const Measurement& z, const Mat6& covariance) {
  if (!graph.has_vertex(pose)) throw GraphError("unknown robot pose " + to_string(pose));
  if (!graph.has_vertex(object)) throw GraphError("unknown object landmark " + to_string(object));
  if (pose.kind != VertexKind::RobotPose || object.kind != VertexKind::ObjectLandmark)
    throw GraphError("object-pose factor needs a robot pose and an object landmark");
  Eigen::LLT<Mat6> llt(covariance);
  if (llt.info() != Eigen::Success) throw GraphError("object-pose covariance is not positive definite");
  const IsotropicWeights w = weights_from_information(covariance.inverse());
  return graph.add_edge({pose, object, z.rotation, z.translation, w.omega_t_sq, w.omega_r_sq, EdgeKind::ObjectPose});
}

struct ObjectLandmark {
  RobotId owner;
  std::uint32_t index = 0;
  std::string label;
  Pose pose;  // in the owner's odometry frame

  VertexId id() const { return VertexId::object(owner.value, index); }
};

struct Matched {
  std::uint32_t index;
};
struct NewLandmark {};
using Association = std::variant<Matched, NewLandmark>;

/// Nearest same-label landmark within gate_distance (positions only); ties go
/// to the lowest landmark index.
inline Association associate_objects(const std::string& label, const Vec3& position,
                                     const std::vector<ObjectLandmark>& local_map, double gate_distance) {
  if (!(gate_distance > 0.0)) throw GraphError("gate distance must be positive");
  std::optional<std::uint32_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& lm : local_map) {
    if (lm.label != label) continue;
    const double d = (lm.pose.translation - position).norm();
    if (d > gate_distance) continue;
    if (d < best_d || (d == best_d && best && lm.index < *best)) {
      best_d = d;
      best = lm.index;
    }
  }
  if (best) return Matched{*best};
  return NewLandmark{};
}

struct SharedObjectPair {
  VertexId a;  // landmark of the sending robot
  VertexId b;  // landmark of the receiving robot
  Mat6 information = isotropic_information(1e4, 1e4);
};

/// Synthetic detection, standing in for a vision front-end.
struct DetectionEvent {
  VertexId robot_pose;
  std::optional<std::uint32_t> true_object;  // empty for false positives
  std::string label;
  Measurement measured;  // object pose relative to the robot pose
  bool is_false_positive = false;
};

struct WorldObject {
  std::uint32_t id = 0;
  std::string label;
  Pose pose;
};

struct ObjectSceneSpec {
  std::size_t robot_count = 2;
  std::uint32_t poses_per_robot = 10;
  std::uint32_t object_count = 5;
  double sigma_r_deg = 5.0;
  double sigma_t = 0.1;
  double orbit_radius = 1.0;      // robots circle the object cluster (m)
  double orbit_arc = 1.5 * std::numbers::pi;  // angle swept by each robot (rad)
  double object_spread = 0.3;     // objects lie within this radius of the center (m)
  double detection_range = 2.0;   // an object is seen when closer than this (m)
  double false_positive_rate = 0.0;
  double gate_distance = 0.5;     // association gate standing in for 2 sigma
  // Cross-robot gate: the two maps carry independent dead-reckoning drift.
  double rendezvous_gate = 1.5;
  double association_information = 1e4;
  std::size_t label_bytes = 16;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> labels{"chair", "table", "monitor", "plant", "bottle"};

  void validate() const {
    if (robot_count < 2) throw GraphError("object scenes need at least two robots");
    if (poses_per_robot < 2) throw GraphError("object scenes need at least two poses per robot");
    if (labels.empty()) throw GraphError("label set is empty");
    if (!(gate_distance > 0.0) || !(rendezvous_gate > 0.0) || !(detection_range > 0.0)) throw GraphError("invalid detection geometry");
    if (!(orbit_radius > object_spread) || !(object_spread >= 0.0)) throw GraphError("objects must lie inside the orbit");
    if (!(false_positive_rate >= 0.0 && false_positive_rate <= 1.0)) throw GraphError("false positive rate outside [0, 1]");
  }
};

struct ObjectScene {
  ObjectSceneSpec spec;
  MultiRobotGraph graph;
  Estimate ground_truth;  // robot poses and true landmarks, anchor frame
  std::vector<WorldObject> objects;
  std::vector<std::vector<ObjectLandmark>> maps;  // per robot
  std::vector<DetectionEvent> detections;
  std::vector<SharedObjectPair> shared;
  std::vector<Pose> initial_poses;  // first pose of every robot, known to all
  CommunicationLedger ledger;       // object-map exchange only
};

/// Robot b receives robot a's object map, moves it into b's frame with the
/// known initial poses and associates it against b's own map. Each pair
/// gets an object-object edge with measurement (I, 0). Both robots send
/// their maps: label plus pose per object.
inline std::vector<SharedObjectPair> rendezvous_share(MultiRobotGraph& graph, const std::vector<ObjectLandmark>& map_a,
                                                      const std::vector<ObjectLandmark>& map_b, RobotId a, RobotId b,
                                                      const std::vector<Pose>& initial_poses,
                                                      CommunicationLedger& ledger, const ObjectSceneSpec& spec) {
  const std::uint64_t per_object = spec.label_bytes + kPoseBlockBytes;
  ledger.add(a, CommPhase::Objects, map_a.size() * per_object);
  ledger.add(b, CommPhase::Objects, map_b.size() * per_object);
  ledger.add_rendezvous();

  const Pose a_to_b = initial_poses.at(b.value).inverse() * initial_poses.at(a.value);
  std::vector<SharedObjectPair> out;
  std::set<std::uint32_t> taken;
  for (const auto& lm : map_a) {
    const Pose in_b = a_to_b * lm.pose;
    std::vector<ObjectLandmark> candidates;
    for (const auto& c : map_b)
      if (!taken.count(c.index)) candidates.push_back(c);
    const Association match = associate_objects(lm.label, in_b.translation, candidates, spec.rendezvous_gate);
    if (const auto* m = std::get_if<Matched>(&match)) {
      taken.insert(m->index);
      SharedObjectPair pair;
      pair.a = lm.id();
      pair.b = VertexId::object(b.value, m->index);
      pair.information = isotropic_information(spec.association_information, spec.association_information);
      const IsotropicWeights w = weights_from_information(pair.information);
      graph.add_edge({pair.a, pair.b, Mat3::Identity(), Vec3::Zero(), w.omega_t_sq, w.omega_r_sq, EdgeKind::ObjectObject});
      out.push_back(pair);
    }
  }
  return out;
}

/// Robots circle a cluster of objects, facing inward, each starting from a
/// different bearing. Each robot dead-reckons from its known initial pose,
/// builds its own object map by association, and the robots meet once per
/// pair.
inline ObjectScene generate_object_scene(const ObjectSceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sigma_r = spec.sigma_r_deg * std::numbers::pi / 180.0;
  const double wt = weight_from_sigma(spec.sigma_t);
  const double wr = weight_from_sigma(sigma_r);
  auto noise = [&](double sigma) { return Vec3(sigma * n(rng), sigma * n(rng), sigma * n(rng)); };

  ObjectScene scene;
  scene.spec = spec;
  scene.graph = MultiRobotGraph(spec.robot_count);
  scene.maps.resize(spec.robot_count);
  scene.ledger = CommunicationLedger(spec.robot_count);

  Estimate world;
  const double pi = std::numbers::pi;
  for (std::size_t r = 0; r < spec.robot_count; ++r)
    for (std::uint32_t i = 0; i < spec.poses_per_robot; ++i) {
      const double bearing = 2.0 * pi * static_cast<double>(r) / static_cast<double>(spec.robot_count) +
                             spec.orbit_arc * i / (spec.poses_per_robot - 1);
      const Vec3 at(spec.orbit_radius * std::cos(bearing), spec.orbit_radius * std::sin(bearing), 0.0);
      world[VertexId::pose(r, i)] = Pose{rot_z(bearing + pi + 0.1 * n(rng)) * rot_x(0.05 * n(rng)), at};
    }
  for (std::uint32_t k = 0; k < spec.object_count; ++k) {
    const double rho = spec.object_spread * std::sqrt(u(rng));
    const double phi = 2.0 * pi * u(rng);
    scene.objects.push_back({k, spec.labels[k % spec.labels.size()],
                             Pose{rot_z(2.0 * pi * u(rng)), Vec3(rho * std::cos(phi), rho * std::sin(phi), 0.5)}});
  }
  const Pose to_anchor = world.at(VertexId::pose(0, 0)).inverse();
  for (auto& [v, x] : world) x = to_anchor * x;
  world.at(VertexId::pose(0, 0)) = Pose::identity();
  for (auto& o : scene.objects) o.pose = to_anchor * o.pose;
  for (std::size_t r = 0; r < spec.robot_count; ++r) scene.initial_poses.push_back(world.at(VertexId::pose(r, 0)));
  scene.ground_truth = world;

  for (const auto& [v, x] : world) scene.graph.add_vertex(v);
  const Mat6 detection_cov = [&] {
    Mat6 c = Mat6::Zero();
    const double st = spec.sigma_t > 0 ? spec.sigma_t : 1.0;
    const double sr = sigma_r > 0 ? sigma_r : 1.0;
    c.diagonal() << st * st, st * st, st * st, sr * sr, sr * sr, sr * sr;
    return c;
  }();

  for (std::size_t r = 0; r < spec.robot_count; ++r) {
    // Dead reckoning in the robot's own frame (first pose = identity).
    Pose odom = Pose::identity();
    for (std::uint32_t i = 0; i < spec.poses_per_robot; ++i) {
      const VertexId xv = VertexId::pose(r, i);
      if (i > 0) {
        const VertexId prev = VertexId::pose(r, i - 1);
        const Measurement z = compose_measurement(world.at(prev), world.at(xv), noise(sigma_r), noise(spec.sigma_t));
        scene.graph.add_edge({prev, xv, z.rotation, z.translation, wt, wr, EdgeKind::Odometry});
        odom = odom * Pose{z.rotation, z.translation};
      }
      std::vector<DetectionEvent> seen;
      for (const auto& obj : scene.objects) {
        if ((obj.pose.translation - world.at(xv).translation).norm() > spec.detection_range) continue;
        DetectionEvent d;
        d.robot_pose = xv;
        d.true_object = obj.id;
        d.label = obj.label;
        d.measured = compose_measurement(world.at(xv), obj.pose, noise(sigma_r), noise(spec.sigma_t));
        seen.push_back(d);
      }
      if (u(rng) < spec.false_positive_rate) {
        DetectionEvent d;
        d.robot_pose = xv;
        d.label = spec.labels[static_cast<std::size_t>(u(rng) * spec.labels.size()) % spec.labels.size()];
        d.measured = {exp_map(noise(1.0)), noise(spec.detection_range / 2.0)};
        d.is_false_positive = true;
        seen.push_back(d);
      }
      for (const auto& d : seen) {
        const Pose local = odom * Pose{d.measured.rotation, d.measured.translation};
        auto& map = scene.maps[r];
        const Association a = associate_objects(d.label, local.translation, map, spec.gate_distance);
        std::uint32_t index;
        if (const auto* m = std::get_if<Matched>(&a)) {
          index = m->index;
          map[index].pose = local;  // track the latest sighting
        } else {
          index = static_cast<std::uint32_t>(map.size());
          map.push_back({RobotId(r), index, d.label, local});
          scene.graph.add_vertex(VertexId::object(r, index));
          if (d.true_object) scene.ground_truth[VertexId::object(r, index)] = scene.objects[*d.true_object].pose;
        }
        add_object_pose_factor(scene.graph, xv, VertexId::object(r, index), d.measured, detection_cov);
        scene.detections.push_back(d);
      }
    }
  }

  for (std::size_t a = 0; a < spec.robot_count; ++a)
    for (std::size_t b = a + 1; b < spec.robot_count; ++b) {
      auto pairs = rendezvous_share(scene.graph, scene.maps[a], scene.maps[b], RobotId(a), RobotId(b),
                                    scene.initial_poses, scene.ledger, spec);
      scene.shared.insert(scene.shared.end(), pairs.begin(), pairs.end());
    }
  scene.graph.set_anchor(VertexId::pose(0, 0));
  scene.graph.validate();
  return scene;
}

/// Same pipeline as the pose-only case; landmarks ride in their owner's block.
inline DistributedResult solve_object_slam_distributed(const MultiRobotGraph& graph, const SolverConfig& config = {}) {
  return run_distributed_two_stage(graph, config);
}

struct MapFootprint {
  std::uint64_t object_map_bytes = 0;       // n_o P C
  std::uint64_t point_cloud_bytes = 0;      // n_f K C
  std::uint64_t object_exchange_bytes = 0;  // n_o L
  double ratio = 0.0;                       // point cloud / object map
};

/// Storage of an object map (n_o objects of P points each) against a point
/// cloud map (n_f frames of K points), at C bytes per point, and the bytes
/// of one object-map exchange with L = label bytes + one pose.
inline MapFootprint map_footprint(std::uint64_t n_o, std::uint64_t points_per_object, std::uint64_t n_f,
                                  std::uint64_t points_per_frame, std::uint64_t bytes_per_point,
                                  std::uint64_t label_bytes) {
  MapFootprint f;
  f.object_map_bytes = n_o * points_per_object * bytes_per_point;
  f.point_cloud_bytes = n_f * points_per_frame * bytes_per_point;
  f.object_exchange_bytes = n_o * (label_bytes + kPoseBlockBytes);
  f.ratio = f.object_map_bytes > 0 ? static_cast<double>(f.point_cloud_bytes) / static_cast<double>(f.object_map_bytes) : 0.0;
  return f;
}

}  // namespace dgs

#endif  // DGS_OBJECT_SLAM_HPP
