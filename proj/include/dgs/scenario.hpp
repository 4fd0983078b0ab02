#ifndef DGS_SCENARIO_HPP
#define DGS_SCENARIO_HPP

#include "dgs/pose_graph.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace dgs {

enum class ScenarioKind { Grid3D, ParallelTracks };

inline const char* to_string(ScenarioKind k) { return k == ScenarioKind::Grid3D ? "grid3d" : "parallel_tracks"; }

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Grid3D;
  std::size_t robot_count = 4;
  std::uint32_t poses_per_robot = 0;  // 0: 8 on the grid, 10 on the tracks
  double sigma_r_deg = 5.0;
  double sigma_t = 0.2;
  std::uint64_t rng_seed = 0;
  std::uint32_t link_count = 1;  // tracks only
  double cube_side = 2.0;        // grid: edge of each robot's cube (m)
  double cube_gap = 1.0;         // grid: distance between neighboring cubes (m)
  double track_step = 1.0;       // tracks: distance between consecutive poses (m)
  double track_separation = 2.0; // tracks: distance between the two tracks (m)

  std::uint32_t resolved_poses() const {
    if (poses_per_robot != 0) return poses_per_robot;
    return kind == ScenarioKind::Grid3D ? 8u : 10u;
  }

  /// Throws GraphError on an inconsistent spec.
  void validate() const {
    if (!(sigma_r_deg >= 0.0) || !(sigma_t >= 0.0)) throw GraphError("noise levels must be nonnegative");
    const std::uint32_t p = resolved_poses();
    if (kind == ScenarioKind::Grid3D) {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(robot_count))));
      if (robot_count < 4 || robot_count > 49 || side * side != robot_count)
        throw GraphError("grid robot count must be one of 4, 9, 16, 25, 36, 49 (got " + std::to_string(robot_count) + ")");
      if (p % 8 != 0) throw GraphError("grid poses per robot must be a positive multiple of 8");
      if (!(cube_side > 0.0) || !(cube_gap >= 0.0)) throw GraphError("invalid cube geometry");
    } else {
      if (robot_count != 2) throw GraphError("parallel tracks use exactly 2 robots");
      if (p < 2) throw GraphError("parallel tracks need at least 2 poses per robot");
      if (link_count < 1 || link_count > 10 || link_count > p)
        throw GraphError("link count must lie in [1, 10] and not exceed the poses per robot");
    }
  }
};

struct Scenario {
  ScenarioSpec spec;
  MultiRobotGraph graph;
  Estimate ground_truth;  // expressed in the anchor frame
};

namespace detail {

// Cube corners in a Hamiltonian cycle (consecutive corners share an edge,
// and so do the last and the first).
inline const std::array<Vec3, 8>& cube_cycle() {
  static const std::array<Vec3, 8> c{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0),
                                     Vec3(0, 1, 1), Vec3(1, 1, 1), Vec3(1, 0, 1), Vec3(0, 0, 1)};
  return c;
}

inline Mat3 uniform_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

class NoisyEdgeMaker {
 public:
  NoisyEdgeMaker(const ScenarioSpec& spec, std::mt19937_64& rng)
      : rng_(&rng),
        sigma_r_(spec.sigma_r_deg * std::numbers::pi / 180.0),
        sigma_t_(spec.sigma_t),
        omega_r_sq_(weight_from_sigma(sigma_r_)),
        omega_t_sq_(weight_from_sigma(spec.sigma_t)) {}

  RelativeMeasurement operator()(const Estimate& truth, const VertexId& a, const VertexId& b) {
    std::normal_distribution<double> n;
    const Vec3 eta(n(*rng_), n(*rng_), n(*rng_));
    const Vec3 eps(n(*rng_), n(*rng_), n(*rng_));
    const Measurement z = compose_measurement(truth.at(a), truth.at(b), sigma_r_ * eta, sigma_t_ * eps);
    return {a, b, z.rotation, z.translation, omega_t_sq_, omega_r_sq_, infer_edge_kind(a, b)};
  }

 private:
  std::mt19937_64* rng_;
  double sigma_r_;
  double sigma_t_;
  double omega_r_sq_;
  double omega_t_sq_;
};

inline Estimate to_anchor_frame(const Estimate& world, const VertexId& anchor) {
  Estimate out = transform_estimate(world, world.at(anchor).inverse());
  out.at(anchor) = Pose::identity();  // exact, not up to rounding
  return out;
}

}  // namespace detail

/// Simulated team. Grid: robot r sits on cell (r mod k, r div k) of a k x k
/// grid and loops over the corners of its own cube; facing corners of
/// neighboring cubes are linked. Tracks: two straight parallel trajectories
/// linked at evenly spaced time stamps. Ground-truth rotations are uniform
/// random. Vertex initial guesses come from chaining the noisy measurements.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  const std::uint32_t poses = spec.resolved_poses();
  Scenario out;
  out.spec = spec;
  out.graph = MultiRobotGraph(spec.robot_count);
  const VertexId anchor = VertexId::pose(0, 0);

  Estimate world;
  std::vector<std::pair<VertexId, VertexId>> links;
  if (spec.kind == ScenarioKind::Grid3D) {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spec.robot_count))));
    const std::uint32_t per_side = poses / 8;
    const auto& corners = detail::cube_cycle();
    const double pitch = spec.cube_side + spec.cube_gap;
    for (std::size_t r = 0; r < spec.robot_count; ++r) {
      const Vec3 origin(static_cast<double>(r % k) * pitch, static_cast<double>(r / k) * pitch, 0.0);
      for (std::uint32_t i = 0; i < poses; ++i) {
        const std::uint32_t c = i / per_side;
        const double s = static_cast<double>(i % per_side) / static_cast<double>(per_side);
        const Vec3 unit = corners[c] + s * (corners[(c + 1) % 8] - corners[c]);
        world[VertexId::pose(r, i)] = Pose{detail::uniform_rotation(rng), origin + spec.cube_side * unit};
      }
    }
    // Corner c of the lower robot faces corner facing[c] of its neighbor.
    auto corner_pose = [&](std::size_t r, int c) { return VertexId::pose(r, static_cast<std::uint32_t>(c) * per_side); };
    const std::array<std::pair<int, int>, 4> x_facing{{{1, 0}, {2, 3}, {5, 4}, {6, 7}}};
    const std::array<std::pair<int, int>, 4> y_facing{{{2, 1}, {3, 0}, {4, 7}, {5, 6}}};
    for (std::size_t r = 0; r < spec.robot_count; ++r) {
      const std::size_t gx = r % k;
      const std::size_t gy = r / k;
      if (gx + 1 < k)
        for (const auto& [a, b] : x_facing) links.emplace_back(corner_pose(r, a), corner_pose(r + 1, b));
      if (gy + 1 < k)
        for (const auto& [a, b] : y_facing) links.emplace_back(corner_pose(r, a), corner_pose(r + k, b));
    }
  } else {
    for (std::size_t r = 0; r < 2; ++r)
      for (std::uint32_t i = 0; i < poses; ++i)
        world[VertexId::pose(r, i)] =
            Pose{detail::uniform_rotation(rng),
                 Vec3(spec.track_step * static_cast<double>(i), spec.track_separation * static_cast<double>(r), 0.0)};
    // One link in the middle of each of link_count equal time segments.
    for (std::uint32_t l = 0; l < spec.link_count; ++l) {
      const std::uint32_t i = (2 * l + 1) * poses / (2 * spec.link_count);
      links.emplace_back(VertexId::pose(0, i), VertexId::pose(1, i));
    }
  }
  out.ground_truth = detail::to_anchor_frame(world, anchor);

  detail::NoisyEdgeMaker make(spec, rng);
  for (std::size_t r = 0; r < spec.robot_count; ++r) {
    for (std::uint32_t i = 0; i + 1 < poses; ++i)
      out.graph.add_edge(make(out.ground_truth, VertexId::pose(r, i), VertexId::pose(r, i + 1)));
    if (spec.kind == ScenarioKind::Grid3D)
      out.graph.add_edge(make(out.ground_truth, VertexId::pose(r, poses - 1), VertexId::pose(r, 0)));
  }
  for (const auto& [a, b] : links) out.graph.add_edge(make(out.ground_truth, a, b));
  out.graph.set_anchor(anchor);
  for (const auto& [v, x] : chain_spanning_tree(out.graph)) out.graph.add_vertex(v, x);
  return out;
}

}  // namespace dgs

#endif  // DGS_SCENARIO_HPP
