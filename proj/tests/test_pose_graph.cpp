#include "dgs/pose_graph.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dgs;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {exp_map(Vec3(n(rng), n(rng), n(rng))), Vec3(n(rng), n(rng), n(rng))};
}

RelativeMeasurement edge(VertexId a, VertexId b, const Measurement& m, double wt = 1.0, double wr = 1.0) {
  return {a, b, m.rotation, m.translation, wt, wr, infer_edge_kind(a, b)};
}

}  // namespace

TEST(PoseGraph, ComposeMeasurement) {
  const Measurement z0 = compose_measurement(Pose::identity(), Pose::identity());
  EXPECT_EQ(z0.rotation, Mat3::Identity());
  EXPECT_EQ(z0.translation, Vec3::Zero());

  const Pose b{rot_z(0.5), Vec3(1, 2, 3)};
  const Measurement z1 = compose_measurement(Pose::identity(), b);
  EXPECT_LE((z1.rotation - rot_z(0.5)).norm(), 1e-15);
  EXPECT_LE((z1.translation - Vec3(1, 2, 3)).norm(), 1e-15);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Pose xa = random_pose(rng);
    const Pose xb = random_pose(rng);
    const Measurement z = compose_measurement(xa, xb);
    const Pose rebuilt = xa * Pose{z.rotation, z.translation};
    EXPECT_LE((rebuilt.rotation - xb.rotation).norm(), 1e-12);
    EXPECT_LE((rebuilt.translation - xb.translation).norm(), 1e-12);
  }
}

TEST(PoseGraph, CostHandArithmetic) {
  MultiRobotGraph g(1);
  g.add_edge({VertexId::pose(0, 0), VertexId::pose(0, 1), rot_z(std::numbers::pi), Vec3(1, 0, 0), 1.0, 1.0,
              EdgeKind::Odometry});
  Estimate est{{VertexId::pose(0, 0), Pose::identity()}, {VertexId::pose(0, 1), Pose::identity()}};
  EXPECT_NEAR(graph_cost(g, est), 5.0, 1e-12);

  MultiRobotGraph g2(1);
  g2.add_edge({VertexId::pose(0, 0), VertexId::pose(0, 1), rot_z(std::numbers::pi), Vec3(1, 0, 0), 2.0, 2.0,
               EdgeKind::Odometry});
  EXPECT_NEAR(graph_cost(g2, est), 10.0, 1e-12);
}

TEST(PoseGraph, CostMissingVertexNamesIt) {
  MultiRobotGraph g(1);
  g.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), {Mat3::Identity(), Vec3::Zero()}));
  Estimate est{{VertexId::pose(0, 0), Pose::identity()}};
  try {
    graph_cost(g, est);
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("x(0,1)"), std::string::npos);
  }
}

TEST(PoseGraph, CostInvariantUnderGlobalTransform) {
  std::mt19937_64 rng(12);
  MultiRobotGraph g(2);
  Estimate est;
  for (std::uint32_t i = 0; i < 6; ++i) {
    est[VertexId::pose(0, i)] = random_pose(rng);
    est[VertexId::pose(1, i)] = random_pose(rng);
  }
  for (std::uint32_t i = 0; i + 1 < 6; ++i) {
    g.add_edge(edge(VertexId::pose(0, i), VertexId::pose(0, i + 1), compose_measurement(random_pose(rng), random_pose(rng)), 2.0, 3.0));
    g.add_edge(edge(VertexId::pose(1, i), VertexId::pose(1, i + 1), compose_measurement(random_pose(rng), random_pose(rng))));
  }
  g.add_edge(edge(VertexId::pose(0, 2), VertexId::pose(1, 3), compose_measurement(random_pose(rng), random_pose(rng))));
  const Pose t = random_pose(rng);
  EXPECT_NEAR(graph_cost(g, est), graph_cost(g, transform_estimate(est, t)), 1e-9);
}

TEST(PoseGraph, NoiselessCostIsZeroAtTruth) {
  std::mt19937_64 rng(13);
  MultiRobotGraph g(1);
  Estimate truth;
  for (std::uint32_t i = 0; i < 5; ++i) truth[VertexId::pose(0, i)] = random_pose(rng);
  for (std::uint32_t i = 0; i + 1 < 5; ++i)
    g.add_edge(edge(VertexId::pose(0, i), VertexId::pose(0, i + 1),
                    compose_measurement(truth[VertexId::pose(0, i)], truth[VertexId::pose(0, i + 1)])));
  EXPECT_LE(graph_cost(g, truth), 1e-20);
}

TEST(PoseGraph, EdgeValidation) {
  MultiRobotGraph g(2);
  const Measurement z{Mat3::Identity(), Vec3::Zero()};
  EXPECT_THROW(g.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), z, 0.0, 1.0)), GraphError);
  EXPECT_THROW(g.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 0), z)), GraphError);
  RelativeMeasurement bad = edge(VertexId::pose(0, 0), VertexId::pose(1, 0), z);
  bad.kind = EdgeKind::Odometry;
  EXPECT_THROW(g.add_edge(bad), GraphError);
  EXPECT_THROW(infer_edge_kind(VertexId::pose(0, 0), VertexId::object(1, 0)), GraphError);
  EXPECT_EQ(infer_edge_kind(VertexId::object(0, 0), VertexId::object(1, 0)), EdgeKind::ObjectObject);
  EXPECT_EQ(infer_edge_kind(VertexId::pose(0, 7), VertexId::pose(0, 0)), EdgeKind::LoopClosure);
  EXPECT_THROW(g.set_anchor(VertexId::object(0, 0)), GraphError);
}

TEST(PoseGraph, ValidateRejectsDegenerateGraphs) {
  MultiRobotGraph empty(1);
  EXPECT_THROW(empty.validate(), GraphError);
  MultiRobotGraph g(2);
  const Measurement z{Mat3::Identity(), Vec3::Zero()};
  g.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), z));
  g.add_edge(edge(VertexId::pose(1, 0), VertexId::pose(1, 1), z));
  EXPECT_THROW(g.validate(), GraphError);
  g.add_edge(edge(VertexId::pose(0, 1), VertexId::pose(1, 0), z));
  EXPECT_NO_THROW(g.validate());
}

TEST(PoseGraph, PartitionSingleRobotAndSeparator) {
  const Measurement z{Mat3::Identity(), Vec3::Zero()};
  MultiRobotGraph chain(1);
  chain.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), z));
  chain.add_edge(edge(VertexId::pose(0, 1), VertexId::pose(0, 2), z));
  const auto p = partition_edges(chain, RobotId(0));
  EXPECT_EQ(p.intra.size(), 2u);
  EXPECT_TRUE(p.separators.empty());

  MultiRobotGraph two(2);
  two.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), z));
  const auto sep = two.add_edge(edge(VertexId::pose(0, 1), VertexId::pose(1, 0), z));
  EXPECT_EQ(partition_edges(two, RobotId(0)).separators, std::vector<std::size_t>{sep});
  EXPECT_EQ(partition_edges(two, RobotId(1)).separators, std::vector<std::size_t>{sep});
  EXPECT_TRUE(partition_edges(two, RobotId(1)).intra.empty());
  EXPECT_THROW(partition_edges(two, RobotId(5)), GraphError);
}

TEST(PoseGraph, ChainSpanningTreeReproducesNoiselessTruth) {
  std::mt19937_64 rng(14);
  MultiRobotGraph g(1);
  Estimate truth;
  truth[VertexId::pose(0, 0)] = Pose::identity();
  for (std::uint32_t i = 1; i < 5; ++i) truth[VertexId::pose(0, i)] = random_pose(rng);
  g.add_edge(edge(VertexId::pose(0, 0), VertexId::pose(0, 1), compose_measurement(truth[VertexId::pose(0, 0)], truth[VertexId::pose(0, 1)])));
  g.add_edge(edge(VertexId::pose(0, 2), VertexId::pose(0, 1), compose_measurement(truth[VertexId::pose(0, 2)], truth[VertexId::pose(0, 1)])));
  g.add_edge(edge(VertexId::pose(0, 2), VertexId::pose(0, 3), compose_measurement(truth[VertexId::pose(0, 2)], truth[VertexId::pose(0, 3)])));
  g.add_edge(edge(VertexId::pose(0, 3), VertexId::pose(0, 4), compose_measurement(truth[VertexId::pose(0, 3)], truth[VertexId::pose(0, 4)])));
  const Estimate est = chain_spanning_tree(g);
  for (const auto& [v, x] : truth) {
    EXPECT_LE((est.at(v).rotation - x.rotation).norm(), 1e-12);
    EXPECT_LE((est.at(v).translation - x.translation).norm(), 1e-12);
  }
}
