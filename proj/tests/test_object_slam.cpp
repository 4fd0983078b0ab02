#include "dgs/chordal.hpp"
#include "dgs/metrics.hpp"
#include "dgs/object_slam.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace dgs;
using dgs::testing::make_edge;
using dgs::testing::random_pose;

namespace {

ObjectLandmark landmark(std::uint32_t index, const std::string& label, const Vec3& p, std::size_t owner = 0) {
  return {RobotId(owner), index, label, Pose{Mat3::Identity(), p}};
}

Mat6 covariance(double st, double sr) {
  Mat6 c = Mat6::Zero();
  c.diagonal() << st * st, st * st, st * st, sr * sr, sr * sr, sr * sr;
  return c;
}

/// Two robots on short chains, each seeing the same single object.
struct SharedObjectSetup {
  MultiRobotGraph graph{2};
  Estimate truth;
  std::vector<ObjectLandmark> map_a;
  std::vector<ObjectLandmark> map_b;
  std::vector<Pose> initial;
};

SharedObjectSetup shared_object_setup(double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  SharedObjectSetup s;
  const Pose object{rot_z(0.7), Vec3(1.0, 1.0, 0.5)};
  for (std::size_t r = 0; r < 2; ++r)
    for (std::uint32_t i = 0; i < 3; ++i)
      s.truth[VertexId::pose(r, i)] = Pose{rot_z(0.2 * i + 1.5 * r), Vec3(0.5 * i, 2.0 * r, 0.0)};
  s.truth[VertexId::pose(0, 0)] = Pose::identity();
  s.truth[VertexId::object(0, 0)] = object;
  s.truth[VertexId::object(1, 0)] = object;
  auto noisy = [&](const VertexId& a, const VertexId& b) {
    return compose_measurement(s.truth.at(a), s.truth.at(b), noise * Vec3(n(rng), n(rng), n(rng)),
                               noise * Vec3(n(rng), n(rng), n(rng)));
  };
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::uint32_t i = 0; i + 1 < 3; ++i)
      s.graph.add_edge(make_edge(VertexId::pose(r, i), VertexId::pose(r, i + 1),
                                 noisy(VertexId::pose(r, i), VertexId::pose(r, i + 1)), 100.0, 100.0));
    s.graph.add_vertex(VertexId::object(r, 0));
    add_object_pose_factor(s.graph, VertexId::pose(r, 2), VertexId::object(r, 0),
                           noisy(VertexId::pose(r, 2), VertexId::object(r, 0)), covariance(0.1, 0.1));
    s.initial.push_back(s.truth.at(VertexId::pose(r, 0)));
  }
  // Maps in each robot's own frame, as dead reckoning would produce them.
  s.map_a.push_back({RobotId(0), 0, "chair", s.initial[0].inverse() * object});
  s.map_b.push_back({RobotId(1), 0, "chair", s.initial[1].inverse() * object});
  s.graph.set_anchor(VertexId::pose(0, 0));
  return s;
}

}  // namespace

TEST(ObjectPoseFactor, ZeroResidualAtIdentityPose) {
  MultiRobotGraph g(1);
  const VertexId x = VertexId::pose(0, 0);
  const VertexId o = VertexId::object(0, 0);
  g.add_vertex(x);
  g.add_vertex(o);
  const Pose obj{rot_x(0.4) * rot_z(-1.1), Vec3(0.3, -2.0, 1.0)};
  add_object_pose_factor(g, x, o, {obj.rotation, obj.translation}, covariance(0.1, 0.05));
  ASSERT_EQ(g.edges().size(), 1u);
  const auto& e = g.edges().front();
  EXPECT_EQ(e.kind, EdgeKind::ObjectPose);
  EXPECT_DOUBLE_EQ(e.omega_t_sq, 1.0 / 0.01);
  EXPECT_DOUBLE_EQ(e.omega_r_sq, 1.0 / 0.0025);
  EXPECT_LE(graph_cost(g, {{x, Pose::identity()}, {o, obj}}), 1e-24);
}

TEST(ObjectPoseFactor, RejectsUnknownVerticesAndAnisotropy) {
  MultiRobotGraph g(1);
  g.add_vertex(VertexId::pose(0, 0));
  EXPECT_THROW(add_object_pose_factor(g, VertexId::pose(0, 0), VertexId::object(0, 3), {}, covariance(1, 1)),
               GraphError);
  EXPECT_THROW(add_object_pose_factor(g, VertexId::pose(0, 9), VertexId::object(0, 0), {}, covariance(1, 1)),
               GraphError);
  g.add_vertex(VertexId::object(0, 0));
  Mat6 c = covariance(0.1, 0.1);
  c(0, 0) = 0.02;
  EXPECT_THROW(add_object_pose_factor(g, VertexId::pose(0, 0), VertexId::object(0, 0), {}, c), GraphError);
  c = covariance(0.1, 0.1);
  c(0, 1) = c(1, 0) = 0.001;
  EXPECT_THROW(add_object_pose_factor(g, VertexId::pose(0, 0), VertexId::object(0, 0), {}, c), GraphError);
  EXPECT_THROW(add_object_pose_factor(g, VertexId::pose(0, 0), VertexId::object(0, 0), {}, -covariance(1, 1)),
               GraphError);
  EXPECT_TRUE(g.edges().empty());
}

TEST(Association, EmptyMapCreatesLandmark) {
  EXPECT_TRUE(std::holds_alternative<NewLandmark>(associate_objects("chair", Vec3::Zero(), {}, 1.0)));
}

TEST(Association, NearestWithinGate) {
  const std::vector<ObjectLandmark> map{landmark(0, "chair", Vec3(0.8, 0, 0)), landmark(1, "chair", Vec3(0, 0.3, 0)),
                                        landmark(2, "table", Vec3(0.1, 0, 0))};
  const Association a = associate_objects("chair", Vec3::Zero(), map, 1.0);
  ASSERT_TRUE(std::holds_alternative<Matched>(a));
  EXPECT_EQ(std::get<Matched>(a).index, 1u);
}

TEST(Association, OutsideGateOrOtherLabelIsNew) {
  const std::vector<ObjectLandmark> map{landmark(0, "chair", Vec3(1.4, 0, 0)), landmark(1, "table", Vec3(0.1, 0, 0))};
  EXPECT_TRUE(std::holds_alternative<NewLandmark>(associate_objects("chair", Vec3::Zero(), map, 1.0)));
  EXPECT_THROW(associate_objects("chair", Vec3::Zero(), map, 0.0), GraphError);
}

TEST(Association, TiesGoToLowestIndex) {
  const std::vector<ObjectLandmark> map{landmark(4, "plant", Vec3(0, 0.5, 0)), landmark(2, "plant", Vec3(0.5, 0, 0)),
                                        landmark(3, "plant", Vec3(0, 0, 0.5))};
  const Association a = associate_objects("plant", Vec3::Zero(), map, 1.0);
  ASSERT_TRUE(std::holds_alternative<Matched>(a));
  EXPECT_EQ(std::get<Matched>(a).index, 2u);
}

TEST(Rendezvous, DisjointMapsGiveNoPairs) {
  MultiRobotGraph g(2);
  CommunicationLedger ledger(2);
  ObjectSceneSpec spec;
  const std::vector<ObjectLandmark> a{landmark(0, "chair", Vec3(0, 0, 0), 0), landmark(1, "table", Vec3(5, 0, 0), 0)};
  const std::vector<ObjectLandmark> b{landmark(0, "chair", Vec3(9, 9, 0), 1), landmark(1, "plant", Vec3(5, 0, 0), 1),
                                      landmark(2, "bottle", Vec3(0, 0, 0), 1)};
  const auto pairs = rendezvous_share(g, a, b, RobotId(0), RobotId(1), {Pose::identity(), Pose::identity()}, ledger, spec);
  EXPECT_TRUE(pairs.empty());
  EXPECT_TRUE(g.edges().empty());
  EXPECT_EQ(ledger.traffic(RobotId(0), CommPhase::Objects).bytes, 2u * (spec.label_bytes + 48));
  EXPECT_EQ(ledger.traffic(RobotId(1), CommPhase::Objects).bytes, 3u * (spec.label_bytes + 48));
  EXPECT_EQ(ledger.rendezvous_count(), 1u);
}

TEST(Rendezvous, BytesAreObjectCountTimesLabelPlusPose) {
  for (std::size_t label_bytes : {8u, 16u, 32u}) {
    for (std::size_t n_o : {1u, 4u, 7u}) {
      MultiRobotGraph g(2);
      CommunicationLedger ledger(2);
      ObjectSceneSpec spec;
      spec.label_bytes = label_bytes;
      std::vector<ObjectLandmark> a;
      for (std::uint32_t k = 0; k < n_o; ++k) a.push_back(landmark(k, "chair", Vec3(3.0 * k, 0, 0), 0));
      rendezvous_share(g, a, {}, RobotId(0), RobotId(1), {Pose::identity(), Pose::identity()}, ledger, spec);
      EXPECT_EQ(ledger.traffic(RobotId(0), CommPhase::Objects).bytes, n_o * (label_bytes + 48));
      EXPECT_EQ(map_footprint(n_o, 1, 1, 1, 1, label_bytes).object_exchange_bytes, n_o * (label_bytes + 48));
    }
  }
}

TEST(Rendezvous, SingleSharedObjectIsTiedAfterConvergence) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SharedObjectSetup s = shared_object_setup(1e-3, seed);
    CommunicationLedger ledger(2);
    ObjectSceneSpec spec;
    const auto pairs = rendezvous_share(s.graph, s.map_a, s.map_b, RobotId(0), RobotId(1), s.initial, ledger, spec);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].a, VertexId::object(0, 0));
    EXPECT_EQ(pairs[0].b, VertexId::object(1, 0));
    EXPECT_EQ(s.graph.edges().back().kind, EdgeKind::ObjectObject);
    ASSERT_TRUE(s.graph.is_connected());

    const CentralizedResult central = solve_two_stage(s.graph);
    const DistributedResult d = solve_object_slam_distributed(s.graph, SolverConfig::dgs(1e-7));
    ASSERT_TRUE(d.converged);
    const auto gap = [](const Estimate& e) {
      const Pose& a = e.at(VertexId::object(0, 0));
      const Pose& b = e.at(VertexId::object(1, 0));
      return (a.translation - b.translation).norm() + rotation_angle(a.rotation.transpose() * b.rotation);
    };
    // The tie is as tight as the centralized optimum allows.
    EXPECT_LE(gap(d.estimate), gap(central.estimate) + 1e-4);
    EXPECT_LE(gap(d.estimate), 1e-2);
  }
}

TEST(ObjectSlam, CentralizedRecoversObjectsOnConsistentGraph) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto [g, truth] = dgs::testing::random_graph(3, 4, 4, seed);
    std::mt19937_64 rng(seed + 100);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::uint32_t k = 0; k < 2; ++k) {
        const VertexId o = VertexId::object(r, k);
        truth[o] = random_pose(rng, 2.0);
        g.add_vertex(o);
        for (std::uint32_t i : {0u, 3u}) {
          const VertexId x = VertexId::pose(r, i);
          add_object_pose_factor(g, x, o, compose_measurement(truth.at(x), truth.at(o)), covariance(0.2, 0.1));
        }
      }
    const CentralizedResult c = solve_two_stage(g);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::uint32_t k = 0; k < 2; ++k) {
        const VertexId o = VertexId::object(r, k);
        EXPECT_LE((c.estimate.at(o).translation - truth.at(o).translation).norm(), 1e-6);
        EXPECT_LE((c.estimate.at(o).rotation - truth.at(o).rotation).norm(), 1e-6);
      }
    // Dense normal-equation oracle on the same linear system.
    RotationMap rotations;
    for (const auto& [v, x] : c.estimate) rotations.emplace(v, x.rotation);
    const BlockLinearSystem sys = build_pose_system(g, rotations);
    const VectorXd dense = MatrixXd(sys.H).ldlt().solve(sys.g);
    EXPECT_LE((dense - direct_solve(sys)).norm(), 1e-8 * (1.0 + dense.norm()));
  }
}

TEST(ObjectSlam, ObjectFreeGraphMatchesBasePipelineBitForBit) {
  auto [g, truth] = dgs::testing::random_graph(3, 5, 6, 11, 0.05);
  for (const SolverConfig& cfg : {SolverConfig::dgs(1e-3), SolverConfig::dj(1e-2)}) {
    const DistributedResult base = run_distributed_two_stage(g, cfg);
    const DistributedResult obj = solve_object_slam_distributed(g, cfg);
    ASSERT_EQ(base.estimate.size(), obj.estimate.size());
    for (const auto& [v, x] : base.estimate) {
      EXPECT_TRUE(x.rotation == obj.estimate.at(v).rotation);
      EXPECT_TRUE(x.translation == obj.estimate.at(v).translation);
    }
    EXPECT_EQ(base.rotation_iterations(), obj.rotation_iterations());
    EXPECT_EQ(base.pose_iterations(), obj.pose_iterations());
    EXPECT_EQ(base.ledger.total_bytes(), obj.ledger.total_bytes());
  }
}

TEST(ObjectScene, GeneratedSceneIsConsistent) {
  ObjectSceneSpec spec;
  spec.rng_seed = 3;
  const ObjectScene sc = generate_object_scene(spec);
  EXPECT_TRUE(sc.graph.is_connected());
  EXPECT_EQ(sc.objects.size(), 5u);
  EXPECT_FALSE(sc.shared.empty());
  // Every landmark has ground truth and lives in its owner's block.
  for (std::size_t r = 0; r < 2; ++r)
    for (const auto& lm : sc.maps[r]) {
      EXPECT_EQ(lm.owner.value, r);
      EXPECT_TRUE(sc.ground_truth.count(lm.id()));
    }
  // Shared pairs tie landmarks of the same physical object.
  for (const auto& p : sc.shared)
    EXPECT_LE((sc.ground_truth.at(p.a).translation - sc.ground_truth.at(p.b).translation).norm(), 1e-12);
  std::uint64_t expected = 0;
  for (const auto& m : sc.maps) expected += m.size() * (spec.label_bytes + 48);
  EXPECT_EQ(sc.ledger.total_bytes(), expected);

  // Same seed, same scene.
  const ObjectScene again = generate_object_scene(spec);
  ASSERT_EQ(again.graph.edges().size(), sc.graph.edges().size());
  for (std::size_t i = 0; i < sc.graph.edges().size(); ++i)
    EXPECT_TRUE(again.graph.edges()[i].translation == sc.graph.edges()[i].translation);
}

TEST(ObjectScene, NoiselessSceneHasZeroCostAtTruth) {
  ObjectSceneSpec spec;
  spec.sigma_r_deg = 0.0;
  spec.sigma_t = 0.0;
  const ObjectScene sc = generate_object_scene(spec);
  EXPECT_LE(graph_cost(sc.graph, sc.ground_truth), 1e-18);
  // Without noise every object is seen once per robot and matched across.
  for (const auto& m : sc.maps) EXPECT_EQ(m.size(), 5u);
  EXPECT_EQ(sc.shared.size(), 5u);
}

TEST(ObjectScene, FalsePositivesAreFlagged) {
  ObjectSceneSpec spec;
  spec.false_positive_rate = 1.0;
  const ObjectScene sc = generate_object_scene(spec);
  std::size_t fp = 0;
  for (const auto& d : sc.detections) fp += d.is_false_positive ? 1 : 0;
  EXPECT_EQ(fp, 2u * spec.poses_per_robot);
}

TEST(ObjectScene, RejectsInvalidSpecs) {
  ObjectSceneSpec s;
  s.robot_count = 1;
  EXPECT_THROW(generate_object_scene(s), GraphError);
  s = {};
  s.gate_distance = 0.0;
  EXPECT_THROW(generate_object_scene(s), GraphError);
  s = {};
  s.object_spread = 2.0;
  EXPECT_THROW(generate_object_scene(s), GraphError);
}

TEST(MapFootprint, MatchesClosedForm) {
  const MapFootprint f = map_footprint(20, 500, 300, 307200, 16, 16);
  EXPECT_EQ(f.object_map_bytes, 20u * 500u * 16u);
  EXPECT_EQ(f.point_cloud_bytes, 300u * 307200u * 16u);
  EXPECT_EQ(f.object_exchange_bytes, 20u * 64u);
  EXPECT_DOUBLE_EQ(f.ratio, (300.0 * 307200.0) / (20.0 * 500.0));
  EXPECT_EQ(map_footprint(0, 5, 1, 1, 1, 1).ratio, 0.0);
}

TEST(Information, IsotropicRoundTrip) {
  const IsotropicWeights w = weights_from_information(isotropic_information(25.0, 400.0));
  EXPECT_DOUBLE_EQ(w.omega_t_sq, 25.0);
  EXPECT_DOUBLE_EQ(w.omega_r_sq, 400.0);
  Mat6 bad = isotropic_information(1.0, 1.0);
  bad(5, 5) = 2.0;
  EXPECT_THROW(weights_from_information(bad), GraphError);
}
