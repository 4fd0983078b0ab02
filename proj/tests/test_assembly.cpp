#include "dgs/assembly.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace dgs;
using dgs::testing::make_edge;
using dgs::testing::random_graph;

namespace {

// Columns of a linear-affine residual map found by probing unit vectors:
// f(y) = A y - b, so b = -f(0) and A e_j = f(e_j) - f(0).
struct Stacked {
  MatrixXd A;
  VectorXd b;
};

Stacked probe(const std::function<VectorXd(const VectorXd&)>& f, Index n) {
  const VectorXd f0 = f(VectorXd::Zero(n));
  Stacked s;
  s.b = -f0;
  s.A.resize(f0.size(), n);
  for (Index j = 0; j < n; ++j) s.A.col(j) = f(VectorXd::Unit(n, j)) - f0;
  return s;
}

// Relaxed rotation residuals written directly as matrices.
VectorXd rotation_residuals(const MultiRobotGraph& g, const BlockLinearSystem& sys, const VectorXd& y) {
  auto rot = [&](const VertexId& v) -> Mat3 {
    if (v == g.anchor()) return Mat3::Identity();
    return vec_to_rows(y.segment<9>(sys.offsets.at(v)));
  };
  VectorXd out(9 * static_cast<Index>(g.edges().size()));
  Index row = 0;
  for (const auto& e : g.edges()) {
    const Mat3 res = std::sqrt(e.omega_r_sq) * (rot(e.to) - rot(e.from) * e.rotation);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[row++] = res(i, j);
  }
  return out;
}

// Linearized pose residuals in (t, theta).
VectorXd pose_residuals(const MultiRobotGraph& g, const BlockLinearSystem& sys, const RotationMap& rh,
                        const VectorXd& y) {
  auto var = [&](const VertexId& v) -> std::pair<Vec3, Vec3> {
    if (v == g.anchor()) return {Vec3::Zero(), Vec3::Zero()};
    const Index o = sys.offsets.at(v);
    return {y.segment<3>(o), y.segment<3>(o + 3)};
  };
  VectorXd out(12 * static_cast<Index>(g.edges().size()));
  Index row = 0;
  for (const auto& e : g.edges()) {
    const auto [ta, tha] = var(e.from);
    const auto [tb, thb] = var(e.to);
    const Mat3& ra = rh.at(e.from);
    const Mat3& rb = rh.at(e.to);
    const Vec3 rt = std::sqrt(e.omega_t_sq) * (tb - ta - ra * e.translation - ra * skew(tha) * e.translation);
    for (int i = 0; i < 3; ++i) out[row++] = rt[i];
    const Mat3 rr = std::sqrt(e.omega_r_sq / 2.0) * (rb - ra * e.rotation + rb * skew(thb) - ra * skew(tha) * e.rotation);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[row++] = rr(i, j);
  }
  return out;
}

RotationMap perturbed_rotations(const Estimate& truth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  RotationMap out;
  for (const auto& [v, x] : truth) out[v] = x.rotation * exp_map(Vec3(n(rng), n(rng), n(rng)));
  out[VertexId::pose(0, 0)] = truth.at(VertexId::pose(0, 0)).rotation;
  return out;
}

}  // namespace

TEST(Assembly, RotationSystemMatchesExplicitStacking) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto [g, truth] = random_graph(2, 3, 3, seed, 0.1);  // 6 poses
    const BlockLinearSystem sys = build_rotation_system(g);
    const Stacked s = probe([&](const VectorXd& y) { return rotation_residuals(g, sys, y); }, sys.size());
    const MatrixXd h = s.A.transpose() * s.A;
    const VectorXd gv = s.A.transpose() * s.b;
    EXPECT_LE((MatrixXd(sys.H) - h).norm(), 1e-10 * (1.0 + h.norm()));
    EXPECT_LE((sys.g - gv).norm(), 1e-10 * (1.0 + gv.norm()));
    EXPECT_NEAR(sys.b_squared, s.b.squaredNorm(), 1e-10);
    const VectorXd y = VectorXd::Random(sys.size());
    EXPECT_NEAR(sys.objective(y), (s.A * y - s.b).squaredNorm(), 1e-9 * (1.0 + sys.objective(y)));
  }
}

TEST(Assembly, PoseSystemMatchesExplicitStacking) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto [g, truth] = random_graph(2, 3, 4, seed + 10, 0.1);
    const RotationMap rh = perturbed_rotations(truth, seed);
    const BlockLinearSystem sys = build_pose_system(g, rh);
    const Stacked s = probe([&](const VectorXd& y) { return pose_residuals(g, sys, rh, y); }, sys.size());
    const MatrixXd h = s.A.transpose() * s.A;
    const VectorXd gv = s.A.transpose() * s.b;
    EXPECT_LE((MatrixXd(sys.H) - h).norm(), 1e-10 * (1.0 + h.norm()));
    EXPECT_LE((sys.g - gv).norm(), 1e-10 * (1.0 + gv.norm()));
  }
}

TEST(Assembly, IdentityConsensus) {
  MultiRobotGraph g(1);
  g.add_edge(make_edge(VertexId::pose(0, 0), VertexId::pose(0, 1), {Mat3::Identity(), Vec3::Zero()}));
  g.set_anchor(VertexId::pose(0, 0));
  const BlockLinearSystem sys = build_rotation_system(g);
  ASSERT_EQ(sys.size(), 9);
  EXPECT_LE((direct_solve(sys) - rows_to_vec(Mat3::Identity())).norm(), 1e-14);
}

TEST(Assembly, NoiselessChainRecoversRotations) {
  auto [g, truth] = random_graph(1, 3, 0, 21);
  const BlockLinearSystem sys = build_rotation_system(g);
  const RotationMap r = project_rotations(relaxed_rotations(sys, direct_solve(sys)));
  for (const auto& [v, x] : truth) EXPECT_LE((r.at(v) - x.rotation).norm(), 1e-10);
}

TEST(Assembly, NoiselessPoseSystemRecoversTruth) {
  auto [g, truth] = random_graph(3, 4, 5, 22);
  RotationMap rh;
  for (const auto& [v, x] : truth) rh[v] = x.rotation;
  const BlockLinearSystem sys = build_pose_system(g, rh);
  const VectorXd p = direct_solve(sys);
  for (const auto& [v, o] : sys.offsets) {
    EXPECT_LE(p.segment<3>(o + 3).norm(), 1e-10);
    EXPECT_LE((p.segment<3>(o) - truth.at(v).translation).norm(), 1e-10);
  }
}

TEST(Assembly, SingleEdgeTranslationChain) {
  MultiRobotGraph g(1);
  const Vec3 t(0.3, -1.0, 2.0);
  g.add_edge(make_edge(VertexId::pose(0, 0), VertexId::pose(0, 1), {rot_x(0.4), t}));
  g.set_anchor(VertexId::pose(0, 0));
  const RotationMap rh{{VertexId::pose(0, 0), rot_z(0.7)}, {VertexId::pose(0, 1), rot_z(0.7) * rot_x(0.4)}};
  const Vec3 anchor_t(1, 2, 3);
  const BlockLinearSystem sys = build_pose_system(g, rh, anchor_t);
  const VectorXd p = direct_solve(sys);
  EXPECT_LE((p.head<3>() - (anchor_t + rot_z(0.7) * t)).norm(), 1e-12);
  EXPECT_LE(p.tail<3>().norm(), 1e-12);
}

TEST(Assembly, MissingRotationIsAnError) {
  auto [g, truth] = random_graph(1, 3, 0, 23);
  RotationMap rh{{VertexId::pose(0, 0), Mat3::Identity()}};
  EXPECT_THROW(build_pose_system(g, rh), GraphError);
}

TEST(Assembly, ApplyCorrection) {
  auto [g, truth] = random_graph(2, 3, 2, 24);
  RotationMap rh;
  for (const auto& [v, x] : truth) rh[v] = x.rotation;
  const BlockLinearSystem sys = build_pose_system(g, rh);
  const Estimate zero = apply_correction(rh, sys, VectorXd::Zero(sys.size()));
  for (const auto& [v, x] : zero) {
    EXPECT_EQ(x.rotation, rh.at(v));
    EXPECT_EQ(x.translation, Vec3::Zero());
  }
  const VectorXd p = 0.01 * VectorXd::Random(sys.size());
  const Estimate moved = apply_correction(rh, sys, p);
  EXPECT_EQ(moved.at(g.anchor()).rotation, rh.at(g.anchor()));
  EXPECT_EQ(moved.at(g.anchor()).translation, Vec3::Zero());
  for (const auto& [v, o] : sys.offsets) {
    const Vec3 th = p.segment<3>(o + 3);
    const double gap = chordal_residual(Mat3::Identity(), moved.at(v).rotation, rh.at(v) * first_order_exp(th));
    EXPECT_LE(gap, 10.0 * std::pow(th.norm(), 4));
  }
  EXPECT_THROW(apply_correction(rh, sys, VectorXd::Zero(sys.size() + 1)), GraphError);
}

TEST(Assembly, SymmetricPositiveDefiniteWithLaplacianSupport) {
  auto [g, truth] = random_graph(4, 4, 6, 25, 0.05);
  const BlockLinearSystem rot = build_rotation_system(g);
  RotationMap rh;
  for (const auto& [v, x] : truth) rh[v] = x.rotation;
  const BlockLinearSystem pose = build_pose_system(g, rh);
  std::set<std::pair<std::size_t, std::size_t>> adjacency;
  for (const auto& e : g.edges())
    if (e.is_separator()) {
      const bool anchored = e.from == g.anchor() || e.to == g.anchor();
      if (anchored) continue;
      adjacency.emplace(e.from.robot.value, e.to.robot.value);
      adjacency.emplace(e.to.robot.value, e.from.robot.value);
    }
  for (const BlockLinearSystem* sys : {&rot, &pose}) {
    const MatrixXd h(sys->H);
    EXPECT_LE((h - h.transpose()).norm(), 1e-9);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_EQ(block_support(*sys), adjacency);
  }
}
