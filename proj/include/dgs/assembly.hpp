#ifndef DGS_ASSEMBLY_HPP
#define DGS_ASSEMBLY_HPP

#include "dgs/pose_graph.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace dgs {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SystemKind { Rotation, Pose };

/// 9 for the relaxed rotation rows vec(R^T), 6 for (t, theta).
constexpr int variable_dim(SystemKind k) { return k == SystemKind::Rotation ? 9 : 6; }

using RotationMap = std::map<VertexId, Mat3>;

struct RobotBlock {
  RobotId robot;
  Index offset = 0;
  Index dim = 0;
  std::vector<VertexId> variables;  // free (non-anchor) variables in slot order
};

/// Share of one robot's diagonal block and right-hand side that comes from
/// its edges to one other robot (anchor edges excluded).
struct SeparatorTerm {
  MatrixXd h;
  VectorXd g;
};

using SeparatorTerms = std::map<std::size_t, SeparatorTerm>;  // keyed by the other robot

/// Normal equations H y = g of a linear least-squares problem |A y - b|^2,
/// partitioned by robot. H is stored sparse and symmetric (both triangles).
struct BlockLinearSystem {
  SystemKind kind = SystemKind::Rotation;
  VertexId anchor;
  std::vector<RobotBlock> blocks;     // indexed by robot id
  std::map<VertexId, Index> offsets;  // global offset of each free variable
  SparseMatrix H;
  VectorXd g;
  double b_squared = 0.0;             // |b|^2, the objective at y = 0
  std::vector<SeparatorTerms> separator_terms;  // per robot; empty unless built from a graph

  int var_dim() const { return variable_dim(kind); }
  Index size() const { return g.size(); }
  std::size_t robot_count() const { return blocks.size(); }

  const RobotBlock& block(RobotId r) const { return blocks.at(r.value); }

  MatrixXd diagonal_block(RobotId r) const {
    const auto& b = block(r);
    return MatrixXd(H.block(b.offset, b.offset, b.dim, b.dim));
  }

  MatrixXd dense_block(RobotId row, RobotId col) const {
    const auto& a = block(row);
    const auto& b = block(col);
    return MatrixXd(H.block(a.offset, b.offset, a.dim, b.dim));
  }

  VectorXd segment(const VectorXd& y, RobotId r) const {
    const auto& b = block(r);
    return y.segment(b.offset, b.dim);
  }

  /// |A y - b|^2 evaluated from the normal equations.
  double objective(const VectorXd& y) const { return y.dot(H * y) - 2.0 * g.dot(y) + b_squared; }
};

/// Residual rows contributed by one edge: rows(y) = J0 y_v0 + J1 y_v1 - c.
/// Anchored variables are already folded into c.
struct EdgeRows {
  VertexId vars[2];
  bool free[2] = {true, true};
  MatrixXd jac[2];
  VectorXd c;
};

namespace detail {

/// Q = I3 (x) R^T acting on row-stacked rotations: rows of R_a R are R^T r_a,k.
inline Mat9 row_stack_operator(const Mat3& r) {
  Mat9 q = Mat9::Zero();
  for (int k = 0; k < 3; ++k) q.block<3, 3>(3 * k, 3 * k) = r.transpose();
  return q;
}

inline Mat3 generator(int k) {
  Vec3 e = Vec3::Zero();
  e[k] = 1.0;
  return skew(e);
}

}  // namespace detail

/// omega_R (r_b - Q r_a), anchor fixed to the identity rotation.
inline EdgeRows rotation_edge_rows(const RelativeMeasurement& e, const VertexId& anchor) {
  const double w = std::sqrt(e.omega_r_sq);
  EdgeRows rows;
  rows.vars[0] = e.from;
  rows.vars[1] = e.to;
  rows.jac[0] = -w * detail::row_stack_operator(e.rotation);
  rows.jac[1] = w * Mat9::Identity();
  rows.c = VectorXd::Zero(9);
  const Vec9 r_anchor = rows_to_vec(Mat3::Identity());
  for (int i = 0; i < 2; ++i) {
    if (rows.vars[i] == anchor) {
      rows.free[i] = false;
      rows.c -= rows.jac[i] * r_anchor;
    }
  }
  return rows;
}

/// Linearized translation rows (3, weight omega_t) and rotation rows (9,
/// weight omega_R / sqrt 2) in the unknowns (t, theta) of both endpoints,
/// with R = R_hat Exp(theta) ~ R_hat (I + S(theta)).
inline EdgeRows pose_edge_rows(const RelativeMeasurement& e, const Mat3& rhat_a, const Mat3& rhat_b,
                               const VertexId& anchor, const Vec3& anchor_translation = Vec3::Zero()) {
  const double wt = std::sqrt(e.omega_t_sq);
  const double wr = std::sqrt(0.5 * e.omega_r_sq);
  EdgeRows rows;
  rows.vars[0] = e.from;
  rows.vars[1] = e.to;
  MatrixXd ja = MatrixXd::Zero(12, 6);
  MatrixXd jb = MatrixXd::Zero(12, 6);
  VectorXd c = VectorXd::Zero(12);

  // t_b - t_a - R_a t - R_a S(theta_a) t = t_b - t_a + R_a S(t) theta_a - R_a t
  ja.block<3, 3>(0, 0) = -wt * Mat3::Identity();
  ja.block<3, 3>(0, 3) = wt * rhat_a * skew(e.translation);
  jb.block<3, 3>(0, 0) = wt * Mat3::Identity();
  c.head<3>() = wt * rhat_a * e.translation;

  // R_b - R_a R + R_b S(theta_b) - R_a S(theta_a) R
  for (int k = 0; k < 3; ++k) {
    const Mat3 gk = detail::generator(k);
    jb.block<9, 1>(3, 3 + k) = wr * rows_to_vec(rhat_b * gk);
    ja.block<9, 1>(3, 3 + k) = -wr * rows_to_vec(rhat_a * gk * e.rotation);
  }
  c.tail<9>() = -wr * rows_to_vec(rhat_b - rhat_a * e.rotation);

  rows.jac[0] = std::move(ja);
  rows.jac[1] = std::move(jb);
  rows.c = std::move(c);
  Eigen::Matrix<double, 6, 1> y_anchor;
  y_anchor << anchor_translation, Vec3::Zero();
  for (int i = 0; i < 2; ++i) {
    if (rows.vars[i] == anchor) {
      rows.free[i] = false;
      rows.c -= rows.jac[i] * y_anchor;
    }
  }
  return rows;
}

/// Free variables grouped by owning robot, in vertex order.
inline std::vector<RobotBlock> block_layout(const MultiRobotGraph& graph, SystemKind kind) {
  const Index d = variable_dim(kind);
  std::vector<RobotBlock> blocks(graph.robot_count());
  for (std::size_t r = 0; r < blocks.size(); ++r) blocks[r].robot = RobotId(r);
  for (const auto& [v, _] : graph.vertices()) {
    if (v == graph.anchor()) continue;
    blocks.at(v.robot.value).variables.push_back(v);
  }
  Index offset = 0;
  for (auto& b : blocks) {
    b.offset = offset;
    b.dim = d * static_cast<Index>(b.variables.size());
    offset += b.dim;
  }
  return blocks;
}

/// Coupling of an owned variable (at `row_offset`) to another robot's
/// variable: contributes block * y_remote to the owner's row.
struct RemoteCoupling {
  Index row_offset = 0;
  VertexId remote;
  MatrixXd block;
};

/// Normal equations restricted to the variables in `offsets`; products with
/// free variables outside `offsets` are returned as couplings.
struct PartialAssembly {
  SparseMatrix H;
  VectorXd g;
  double b_squared = 0.0;
  std::vector<RemoteCoupling> couplings;
};

/// Accumulates the rows of `edges` (visited in order, which fixes the
/// floating-point summation order).
template <class EdgeRange, class RowsOf>
PartialAssembly assemble_partial(const EdgeRange& edges, const std::map<VertexId, Index>& offsets, Index n, int d,
                                 const RowsOf& rows_of) {
  PartialAssembly out;
  std::vector<Eigen::Triplet<double>> triplets;
  out.g = VectorXd::Zero(n);
  for (const RelativeMeasurement& e : edges) {
    const EdgeRows rows = rows_of(e);
    out.b_squared += rows.c.squaredNorm();
    for (int i = 0; i < 2; ++i) {
      if (!rows.free[i]) continue;
      const auto it = offsets.find(rows.vars[i]);
      if (it == offsets.end()) continue;
      const Index oi = it->second;
      out.g.segment(oi, d) += rows.jac[i].transpose() * rows.c;
      for (int j = 0; j < 2; ++j) {
        if (!rows.free[j]) continue;
        const MatrixXd blk = rows.jac[i].transpose() * rows.jac[j];
        const auto jt = offsets.find(rows.vars[j]);
        if (jt == offsets.end()) {
          out.couplings.push_back({oi, rows.vars[j], blk});
          continue;
        }
        const Index oj = jt->second;
        for (Index r = 0; r < d; ++r)
          for (Index c = 0; c < d; ++c)
            if (blk(r, c) != 0.0) triplets.emplace_back(oi + r, oj + c, blk(r, c));
      }
    }
  }
  out.H.resize(n, n);
  out.H.setFromTriplets(triplets.begin(), triplets.end());
  out.H.makeCompressed();
  return out;
}

/// Separator terms of every robot that owns a variable in `offsets`.
/// `extent(robot)` gives the (offset, size) of that robot's block.
template <class EdgeRange, class Extent, class RowsOf>
std::map<std::size_t, SeparatorTerms> collect_separator_terms(const EdgeRange& edges,
                                                              const std::map<VertexId, Index>& offsets, int d,
                                                              const Extent& extent, const RowsOf& rows_of) {
  std::map<std::size_t, SeparatorTerms> out;
  for (const RelativeMeasurement& e : edges) {
    if (e.from.robot == e.to.robot) continue;
    const EdgeRows rows = rows_of(e);
    for (int i = 0; i < 2; ++i) {
      if (!rows.free[i] || !rows.free[1 - i]) continue;
      const auto it = offsets.find(rows.vars[i]);
      if (it == offsets.end()) continue;
      const auto [base, n] = extent(rows.vars[i].robot.value);
      const Index o = it->second - base;
      SeparatorTerm& t = out[rows.vars[i].robot.value][rows.vars[1 - i].robot.value];
      if (t.h.size() == 0) {
        t.h = MatrixXd::Zero(n, n);
        t.g = VectorXd::Zero(n);
      }
      t.h.block(o, o, d, d) += rows.jac[i].transpose() * rows.jac[i];
      t.g.segment(o, d) += rows.jac[i].transpose() * rows.c;
    }
  }
  return out;
}

namespace detail {

inline BlockLinearSystem assemble(const MultiRobotGraph& graph, SystemKind kind,
                                  const std::function<EdgeRows(const RelativeMeasurement&)>& rows_of) {
  BlockLinearSystem sys;
  sys.kind = kind;
  sys.anchor = graph.anchor();
  sys.blocks = block_layout(graph, kind);
  const Index d = variable_dim(kind);
  for (const auto& b : sys.blocks)
    for (std::size_t i = 0; i < b.variables.size(); ++i)
      sys.offsets.emplace(b.variables[i], b.offset + d * static_cast<Index>(i));
  const Index n = sys.blocks.empty() ? 0 : sys.blocks.back().offset + sys.blocks.back().dim;
  PartialAssembly part = assemble_partial(graph.edges(), sys.offsets, n, static_cast<int>(d), rows_of);
  sys.H = std::move(part.H);
  sys.g = std::move(part.g);
  sys.b_squared = part.b_squared;
  auto terms = collect_separator_terms(
      graph.edges(), sys.offsets, static_cast<int>(d),
      [&](std::size_t r) { return std::pair{sys.blocks[r].offset, sys.blocks[r].dim}; }, rows_of);
  sys.separator_terms.resize(sys.blocks.size());
  for (auto& [r, t] : terms) sys.separator_terms[r] = std::move(t);
  return sys;
}

}  // namespace detail

/// Normal equations of sum_e omega_R^2 |R_b - R_a R_ab|_F^2 over relaxed
/// (unconstrained) 3x3 matrices, with the anchor rotation fixed to I.
inline BlockLinearSystem build_rotation_system(const MultiRobotGraph& graph) {
  graph.validate();
  const VertexId anchor = graph.anchor();
  return detail::assemble(graph, SystemKind::Rotation,
                          [&](const RelativeMeasurement& e) { return rotation_edge_rows(e, anchor); });
}

/// Normal equations of the cost linearized around the rotation estimate.
/// Unknowns per free vertex are the absolute translation and a rotation
/// correction theta. The anchor keeps translation `anchor_translation`.
inline BlockLinearSystem build_pose_system(const MultiRobotGraph& graph, const RotationMap& rotations,
                                           const Vec3& anchor_translation = Vec3::Zero()) {
  graph.validate();
  for (const auto& [v, _] : graph.vertices())
    if (!rotations.count(v)) throw GraphError("rotation estimate missing vertex " + to_string(v));
  const VertexId anchor = graph.anchor();
  return detail::assemble(graph, SystemKind::Pose, [&](const RelativeMeasurement& e) {
    return pose_edge_rows(e, rotations.at(e.from), rotations.at(e.to), anchor, anchor_translation);
  });
}

struct SingularSystem : GraphError {
  using GraphError::GraphError;
};

/// Centralized sparse Cholesky solve of H y = g.
inline VectorXd direct_solve(const BlockLinearSystem& sys) {
  if (sys.size() == 0) return VectorXd();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.H);
  if (ldlt.info() != Eigen::Success) throw SingularSystem("factorization failed");
  if (ldlt.vectorD().minCoeff() <= 0.0) throw SingularSystem("system is not positive definite");
  VectorXd y = ldlt.solve(sys.g);
  if (ldlt.info() != Eigen::Success || !y.allFinite()) throw SingularSystem("solve failed");
  return y;
}

/// Relaxed (unprojected) rotation matrices; the anchor maps to the identity.
inline RotationMap relaxed_rotations(const BlockLinearSystem& sys, const VectorXd& r) {
  RotationMap out;
  out.emplace(sys.anchor, Mat3::Identity());
  for (const auto& [v, off] : sys.offsets) out.emplace(v, vec_to_rows(r.segment<9>(off)));
  return out;
}

inline RotationMap project_rotations(const RotationMap& relaxed) {
  RotationMap out;
  for (const auto& [v, m] : relaxed) out.emplace(v, project_to_so3(m));
  return out;
}

/// Pose per vertex: (R_hat Exp(theta), t); the anchor keeps (R_hat, t_anchor).
inline Estimate apply_correction(const RotationMap& rotations, const BlockLinearSystem& sys, const VectorXd& p,
                                 const Vec3& anchor_translation = Vec3::Zero()) {
  if (sys.kind != SystemKind::Pose || p.size() != sys.size())
    throw GraphError("correction vector does not match the pose system layout");
  Estimate out;
  for (const auto& [v, rhat] : rotations) {
    auto it = sys.offsets.find(v);
    if (it == sys.offsets.end()) {
      out.emplace(v, Pose{rhat, v == sys.anchor ? anchor_translation : Vec3::Zero()});
      continue;
    }
    const Index o = it->second;
    out.emplace(v, Pose{rhat * exp_map(p.segment<3>(o + 3)), p.segment<3>(o)});
  }
  return out;
}

/// Robot pairs whose off-diagonal block of H is nonzero.
inline std::set<std::pair<std::size_t, std::size_t>> block_support(const BlockLinearSystem& sys) {
  std::vector<std::size_t> owner(static_cast<std::size_t>(sys.size()));
  for (const auto& b : sys.blocks)
    for (Index i = 0; i < b.dim; ++i) owner[static_cast<std::size_t>(b.offset + i)] = b.robot.value;
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (Index k = 0; k < sys.H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(sys.H, k); it; ++it) {
      const auto a = owner[static_cast<std::size_t>(it.row())];
      const auto b = owner[static_cast<std::size_t>(it.col())];
      if (a != b && it.value() != 0.0) out.emplace(a, b);
    }
  return out;
}

}  // namespace dgs

#endif  // DGS_ASSEMBLY_HPP
