#ifndef DGS_METRICS_HPP
#define DGS_METRICS_HPP

#include "dgs/assembly.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace dgs {

/// e(y) = |A y - b|^2 - m, with m the minimum attained at y_star (the
/// direct solution). Written through the normal equations, so b is never
/// formed: |A y - b|^2 - m = y'Hy - 2g'y + g'y_star.
inline double residual_error(const BlockLinearSystem& sys, const VectorXd& y, const VectorXd& y_star) {
  if (y.size() != sys.size() || y_star.size() != sys.size()) throw GraphError("residual_error: dimension mismatch");
  return y.dot(sys.H * y) - 2.0 * sys.g.dot(y) + sys.g.dot(y_star);
}

inline std::vector<VertexId> vertices_of_kind(const MultiRobotGraph& graph, VertexKind kind) {
  std::vector<VertexId> out;
  for (const auto& [v, _] : graph.vertices())
    if (v.kind == kind) out.push_back(v);
  return out;
}

/// Root-mean-square position difference over `vertices` (meters).
inline double ate_star(const Estimate& estimate, const Estimate& reference, const std::vector<VertexId>& vertices) {
  if (vertices.empty()) throw GraphError("ate_star: empty vertex set");
  double sq = 0.0;
  for (const auto& v : vertices) sq += (lookup(estimate, v).translation - lookup(reference, v).translation).squaredNorm();
  return std::sqrt(sq / static_cast<double>(vertices.size()));
}

/// Root-mean-square of |Log(R_ref^T R)| over `vertices`, in degrees.
inline double are_star(const Estimate& estimate, const Estimate& reference, const std::vector<VertexId>& vertices) {
  if (vertices.empty()) throw GraphError("are_star: empty vertex set");
  double sq = 0.0;
  for (const auto& v : vertices) {
    const Mat3 delta = lookup(reference, v).rotation.transpose() * lookup(estimate, v).rotation;
    sq += log_map(delta).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(vertices.size())) * 180.0 / std::numbers::pi;
}

}  // namespace dgs

#endif  // DGS_METRICS_HPP
