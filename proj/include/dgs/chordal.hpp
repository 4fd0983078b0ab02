#ifndef DGS_CHORDAL_HPP
#define DGS_CHORDAL_HPP

#include "dgs/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dgs {

struct CentralizedResult {
  Estimate estimate;
  double cost = 0.0;             // graph_cost(graph, estimate)
  double stage1_residual = 0.0;  // minimum of the relaxed rotation problem
  int gn_iterations = 0;
  bool converged = true;
  bool diverged = false;  // GN could not reduce the cost with any step length
};

/// Centralized two-stage estimate: relaxed rotation solve, per-vertex SO(3)
/// projection, then exactly one linear solve for translations and rotation
/// corrections.
inline CentralizedResult solve_two_stage(const MultiRobotGraph& graph) {
  const BlockLinearSystem rot = build_rotation_system(graph);
  const VectorXd r = direct_solve(rot);
  const RotationMap rhat = project_rotations(relaxed_rotations(rot, r));
  const BlockLinearSystem pose = build_pose_system(graph, rhat);
  const VectorXd p = direct_solve(pose);

  CentralizedResult out;
  out.estimate = apply_correction(rhat, pose, p);
  out.cost = graph_cost(graph, out.estimate);
  out.stage1_residual = rot.objective(r);
  return out;
}

struct GaussNewtonOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on the norm of the (dt, theta) step
  int max_halvings = 10;
};

namespace detail {

inline Estimate step_estimate(const Estimate& current, const BlockLinearSystem& sys, const VectorXd& p, double scale) {
  Estimate out = current;
  for (const auto& [v, off] : sys.offsets) {
    Pose& x = out.at(v);
    const Pose& x0 = current.at(v);
    x.translation = x0.translation + scale * (p.segment<3>(off) - x0.translation);
    x.rotation = x0.rotation * exp_map(scale * p.segment<3>(off + 3));
  }
  return out;
}

inline double step_norm(const Estimate& current, const BlockLinearSystem& sys, const VectorXd& p) {
  double sq = 0.0;
  for (const auto& [v, off] : sys.offsets) {
    sq += (p.segment<3>(off) - current.at(v).translation).squaredNorm();
    sq += p.segment<3>(off + 3).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace detail

/// Gradient of graph_cost with respect to the local coordinates (dt, theta)
/// of every free vertex, x -> (R Exp(theta), t + dt), at `at`. The linearized
/// pose system is exact to first order, so the gradient is 2 (H y - g) with y
/// the current translations and zero corrections.
inline VectorXd cost_gradient(const MultiRobotGraph& graph, const Estimate& at,
                              BlockLinearSystem* layout = nullptr) {
  RotationMap rotations;
  for (const auto& [v, _] : graph.vertices()) rotations.emplace(v, lookup(at, v).rotation);
  BlockLinearSystem sys = build_pose_system(graph, rotations, lookup(at, graph.anchor()).translation);
  VectorXd y = VectorXd::Zero(sys.size());
  for (const auto& [v, off] : sys.offsets) y.segment<3>(off) = at.at(v).translation;
  VectorXd grad = 2.0 * (sys.H * y - sys.g);
  if (layout) *layout = std::move(sys);
  return grad;
}

/// Gauss-Newton on the chordal cost, relinearizing the pose system at each
/// iterate. Steps that increase the cost are halved up to max_halvings times.
inline CentralizedResult solve_gauss_newton(const MultiRobotGraph& graph, const Estimate& initial,
                                            const GaussNewtonOptions& opts = {}) {
  graph.validate();
  Estimate current;
  for (const auto& [v, _] : graph.vertices()) current.emplace(v, lookup(initial, v));
  const Vec3 anchor_t = current.at(graph.anchor()).translation;

  CentralizedResult out;
  double cost = graph_cost(graph, current);
  out.converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    RotationMap rotations;
    for (const auto& [v, x] : current) rotations.emplace(v, x.rotation);
    const BlockLinearSystem sys = build_pose_system(graph, rotations, anchor_t);
    const VectorXd p = direct_solve(sys);
    const double norm = detail::step_norm(current, sys, p);

    double scale = 1.0;
    bool accepted = false;
    double best_rejected = std::numeric_limits<double>::infinity();
    for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
      Estimate candidate = detail::step_estimate(current, sys, p, scale);
      const double c = graph_cost(graph, candidate);
      best_rejected = std::min(best_rejected, c);
      if (c <= cost) {
        current = std::move(candidate);
        cost = c;
        accepted = true;
        break;
      }
    }
    if (norm <= opts.tolerance) {
      out.converged = true;
      break;
    }
    out.gn_iterations = it + 1;
    if (!accepted) {
      // Every step length lands within rounding of the current cost: the
      // iterate is stationary to working precision.
      if (best_rejected <= cost * (1.0 + 1e-12))
        out.converged = true;
      else
        out.diverged = true;
      break;
    }
  }
  out.estimate = std::move(current);
  out.cost = cost;
  return out;
}

}  // namespace dgs

#endif  // DGS_CHORDAL_HPP
