#ifndef DGS_BLOCK_SOLVERS_HPP
#define DGS_BLOCK_SOLVERS_HPP

#include "dgs/assembly.hpp"
#include "dgs/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace dgs {

enum class Scheme { Jacobi, SuccessiveOverRelaxation };

/// When a published block becomes visible to the other robots.
enum class Delivery { Immediate, EndOfRound };

/// Parameters of one block-iterative linear solve.
struct BlockSolveOptions {
  double gamma = 1.0;
  double eta = 1e-1;
  int max_iterations = 10000;
  bool flagged_init = true;
  std::vector<std::size_t> order;  // robot visiting order; empty means ascending
  double divergence_threshold = 1e12;
  bool record_residual_error = false;
};

struct IterationRecord {
  double change_norm = 0.0;          // |y^{k+1} - y^k|
  std::vector<double> robot_change;  // per-robot |y_a^{k+1} - y_a^k|
  double residual_error = std::numeric_limits<double>::quiet_NaN();
};

struct IterationTrace {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  bool diverged = false;
  // |H y - g| <= residual_constant * last change norm at the returned iterate.
  double residual_constant = 0.0;

  int iterations_used() const { return static_cast<int>(iterations.size()); }
  double last_change() const {
    return iterations.empty() ? std::numeric_limits<double>::infinity() : iterations.back().change_norm;
  }
};

/// True iff the latest global estimate change is at most eta.
inline bool stopping_check(const IterationTrace& trace, double eta) {
  return !trace.iterations.empty() && trace.iterations.back().change_norm <= eta;
}

/// A set of robots each owning one block of y. `local_solve(a, mask)`
/// returns H_aa^{-1}(g_a - sum_{d : mask[d]} H_ad y_d) using the values of
/// the other robots that are visible to robot a.
template <class T>
concept BlockTeam = requires(T& team, const T& cteam, std::size_t a, const VectorXd& v,
                             const std::vector<char>& mask, Delivery d) {
  { cteam.robot_count() } -> std::convertible_to<std::size_t>;
  { cteam.estimate(a) } -> std::convertible_to<const VectorXd&>;
  { team.local_solve(a, mask) } -> std::convertible_to<VectorXd>;
  { team.flagged_solve(a, mask) } -> std::convertible_to<VectorXd>;
  team.commit(a, v);
  team.publish(a, d);
  team.end_round();
};

inline std::vector<std::size_t> resolve_order(const std::vector<std::size_t>& order, std::size_t n) {
  if (order.empty()) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i)
    if (sorted.size() != n || sorted[i] != i) throw GraphError("robot order is not a permutation of 0..n-1");
  return order;
}

/// JOR / SOR block iterations. With flagged initialization the first round
/// is a sequential sweep in which each robot only uses the robots already
/// initialized; every later round is a standard relaxation step.
template <BlockTeam Team>
IterationTrace run_block_iterations(Team& team, Scheme scheme, const BlockSolveOptions& opt,
                                    const std::function<double()>& residual_probe = {}) {
  const std::size_t n = team.robot_count();
  const auto order = resolve_order(opt.order, n);
  const std::vector<char> everyone(n, 1);
  const Delivery delivery = scheme == Scheme::SuccessiveOverRelaxation ? Delivery::Immediate : Delivery::EndOfRound;

  IterationTrace trace;
  for (int k = 0; k < opt.max_iterations; ++k) {
    IterationRecord rec;
    rec.robot_change.assign(n, 0.0);
    const bool flagged_round = k == 0 && opt.flagged_init;
    std::vector<char> initialized(n, 0);
    for (std::size_t a : order) {
      const VectorXd& old = team.estimate(a);
      VectorXd next;
      if (flagged_round) {
        next = team.flagged_solve(a, initialized);
      } else {
        next = (1.0 - opt.gamma) * old + opt.gamma * team.local_solve(a, everyone);
      }
      rec.robot_change[a] = (next - old).norm();
      team.commit(a, next);
      initialized[a] = 1;
      team.publish(a, flagged_round ? Delivery::Immediate : delivery);
    }
    team.end_round();

    double sq = 0.0;
    for (double c : rec.robot_change) sq += c * c;
    rec.change_norm = std::sqrt(sq);
    if (residual_probe) rec.residual_error = residual_probe();
    trace.iterations.push_back(std::move(rec));

    const double change = trace.iterations.back().change_norm;
    if (!std::isfinite(change) || change > opt.divergence_threshold) {
      trace.diverged = true;
      break;
    }
    if (stopping_check(trace, opt.eta)) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

namespace detail {

/// Block solve with the separator edges to uninitialized robots removed:
/// (H_aa - sum dH) y = rhs - sum dg. Empty when nothing is removed or when
/// the reduced block is rank deficient (no anchor and no initialized
/// neighbor fixes the gauge); the caller then keeps those edges.
inline std::optional<VectorXd> reduced_block_solve(MatrixXd h, VectorXd rhs, const SeparatorTerms& terms,
                                                   const std::vector<char>& initialized) {
  bool dropped = false;
  for (const auto& [b, t] : terms) {
    if (initialized[b]) continue;
    h -= t.h;
    rhs -= t.g;
    dropped = true;
  }
  if (!dropped) return std::nullopt;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  if (es.info() != Eigen::Success) return std::nullopt;
  const VectorXd& lambda = es.eigenvalues();
  if (!(lambda.minCoeff() > 1e-9 * lambda.maxCoeff())) return std::nullopt;
  return VectorXd(es.eigenvectors() * (es.eigenvectors().transpose() * rhs).cwiseQuotient(lambda));
}

}  // namespace detail

/// Robot-indexed view of a global system where every robot reads the
/// others' blocks from one shared vector.
class CentralTeam {
 public:
  CentralTeam(const BlockLinearSystem& sys, const VectorXd& initial) : sys_(&sys) {
    const std::size_t n = sys.robot_count();
    chol_.resize(n);
    own_.resize(n);
    neighbors_.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      const RobotId ra(a);
      if (sys.block(ra).dim > 0) {
        chol_[a].compute(sys.diagonal_block(ra));
        if (chol_[a].info() != Eigen::Success)
          throw SingularSystem("diagonal block of robot " + std::to_string(a) + " is not positive definite");
      }
      own_[a] = sys.segment(initial, ra);
    }
    visible_ = own_;
    for (const auto& [a, b] : block_support(sys)) neighbors_[a].push_back({b, sys.dense_block(RobotId(a), RobotId(b))});
  }

  std::size_t robot_count() const { return own_.size(); }
  const VectorXd& estimate(std::size_t a) const { return own_[a]; }

  VectorXd local_solve(std::size_t a, const std::vector<char>& mask) const {
    VectorXd rhs = sys_->segment(sys_->g, RobotId(a));
    if (rhs.size() == 0) return rhs;
    for (const auto& nb : neighbors_[a])
      if (mask[nb.robot]) rhs -= nb.block * visible_[nb.robot];
    return chol_[a].solve(rhs);
  }

  VectorXd flagged_solve(std::size_t a, const std::vector<char>& initialized) const {
    if (a < sys_->separator_terms.size() && !sys_->separator_terms[a].empty()) {
      VectorXd rhs = sys_->segment(sys_->g, RobotId(a));
      for (const auto& nb : neighbors_[a])
        if (initialized[nb.robot]) rhs -= nb.block * visible_[nb.robot];
      if (auto y = detail::reduced_block_solve(sys_->diagonal_block(RobotId(a)), std::move(rhs),
                                               sys_->separator_terms[a], initialized))
        return *y;
    }
    return local_solve(a, initialized);
  }

  void commit(std::size_t a, const VectorXd& v) { own_[a] = v; }

  void publish(std::size_t a, Delivery d) {
    if (d == Delivery::Immediate)
      visible_[a] = own_[a];
    else
      pending_.push_back(a);
  }

  void end_round() {
    for (std::size_t a : pending_) visible_[a] = own_[a];
    pending_.clear();
  }

  VectorXd assemble() const {
    VectorXd y(sys_->size());
    for (std::size_t a = 0; a < own_.size(); ++a) y.segment(sys_->blocks[a].offset, own_[a].size()) = own_[a];
    return y;
  }

 private:
  struct Coupling {
    std::size_t robot;
    MatrixXd block;
  };
  const BlockLinearSystem* sys_;
  std::vector<Eigen::LLT<MatrixXd>> chol_;
  std::vector<VectorXd> own_;
  std::vector<VectorXd> visible_;
  std::vector<std::vector<Coupling>> neighbors_;
  std::vector<std::size_t> pending_;
};

/// Frobenius-norm bound c with |H y - g| <= c |y^{k+1} - y^k| at a JOR or
/// SOR iterate.
inline double fixed_point_constant(const BlockLinearSystem& sys, double gamma) {
  double d_norm = 0.0;
  double total_sq = 0.0;
  double diag_sq = 0.0;
  for (const auto& b : sys.blocks) {
    if (b.dim == 0) continue;
    const double f = sys.diagonal_block(b.robot).norm();
    d_norm = std::max(d_norm, f);
    diag_sq += f * f;
  }
  for (Index k = 0; k < sys.H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(sys.H, k); it; ++it) total_sq += it.value() * it.value();
  const double off_norm = std::sqrt(std::max(0.0, total_sq - diag_sq));
  return (std::abs(1.0 - gamma) * d_norm + std::abs(gamma) * off_norm) / std::abs(gamma);
}

struct BlockSolveResult {
  VectorXd solution;
  IterationTrace trace;
};

namespace detail {

inline BlockSolveResult central_solve(const BlockLinearSystem& sys, Scheme scheme, const BlockSolveOptions& opt,
                                      const VectorXd* initial) {
  const VectorXd y0 = initial ? *initial : VectorXd::Zero(sys.size());
  if (y0.size() != sys.size()) throw GraphError("initial vector does not match the system size");
  CentralTeam team(sys, y0);
  std::function<double()> probe;
  VectorXd y_star;
  if (opt.record_residual_error) {
    y_star = direct_solve(sys);
    probe = [&] { return residual_error(sys, team.assemble(), y_star); };
  }
  BlockSolveResult out;
  out.trace = run_block_iterations(team, scheme, opt, probe);
  out.trace.residual_constant = fixed_point_constant(sys, opt.gamma);
  out.solution = team.assemble();
  return out;
}

}  // namespace detail

/// Jacobi over-relaxation: every robot updates from the previous round.
inline BlockSolveResult jor_solve(const BlockLinearSystem& sys, const BlockSolveOptions& opt,
                                  const VectorXd* initial = nullptr) {
  return detail::central_solve(sys, Scheme::Jacobi, opt, initial);
}

/// Successive over-relaxation: robots update in order using the freshest values.
inline BlockSolveResult sor_solve(const BlockLinearSystem& sys, const BlockSolveOptions& opt,
                                  const VectorXd* initial = nullptr) {
  return detail::central_solve(sys, Scheme::SuccessiveOverRelaxation, opt, initial);
}

/// Result of the flagged sweep alone: robot a solves its block using only
/// the robots earlier in `order`.
inline VectorXd flagged_initialize(const BlockLinearSystem& sys, const std::vector<std::size_t>& order = {}) {
  CentralTeam team(sys, VectorXd::Zero(sys.size()));
  const auto ord = resolve_order(order, sys.robot_count());
  std::vector<char> initialized(sys.robot_count(), 0);
  for (std::size_t a : ord) {
    team.commit(a, team.flagged_solve(a, initialized));
    initialized[a] = 1;
    team.publish(a, Delivery::Immediate);
  }
  return team.assemble();
}

struct ConvergenceDiagnostics {
  SparseMatrix iteration_matrix;  // M = (1 - gamma) I - gamma D^{-1} (H - D)
  double spectral_radius = 0.0;
  bool used_dense_fallback = false;
  int power_iterations = 0;
};

namespace detail {

/// D^{-1} (H - D) built block row by block row.
inline SparseMatrix block_jacobi_matrix(const BlockLinearSystem& sys) {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& b : sys.blocks) {
    if (b.dim == 0) continue;
    Eigen::LLT<MatrixXd> llt(sys.diagonal_block(b.robot));
    if (llt.info() != Eigen::Success) throw SingularSystem("diagonal block not positive definite");
    std::map<Index, std::vector<std::pair<Index, double>>> cols;  // column -> (local row, value)
    for (Index k = 0; k < sys.H.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(sys.H, k); it; ++it) {
        const Index r = it.row();
        const Index c = it.col();
        if (r < b.offset || r >= b.offset + b.dim) continue;
        if (c >= b.offset && c < b.offset + b.dim) continue;
        cols[c].push_back({r - b.offset, it.value()});
      }
    if (cols.empty()) continue;
    MatrixXd dense = MatrixXd::Zero(b.dim, static_cast<Index>(cols.size()));
    std::vector<Index> col_ids;
    for (const auto& [c, entries] : cols) {
      for (const auto& [r, v] : entries) dense(r, static_cast<Index>(col_ids.size())) = v;
      col_ids.push_back(c);
    }
    const MatrixXd prod = llt.solve(dense);
    for (Index j = 0; j < prod.cols(); ++j)
      for (Index i = 0; i < prod.rows(); ++i)
        if (prod(i, j) != 0.0) trip.emplace_back(b.offset + i, col_ids[static_cast<std::size_t>(j)], prod(i, j));
  }
  SparseMatrix out(sys.size(), sys.size());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace detail

/// Spectral radius by dense eigendecomposition of the symmetric matrix
/// L^{-1} (H - D) L^{-T} (D = L L^T blockwise), which is similar to
/// D^{-1}(H - D). Desk-scale only.
inline double jor_spectral_radius_dense(const BlockLinearSystem& sys, double gamma) {
  const Index n = sys.size();
  MatrixXd s = MatrixXd(sys.H);
  MatrixXd linv = MatrixXd::Zero(n, n);
  for (const auto& b : sys.blocks) {
    if (b.dim == 0) continue;
    Eigen::LLT<MatrixXd> llt(sys.diagonal_block(b.robot));
    const MatrixXd l = llt.matrixL();
    linv.block(b.offset, b.offset, b.dim, b.dim) =
        l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(b.dim, b.dim));
    s.block(b.offset, b.offset, b.dim, b.dim).setZero();
  }
  s = linv * s * linv.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
  const VectorXd lambda = es.eigenvalues();
  double rho = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) rho = std::max(rho, std::abs(1.0 - gamma - gamma * lambda[i]));
  return rho;
}

struct PowerIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 20000;
  std::uint64_t seed = 0x5eed;
  Index dense_fallback_limit = 6000;
};

/// Iteration matrix of JOR and its spectral radius. The radius comes from
/// power iteration on M^2 (M has real spectrum, possibly with +/- pairs);
/// when that stagnates the dense symmetric eigensolver is used instead.
inline ConvergenceDiagnostics jor_convergence_matrix(const BlockLinearSystem& sys, double gamma,
                                                     const PowerIterationOptions& popt = {}) {
  ConvergenceDiagnostics out;
  const Index n = sys.size();
  SparseMatrix identity(n, n);
  identity.setIdentity();
  out.iteration_matrix = (1.0 - gamma) * identity - gamma * detail::block_jacobi_matrix(sys);
  if (n == 0) return out;

  std::mt19937_64 rng(popt.seed);
  std::normal_distribution<double> normal;
  VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = normal(rng);
  x.normalize();
  double last = 0.0;
  bool converged = false;
  for (int k = 0; k < popt.max_iterations; ++k) {
    const VectorXd y = out.iteration_matrix * x;
    const VectorXd z = out.iteration_matrix * y;
    out.power_iterations = k + 1;
    const double lambda_sq = x.dot(z);
    last = std::sqrt(std::abs(lambda_sq));
    const double znorm = z.norm();
    if (znorm == 0.0) {
      last = 0.0;
      converged = true;
      break;
    }
    // x is (close to) an eigenvector of M^2.
    if ((z - lambda_sq * x).norm() <= popt.tolerance * std::max(std::abs(lambda_sq), 1e-300)) {
      converged = true;
      break;
    }
    x = z / znorm;
  }
  out.spectral_radius = last;
  if (!converged) {
    if (n <= popt.dense_fallback_limit) {
      out.spectral_radius = jor_spectral_radius_dense(sys, gamma);
      out.used_dense_fallback = true;
    }
  }
  return out;
}

}  // namespace dgs

#endif  // DGS_BLOCK_SOLVERS_HPP
