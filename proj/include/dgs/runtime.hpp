#ifndef DGS_RUNTIME_HPP
#define DGS_RUNTIME_HPP

#include "dgs/block_solvers.hpp"
#include "dgs/chordal.hpp"
#include "dgs/metrics.hpp"
#include "dgs/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <utility>
#include <vector>

namespace dgs {

/// Bytes of one transmitted block: 9 doubles per rotation, 6 per pose.
constexpr std::uint64_t kRotationBlockBytes = 72;
constexpr std::uint64_t kPoseBlockBytes = 48;

inline std::uint64_t block_bytes(SystemKind k) {
  return k == SystemKind::Rotation ? kRotationBlockBytes : kPoseBlockBytes;
}

enum class CommPhase { Rotation, Pose, Objects };

inline CommPhase comm_phase(SystemKind k) { return k == SystemKind::Rotation ? CommPhase::Rotation : CommPhase::Pose; }

struct SeparatorMessage {
  RobotId sender;
  RobotId recipient;
  std::uint64_t round = 0;
  SystemKind phase = SystemKind::Rotation;
  std::vector<std::pair<VertexId, VectorXd>> payload;
  std::uint64_t byte_size = 0;  // payload.size() * block_bytes(phase)
};

struct PhaseTraffic {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

/// Per-robot, per-phase count of everything a robot sent.
class CommunicationLedger {
 public:
  CommunicationLedger() = default;
  explicit CommunicationLedger(std::size_t robots) : traffic_(robots) {}

  std::size_t robot_count() const { return traffic_.size(); }

  void record(const SeparatorMessage& m) { add(m.sender, comm_phase(m.phase), m.byte_size); }

  void add(RobotId sender, CommPhase phase, std::uint64_t bytes) {
    PhaseTraffic& t = traffic_.at(sender.value)[static_cast<std::size_t>(phase)];
    ++t.messages;
    t.bytes += bytes;
  }

  void add_rendezvous() { ++rendezvous_; }

  const PhaseTraffic& traffic(RobotId r, CommPhase phase) const {
    return traffic_.at(r.value)[static_cast<std::size_t>(phase)];
  }

  std::uint64_t robot_bytes(RobotId r) const {
    std::uint64_t total = 0;
    for (const auto& t : traffic_.at(r.value)) total += t.bytes;
    return total;
  }

  std::uint64_t total_bytes() const {
    std::uint64_t total = 0;
    for (std::size_t r = 0; r < traffic_.size(); ++r) total += robot_bytes(RobotId(r));
    return total;
  }

  std::uint64_t total_messages() const {
    std::uint64_t total = 0;
    for (const auto& robot : traffic_)
      for (const auto& t : robot) total += t.messages;
    return total;
  }

  std::uint64_t rendezvous_count() const { return rendezvous_; }

 private:
  std::vector<std::array<PhaseTraffic, 3>> traffic_;
  std::uint64_t rendezvous_ = 0;
};

/// One robot's view of the problem: its own edges plus the separator edges
/// that touch it, and the latest values received for the other robots'
/// separator variables.
class RobotAgent {
 public:
  RobotAgent(const MultiRobotGraph& graph, RobotId id) : id_(id), anchor_(graph.anchor()) {
    for (const auto& e : graph.edges()) {
      const bool a = e.from.robot == id;
      const bool b = e.to.robot == id;
      if (!a && !b) continue;
      if (a != b) {
        const VertexId& mine = a ? e.from : e.to;
        const VertexId& other = a ? e.to : e.from;
        // An edge from the (constant) anchor to another robot only concerns
        // that robot, and nobody needs values sent against the anchor.
        if (mine == anchor_) continue;
        if (other != anchor_) recipients_[other.robot].insert(mine);
      }
      edges_.push_back(e);
    }
    for (const auto& v : graph.vertices_of(id))
      if (v != anchor_) variables_.push_back(v);
  }

  RobotId id() const { return id_; }
  const std::vector<RelativeMeasurement>& edges() const { return edges_; }
  const std::vector<VertexId>& variables() const { return variables_; }

  /// Separator count s: distinct (own variable, recipient robot) pairs, i.e.
  /// blocks sent per iteration.
  std::size_t separator_count() const {
    std::size_t s = 0;
    for (const auto& [_, vs] : recipients_) s += vs.size();
    return s;
  }

  std::vector<RobotId> neighbors() const {
    std::vector<RobotId> out;
    for (const auto& [r, vs] : recipients_)
      if (!vs.empty()) out.push_back(r);
    return out;
  }

  /// Vertices of other robots this agent holds values for.
  std::vector<VertexId> foreign_vertices() const {
    std::vector<VertexId> out;
    for (const auto& [v, _] : cache_) out.push_back(v);
    return out;
  }

  void begin_phase(SystemKind kind) {
    if (kind == SystemKind::Pose) {
      if (phase_ != SystemKind::Rotation || !started_) throw GraphError("pose phase requires a finished rotation phase");
      finish_rotation_phase();
    }
    phase_ = kind;
    started_ = true;
    const int d = variable_dim(kind);
    offsets_.clear();
    for (std::size_t i = 0; i < variables_.size(); ++i) offsets_.emplace(variables_[i], d * static_cast<Index>(i));
    const Index n = d * static_cast<Index>(variables_.size());

    PartialAssembly part = kind == SystemKind::Rotation
                               ? assemble_partial(edges_, offsets_, n, d,
                                                  [&](const RelativeMeasurement& e) { return rotation_edge_rows(e, anchor_); })
                               : assemble_partial(edges_, offsets_, n, d, [&](const RelativeMeasurement& e) {
                                   return pose_edge_rows(e, rotation_of(e.from), rotation_of(e.to), anchor_);
                                 });
    auto extent = [n](std::size_t) { return std::pair{Index{0}, n}; };
    auto terms = kind == SystemKind::Rotation
                     ? collect_separator_terms(edges_, offsets_, d, extent,
                                               [&](const RelativeMeasurement& e) { return rotation_edge_rows(e, anchor_); })
                     : collect_separator_terms(edges_, offsets_, d, extent, [&](const RelativeMeasurement& e) {
                         return pose_edge_rows(e, rotation_of(e.from), rotation_of(e.to), anchor_);
                       });
    separator_terms_ = terms.count(id_.value) ? std::move(terms.at(id_.value)) : SeparatorTerms{};
    h_ = std::move(part.H);
    g_ = std::move(part.g);
    couplings_ = std::move(part.couplings);
    if (n > 0) {
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(h_);
      if (ldlt_->info() != Eigen::Success || ldlt_->vectorD().minCoeff() <= 0.0)
        throw SingularSystem("local system of robot " + std::to_string(id_.value) + " is not positive definite");
    }
    estimate_ = VectorXd::Zero(n);
    cache_.clear();
    for (const auto& c : couplings_) cache_.emplace(c.remote, VectorXd::Zero(d));
  }

  /// H_aa^{-1} (g_a - sum over masked robots of H_ab y_b), with y_b from the cache.
  VectorXd local_solve(const std::vector<char>& mask) const {
    if (g_.size() == 0) return VectorXd();
    VectorXd rhs = g_;
    for (const auto& c : couplings_)
      if (mask[c.remote.robot.value]) rhs.segment(c.row_offset, c.block.rows()) -= c.block * cache_.at(c.remote);
    return ldlt_->solve(rhs);
  }

  /// First-sweep solve that drops the separator edges to robots not yet
  /// initialized; keeps them when the reduced block has no gauge.
  VectorXd flagged_solve(const std::vector<char>& initialized) const {
    if (g_.size() == 0) return VectorXd();
    if (!separator_terms_.empty()) {
      VectorXd rhs = g_;
      for (const auto& c : couplings_)
        if (initialized[c.remote.robot.value]) rhs.segment(c.row_offset, c.block.rows()) -= c.block * cache_.at(c.remote);
      if (auto y = detail::reduced_block_solve(MatrixXd(h_), std::move(rhs), separator_terms_, initialized)) return *y;
    }
    return local_solve(initialized);
  }

  const VectorXd& estimate() const { return estimate_; }
  void commit(const VectorXd& v) { estimate_ = v; }

  /// One message per neighbor carrying the current values of the shared variables.
  std::vector<SeparatorMessage> outbox(std::uint64_t round) const {
    std::vector<SeparatorMessage> out;
    const int d = variable_dim(phase_);
    for (const auto& [to, vs] : recipients_) {
      if (vs.empty()) continue;
      SeparatorMessage m;
      m.sender = id_;
      m.recipient = to;
      m.round = round;
      m.phase = phase_;
      for (const auto& v : vs) m.payload.emplace_back(v, estimate_.segment(offsets_.at(v), d));
      m.byte_size = m.payload.size() * block_bytes(phase_);
      out.push_back(std::move(m));
    }
    return out;
  }

  void receive(const SeparatorMessage& m) {
    if (m.recipient != id_ || m.phase != phase_) throw GraphError("message delivered to the wrong robot or phase");
    for (const auto& [v, value] : m.payload) {
      auto it = cache_.find(v);
      if (it == cache_.end()) throw GraphError("unexpected separator " + to_string(v));
      it->second = value;
    }
  }

  /// Projected rotations of the own variables after the rotation phase, the
  /// corrected poses after the pose phase.
  Estimate own_estimate() const {
    Estimate out;
    if (!started_) return out;
    if (phase_ == SystemKind::Rotation) {
      for (const auto& v : variables_)
        out.emplace(v, Pose{project_to_so3(vec_to_rows(estimate_.segment<9>(offsets_.at(v)))), Vec3::Zero()});
    } else {
      for (const auto& v : variables_) {
        const Index o = offsets_.at(v);
        out.emplace(v, Pose{rotations_.at(v) * exp_map(estimate_.segment<3>(o + 3)), estimate_.segment<3>(o)});
      }
    }
    if (anchor_.robot == id_) out.emplace(anchor_, Pose::identity());
    return out;
  }

  Index local_offset(const VertexId& v) const { return offsets_.at(v); }

 private:
  void finish_rotation_phase() {
    rotations_.clear();
    rotations_.emplace(anchor_, Mat3::Identity());
    for (const auto& v : variables_)
      rotations_.emplace(v, project_to_so3(vec_to_rows(estimate_.segment<9>(offsets_.at(v)))));
    // Neighbors' separators are projected from the last received values,
    // which equal the values the neighbors projected themselves.
    for (const auto& [v, r] : cache_) rotations_.emplace(v, project_to_so3(vec_to_rows(r)));
  }

  const Mat3& rotation_of(const VertexId& v) const {
    auto it = rotations_.find(v);
    if (it == rotations_.end()) throw GraphError("robot " + std::to_string(id_.value) + " has no rotation for " + to_string(v));
    return it->second;
  }

  RobotId id_;
  VertexId anchor_;
  std::vector<RelativeMeasurement> edges_;
  std::vector<VertexId> variables_;
  std::map<RobotId, std::set<VertexId>> recipients_;

  SystemKind phase_ = SystemKind::Rotation;
  bool started_ = false;
  std::map<VertexId, Index> offsets_;
  SparseMatrix h_;
  VectorXd g_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;  // keeps the agent movable
  std::vector<RemoteCoupling> couplings_;
  SeparatorTerms separator_terms_;
  std::map<VertexId, VectorXd> cache_;
  VectorXd estimate_;
  RotationMap rotations_;
};

/// Adapts a set of agents to the block iteration driver. Every value that
/// crosses robots goes through a SeparatorMessage and the ledger.
class AgentTeam {
 public:
  AgentTeam(std::vector<RobotAgent>& agents, CommunicationLedger& ledger, std::vector<SeparatorMessage>* log = nullptr)
      : agents_(&agents), ledger_(&ledger), log_(log) {}

  std::size_t robot_count() const { return agents_->size(); }
  const VectorXd& estimate(std::size_t a) const { return (*agents_)[a].estimate(); }
  VectorXd local_solve(std::size_t a, const std::vector<char>& mask) const { return (*agents_)[a].local_solve(mask); }
  VectorXd flagged_solve(std::size_t a, const std::vector<char>& mask) const {
    return (*agents_)[a].flagged_solve(mask);
  }
  void commit(std::size_t a, const VectorXd& v) { (*agents_)[a].commit(v); }

  void publish(std::size_t a, Delivery d) {
    for (auto& m : (*agents_)[a].outbox(round_)) {
      ledger_->record(m);
      if (log_) log_->push_back(m);
      if (d == Delivery::Immediate)
        deliver(m);
      else
        pending_.push_back(std::move(m));
    }
  }

  void end_round() {
    for (const auto& m : pending_) deliver(m);
    pending_.clear();
    ++round_;
  }

 private:
  void deliver(const SeparatorMessage& m) { (*agents_).at(m.recipient.value).receive(m); }

  std::vector<RobotAgent>* agents_;
  CommunicationLedger* ledger_;
  std::vector<SeparatorMessage>* log_;
  std::vector<SeparatorMessage> pending_;
  std::uint64_t round_ = 1;
};

struct SolverConfig {
  Scheme scheme = Scheme::SuccessiveOverRelaxation;
  double gamma = 1.0;
  double eta_r = 1e-1;
  double eta_p = 1e-1;
  int max_iterations = 10000;
  bool flagged_init = true;
  std::vector<std::size_t> sor_order;  // empty: ascending robot id
  bool record_residual_error = false;  // referee-side e_r(k), e_p(k)
  bool keep_message_log = false;

  void validate() const {
    if (!std::isfinite(gamma) || gamma == 0.0) throw GraphError("gamma must be finite and nonzero");
    if (!(eta_r > 0.0) || !(eta_p > 0.0)) throw GraphError("stopping thresholds must be positive");
    if (max_iterations < 1) throw GraphError("max_iterations must be positive");
  }

  BlockSolveOptions options(SystemKind kind) const {
    BlockSolveOptions o;
    o.gamma = gamma;
    o.eta = kind == SystemKind::Rotation ? eta_r : eta_p;
    o.max_iterations = max_iterations;
    o.flagged_init = flagged_init;
    o.order = sor_order;
    o.record_residual_error = record_residual_error;
    return o;
  }

  static SolverConfig dgs(double eta = 1e-1) {
    SolverConfig c;
    c.eta_r = c.eta_p = eta;
    return c;
  }
  static SolverConfig dj(double eta = 1e-1) {
    SolverConfig c = dgs(eta);
    c.scheme = Scheme::Jacobi;
    return c;
  }
};

struct DistributedResult {
  Estimate estimate;  // assembled by the referee
  double cost = std::numeric_limits<double>::quiet_NaN();
  IterationTrace rotation_trace;
  IterationTrace pose_trace;
  CommunicationLedger ledger;
  std::vector<std::size_t> separator_counts;  // s per robot
  std::vector<SeparatorMessage> message_log;  // when requested
  bool converged = false;
  bool diverged = false;

  int rotation_iterations() const { return rotation_trace.iterations_used(); }
  int pose_iterations() const { return pose_trace.iterations_used(); }
};

namespace detail {

inline VectorXd gather(const std::vector<RobotAgent>& agents, const BlockLinearSystem& sys) {
  VectorXd y = VectorXd::Zero(sys.size());
  const int d = sys.var_dim();
  for (const auto& agent : agents)
    for (const auto& v : agent.variables()) y.segment(sys.offsets.at(v), d) = agent.estimate().segment(agent.local_offset(v), d);
  return y;
}

inline IterationTrace run_phase(const MultiRobotGraph& graph, std::vector<RobotAgent>& agents, SystemKind kind,
                                const SolverConfig& config, CommunicationLedger& ledger,
                                std::vector<SeparatorMessage>* log) {
  for (auto& a : agents) a.begin_phase(kind);
  AgentTeam team(agents, ledger, log);
  const BlockSolveOptions opt = config.options(kind);

  // The referee's global system exists only to score the iterates.
  std::function<double()> probe;
  BlockLinearSystem sys;
  VectorXd y_star;
  if (config.record_residual_error) {
    if (kind == SystemKind::Rotation) {
      sys = build_rotation_system(graph);
    } else {
      RotationMap rotations;
      for (const auto& a : agents)
        for (const auto& [v, x] : a.own_estimate()) rotations.emplace(v, x.rotation);
      sys = build_pose_system(graph, rotations);
    }
    y_star = direct_solve(sys);
    probe = [&] { return residual_error(sys, gather(agents, sys), y_star); };
  }
  return run_block_iterations(team, config.scheme, opt, probe);
}

}  // namespace detail

/// Distributed two-stage estimate. Rotation phase, local projection, pose
/// phase; the referee only decides when to stop and assembles the result.
inline DistributedResult run_distributed_two_stage(const MultiRobotGraph& graph, const SolverConfig& config = {}) {
  graph.validate();
  config.validate();
  DistributedResult out;
  out.ledger = CommunicationLedger(graph.robot_count());
  std::vector<RobotAgent> agents;
  agents.reserve(graph.robot_count());
  for (std::size_t r = 0; r < graph.robot_count(); ++r) {
    agents.emplace_back(graph, RobotId(r));
    out.separator_counts.push_back(agents.back().separator_count());
  }
  std::vector<SeparatorMessage>* log = config.keep_message_log ? &out.message_log : nullptr;

  out.rotation_trace = detail::run_phase(graph, agents, SystemKind::Rotation, config, out.ledger, log);
  if (out.rotation_trace.diverged) {
    out.diverged = true;
    return out;
  }
  // Agents were switched to the pose phase inside run_phase; that switch
  // projects their own rotations locally.
  out.pose_trace = detail::run_phase(graph, agents, SystemKind::Pose, config, out.ledger, log);
  out.diverged = out.pose_trace.diverged;
  out.converged = out.rotation_trace.converged && out.pose_trace.converged;
  for (const auto& a : agents)
    for (const auto& [v, x] : a.own_estimate()) out.estimate.emplace(v, x);
  out.cost = graph_cost(graph, out.estimate);
  return out;
}

/// K_r s B_r + K_p s B_p: bytes one robot sends over a full DGS run.
inline std::uint64_t dgs_comm_model(std::uint64_t s, std::uint64_t k_r, std::uint64_t k_p) {
  return k_r * s * kRotationBlockBytes + k_p * s * kPoseBlockBytes;
}

/// K_GN [s B_p + (s B_p)^2]: bytes one robot sends when exchanging marginals
/// over its separators (communication model only).
inline std::uint64_t ddf_sam_comm_model(std::uint64_t s, std::uint64_t k_gn) {
  const std::uint64_t sb = s * kPoseBlockBytes;
  return k_gn * (sb + sb * sb);
}

struct Statistic {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one sample
};

inline Statistic summarize(const std::vector<double>& xs) {
  Statistic s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct RunSummary {
  std::uint64_t seed = 0;
  int rotation_iterations = 0;
  int pose_iterations = 0;
  double distributed_cost = 0.0;
  double two_stage_cost = 0.0;
  double gn_cost = 0.0;
  double ate_star = 0.0;  // distributed vs GN, robot poses (m)
  double are_star = 0.0;  // degrees
  std::uint64_t bytes = 0;
  bool converged = false;
};

struct MonteCarloStats {
  std::vector<RunSummary> runs;
  Statistic rotation_iterations;
  Statistic pose_iterations;
  Statistic distributed_cost;
  Statistic two_stage_cost;
  Statistic gn_cost;
  Statistic ate_star;
  Statistic are_star;
};

/// Seed of run i; run 0 uses ScenarioSpec::rng_seed unchanged.
inline std::uint64_t monte_carlo_seed(std::uint64_t base, std::size_t run) {
  return base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(run);
}

inline RunSummary evaluate_run(const Scenario& scenario, const SolverConfig& config) {
  RunSummary s;
  s.seed = scenario.spec.rng_seed;
  const DistributedResult d = run_distributed_two_stage(scenario.graph, config);
  const CentralizedResult two = solve_two_stage(scenario.graph);
  const CentralizedResult gn = solve_gauss_newton(scenario.graph, two.estimate);
  s.rotation_iterations = d.rotation_iterations();
  s.pose_iterations = d.pose_iterations();
  s.distributed_cost = d.cost;
  s.two_stage_cost = two.cost;
  s.gn_cost = gn.cost;
  s.bytes = d.ledger.total_bytes();
  s.converged = d.converged;
  if (!d.estimate.empty()) {
    const auto poses = vertices_of_kind(scenario.graph, VertexKind::RobotPose);
    s.ate_star = ate_star(d.estimate, gn.estimate, poses);
    s.are_star = are_star(d.estimate, gn.estimate, poses);
  }
  return s;
}

inline MonteCarloStats monte_carlo(const ScenarioSpec& spec, const SolverConfig& config, std::size_t runs) {
  if (runs < 1) throw GraphError("monte_carlo needs at least one run");
  MonteCarloStats out;
  for (std::size_t i = 0; i < runs; ++i) {
    ScenarioSpec s = spec;
    s.rng_seed = monte_carlo_seed(spec.rng_seed, i);
    out.runs.push_back(evaluate_run(generate_scenario(s), config));
  }
  auto column = [&](auto field) {
    std::vector<double> xs;
    for (const auto& r : out.runs) xs.push_back(static_cast<double>(r.*field));
    return summarize(xs);
  };
  out.rotation_iterations = column(&RunSummary::rotation_iterations);
  out.pose_iterations = column(&RunSummary::pose_iterations);
  out.distributed_cost = column(&RunSummary::distributed_cost);
  out.two_stage_cost = column(&RunSummary::two_stage_cost);
  out.gn_cost = column(&RunSummary::gn_cost);
  out.ate_star = column(&RunSummary::ate_star);
  out.are_star = column(&RunSummary::are_star);
  return out;
}

}  // namespace dgs

#endif  // DGS_RUNTIME_HPP
