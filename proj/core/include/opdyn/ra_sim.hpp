#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "opdyn/graph.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

/// Probability f[n] with which a drifting agent plays action 1.
///   power:       f[n] = min(1, c / (n + 1)^p)
///   exponential: f[n] = min(1, c * gamma^n)
struct DriftLaw {
  enum class Kind { kPower, kExponential };

  Kind kind = Kind::kPower;
  double scale = 1.0;  // c
  double rate = 1.0;   // p for power, gamma for exponential

  static DriftLaw power(double c, double p) { return {Kind::kPower, c, p}; }
  static DriftLaw exponential(double c, double gamma) {
    return {Kind::kExponential, c, gamma};
  }

  double operator()(std::size_t n) const;
  void validate() const;
};

enum class RoleKind { kNone, kStubborn, kDrifting };

struct AgentRoleSpec {
  RoleKind kind = RoleKind::kNone;
  std::optional<DriftLaw> drift;
  std::size_t agent = 0;  // internal index; always 0 after relabeling
};

/// Initial action probabilities of the ordinary agents.
struct InitSpec {
  enum class Kind { kConstant, kUniform, kExplicit };

  Kind kind = Kind::kUniform;
  double value = 0.5;
  std::vector<double> values;  // one per agent (full K), role entry ignored

  static InitSpec constant(double v) { return {Kind::kConstant, v, {}}; }
  static InitSpec uniform() { return {Kind::kUniform, 0.0, {}}; }
  static InitSpec explicit_values(std::vector<double> v) {
    return {Kind::kExplicit, 0.0, std::move(v)};
  }
};

inline constexpr double kDefaultTailEps = 0.05;

struct SimConfig {
  double alpha = 0.5;
  std::size_t horizon = 1000;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  AgentRoleSpec role;
  InitSpec init;
  double eps = kDefaultTailEps;
  bool record_actions = false;
};

/// Throws ValidationError when the configuration is inconsistent with
/// itself or with a network of `k` agents (`has_stubborn` tells whether
/// agent 0 carries the unit row).
void validate(const SimConfig& cfg, std::size_t k, bool has_stubborn);

/// Full recording up to this step, geometric checkpoints afterwards.
inline constexpr std::size_t kFullRecordSteps = 10'000;

/// Steps 0..horizon that get recorded.
std::vector<std::size_t> recording_steps(std::size_t horizon);

struct ReplicaTrace {
  std::size_t replica_id = 0;
  std::vector<std::size_t> steps;
  std::vector<Eigen::VectorXd> states;   // X[n]
  std::vector<Eigen::VectorXd> actions;  // A[n], when requested
  // S[n] = psi^T Y[n] (or pi^T X[n] without a role agent); empty when no
  // positive left vector is available.
  std::vector<double> s;
  std::vector<double> ds;  // S[n] - S[n-1]; 0 at n = 0
};

/// X[n+1] = (1 - alpha) X[n] + alpha T A[n].
/// Throws DimensionMismatch, or PreconditionViolation for non-binary actions
/// or probabilities outside [0, 1].
Eigen::VectorXd ra_step(const TrustMatrix& trust, const Eigen::VectorXd& x,
                        double alpha, const Eigen::VectorXd& actions);

/// Independent Bernoulli(x_k) actions for step n; the role agent is fixed to
/// 0 (stubborn) or drawn with probability f[n] (drifting).
Eigen::VectorXd draw_actions(const Eigen::VectorXd& x, const AgentRoleSpec& role,
                             std::size_t n, const CounterRng& rng);

/// Per-step cross-replica statistics.
struct StepStats {
  std::size_t n = 0;
  Eigen::VectorXd above_eps;   // P(X_k > eps)
  Eigen::VectorXd middle;      // P(eps < X_k < 1 - eps)
  Eigen::VectorXd mean_x;      // E[X_k]
  Eigen::VectorXd prod_sq;     // E[(X_k (1 - X_k))^2]
  double s_mean = 0.0;
  double ds_mean = 0.0;
  double ds_var = 0.0;         // unbiased; 0 for a single replica
  double ds_abs2 = 0.0;        // E[|dS|^2]
  double ds_abs4 = 0.0;        // E[|dS|^4]
};

struct BatchSummary {
  std::size_t agents = 0;
  std::size_t replicas = 0;
  double eps = kDefaultTailEps;
  bool has_s = false;
  // Index of the role agent, excluded from ordinary-agent checks.
  std::optional<std::size_t> role_agent;
  std::vector<StepStats> steps;

  std::vector<std::size_t> ordinary_agents() const;
};

/// Aggregates already-recorded traces (all with the same step schedule).
BatchSummary summarize_traces(std::span<const ReplicaTrace> traces, double eps,
                              std::optional<std::size_t> role_agent);

/// The RA model bound to one network and configuration.
class RaModel {
 public:
  RaModel(TrustMatrix trust, SimConfig cfg);

  const TrustMatrix& trust() const { return trust_; }
  const SimConfig& config() const { return cfg_; }
  const std::optional<PartitionedTrust>& partition() const { return partition_; }
  /// Weights used for S[n] (psi padded with a leading 0, or pi); empty when
  /// unavailable.
  const Eigen::VectorXd& s_weights() const { return s_weights_; }

  Eigen::VectorXd initial_state(std::size_t replica_id) const;

  /// Runs `horizon` steps; the result depends only on (T, cfg, replica_id).
  ReplicaTrace run_replica(std::size_t replica_id) const;

  /// Runs all replicas on `jobs` workers. Replicas are reduced in fixed
  /// chunks in id order so the summary does not depend on `jobs`.
  BatchSummary run_batch(std::size_t jobs = 0) const;

 private:
  TrustMatrix trust_;
  SimConfig cfg_;
  std::optional<PartitionedTrust> partition_;
  Eigen::VectorXd s_weights_;
  std::vector<std::size_t> schedule_;
};

ReplicaTrace run_replica(const TrustMatrix& trust, const SimConfig& cfg,
                         std::size_t replica_id);
BatchSummary run_batch(const TrustMatrix& trust, const SimConfig& cfg,
                       std::size_t jobs = 0);

/// Long-format CSV rows `n,stat_name,agent,value` (`agent` is empty for
/// scalar statistics), preceded by a `# schema_version=` comment.
void write_batch_csv(std::ostream& out, const BatchSummary& summary);

/// Columns `n,S,dS,x_0..x_{K-1}`.
void write_trace_csv(std::ostream& out, const ReplicaTrace& trace);

void to_json(nlohmann::json& j, const BatchSummary& summary);

inline constexpr int kCsvSchemaVersion = 1;

}  // namespace opdyn
