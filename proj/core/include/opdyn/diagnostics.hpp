#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "opdyn/graph.hpp"
#include "opdyn/ra_sim.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

inline constexpr double kIdentityTolerance = 1e-12;
inline constexpr double kTailDelta = 0.05;
inline constexpr double kWindowFraction = 0.05;
inline constexpr double kEqualitySigmas = 4.0;
inline constexpr double kInequalitySigmas = 6.0;
inline constexpr std::size_t kMinVarianceSamples = 1000;

/// One checked statement. `standard_error` is NaN when not statistical.
struct Assertion {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  double standard_error = std::numeric_limits<double>::quiet_NaN();
  // Report-only assertions never fail a run.
  bool hard = true;
};

void to_json(nlohmann::json& j, const Assertion& a);

// ---------------------------------------------------------------------------
// Super-martingale S[n] = psi^T Y[n]

struct MartingaleReport {
  double contraction = 0.0;  // 1 - alpha (1 - lambda)
  std::vector<std::size_t> steps;
  std::vector<double> s;
  std::vector<double> expected_next;    // psi^T((1-a) Y + a Q Y)
  std::vector<double> contracted;       // contraction * S[n]
  std::vector<double> variance_formula; // a^2 l^2 sum psi_k^2 Y_k (1 - Y_k)
  double max_residual = 0.0;
  std::size_t worst_step = 0;
  bool strict_decrease = true;

  bool passed() const {
    return max_residual <= kIdentityTolerance && strict_decrease;
  }
  std::vector<Assertion> assertions() const;
  /// Throws IdentityViolation naming the worst step.
  void throw_if_failed() const;
};

/// Conditional expectation of S[n+1] given Y[n], computed through Q.
double conditional_expectation_next(const PartitionedTrust& p,
                                    const Eigen::VectorXd& y, double alpha);

/// a^2 lambda^2 sum_k psi_k^2 y_k (1 - y_k).
double conditional_variance_formula(const PartitionedTrust& p,
                                    const Eigen::VectorXd& y, double alpha);

/// Checks the exact contraction identity at every recorded step of `trace`
/// (full K-dimensional states whose coordinate 0 is the role agent).
MartingaleReport check_supermartingale(const PartitionedTrust& p,
                                       const ReplicaTrace& trace, double alpha);

// ---------------------------------------------------------------------------
// Conditional variance of dS given Y[n]

struct VarianceReport {
  std::size_t samples = 0;
  double formula = 0.0;
  double sample_variance = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  // Companion check of the conditional mean.
  double expected_mean = 0.0;
  double sample_mean = 0.0;
  double mean_standard_error = 0.0;
  double mean_z = 0.0;
  double sigmas = kEqualitySigmas;

  bool passed() const { return z <= sigmas && mean_z <= sigmas; }
  std::vector<Assertion> assertions() const;
  void throw_if_failed() const;  // StatisticalMismatch
};

/// Holds Y[n] = y, samples B ~ Bernoulli(y) and compares the sample variance
/// of dS[n+1] with the closed form.
VarianceReport check_conditional_variance(const PartitionedTrust& p,
                                          const Eigen::VectorXd& y, double alpha,
                                          std::size_t samples,
                                          const CounterRng& rng);

/// Sample-variance standard error sqrt((m4 - s^4) / N) from central moments.
struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;          // unbiased
  double variance_se = 0.0;
  double mean_se = 0.0;
};
SampleMoments sample_moments(const std::vector<double>& xs);

// ---------------------------------------------------------------------------
// Moments of dS over a batch

struct MomentDecayReport {
  int order = 2;
  std::vector<std::size_t> steps;
  std::vector<double> moments;  // E[|dS[n]|^m]
  double initial_average = 0.0;
  double terminal_average = 0.0;
  double threshold = 0.0;

  bool below_threshold() const { return terminal_average <= threshold; }
  bool decayed() const { return terminal_average < initial_average; }
  bool passed() const { return below_threshold() && decayed(); }
  std::vector<Assertion> assertions() const;
};

inline constexpr double kDefaultMomentThreshold = 1e-3;

/// `order` must be 2 or 4. Steps with n = 0 are skipped.
MomentDecayReport check_ds_moment_decay(const BatchSummary& batch, int order,
                                        double threshold = kDefaultMomentThreshold);

// ---------------------------------------------------------------------------
// Tail mass (middle-mass) check

struct AgentTail {
  std::size_t agent = 0;
  double initial_prod_sq = 0.0;
  double terminal_prod_sq = 0.0;
  double terminal_middle = 0.0;
  double terminal_above = 0.0;
  bool hypothesis_met = false;
};

struct TailReport {
  double eps = kDefaultTailEps;
  double delta = kTailDelta;
  // E[(X(1-X))^2] at or below this bounds the middle mass by delta.
  double proxy_bound = 0.0;
  std::vector<AgentTail> agents;

  bool hypothesis_met() const;
  bool conclusion_holds() const;  // every middle mass < delta
  /// Conclusion is only asserted when the hypothesis holds.
  bool passed() const { return hypothesis_met() && conclusion_holds(); }
  std::vector<Assertion> assertions() const;
  /// Throws HypothesisNotMet when the product statistic did not decay.
  void require_hypothesis() const;
};

TailReport check_lemma2_tails(const BatchSummary& batch, double eps,
                              double delta = kTailDelta);

// ---------------------------------------------------------------------------
// Layered propagation V_0 ... V_P

struct VLayers {
  // Agents in T indexing (ordinary agents are 1..K-1).
  std::vector<std::vector<std::size_t>> layers;

  std::size_t depth() const { return layers.empty() ? 0 : layers.size() - 1; }
  std::vector<int> layer_of(std::size_t agents) const;  // -1 = unassigned
};

/// V_0 = {i : r_i > 0}; V_{p+1} = unassigned agents trusting some agent in
/// V_p. Throws ExhaustionFailure when the layers do not cover every agent.
VLayers compute_v_layers(const PartitionedTrust& p);

struct HerdingReport {
  double eps = kDefaultTailEps;
  double delta = kTailDelta;
  std::vector<AgentTail> agents;
  VLayers layers;
  // Earliest recorded step with P(X_k > eps) < delta for every k in the
  // layer; -1 when never reached.
  std::vector<long long> layer_first_passage;
  bool first_passage_monotone = false;  // report-only

  bool passed() const;
  std::vector<Assertion> assertions() const;
};

HerdingReport check_layer_herding(const BatchSummary& batch, const VLayers& layers,
                                  double eps, double delta = kTailDelta);

// ---------------------------------------------------------------------------
// Alternating counterexample

/// Single-agent synthetic trace X[n] = 1 for odd n, 0 for even n,
/// n = 0..horizon-1. Throws PreconditionViolation for horizon < 2.
ReplicaTrace counterexample_sequence(std::size_t horizon);

struct CounterexampleReport {
  std::size_t horizon = 0;
  double max_product = 0.0;           // max |X (1 - X)|
  double min_adjacent_jump = 0.0;     // min |X[n+1] - X[n]|
  double oscillation = 0.0;           // limsup - liminf over the tail half

  bool products_zero() const { return max_product == 0.0; }
  bool non_convergent() const { return oscillation == 1.0 && min_adjacent_jump == 1.0; }
  bool passed() const { return products_zero() && non_convergent(); }
  std::vector<Assertion> assertions() const;
};

CounterexampleReport check_counterexample(const ReplicaTrace& trace);

// ---------------------------------------------------------------------------
// Corrected conditional-variance identity without a stubborn agent

struct CorrectedVarianceReport {
  std::size_t samples = 0;
  double formula = 0.0;  // a^2 sum pi_k^2 x_k (1 - x_k), shifted time
  double sample_variance = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  // Unshifted variant: a^2 sum pi_k^2 X_k[n] (1 - X_k[n]) averaged over
  // the sampled next states.
  double unshifted_mean = 0.0;
  double unshifted_standard_error = 0.0;
  double unshifted_z = 0.0;

  bool corrected_matches() const { return z <= kEqualitySigmas; }
  bool unshifted_rejected() const { return unshifted_z > kInequalitySigmas; }
  bool passed() const { return corrected_matches(); }
  std::vector<Assertion> assertions() const;
  void throw_if_failed() const;  // StatisticalMismatch
};

/// `pi` must satisfy pi^T T = pi^T, pi > 0, sum 1 (checked within 1e-9).
CorrectedVarianceReport corrected_variance_identity(const TrustMatrix& trust,
                                                    const Eigen::VectorXd& pi,
                                                    const Eigen::VectorXd& x,
                                                    double alpha,
                                                    std::size_t samples,
                                                    const CounterRng& rng);

// ---------------------------------------------------------------------------

/// Half-open index ranges [begin, end) of the first and last
/// kWindowFraction of `count` recorded steps (at least one step each).
std::pair<std::size_t, std::size_t> initial_window(std::size_t count);
std::pair<std::size_t, std::size_t> terminal_window(std::size_t count);

void to_json(nlohmann::json& j, const MartingaleReport& r);
void to_json(nlohmann::json& j, const VarianceReport& r);
void to_json(nlohmann::json& j, const MomentDecayReport& r);
void to_json(nlohmann::json& j, const TailReport& r);
void to_json(nlohmann::json& j, const VLayers& r);
void to_json(nlohmann::json& j, const HerdingReport& r);
void to_json(nlohmann::json& j, const CounterexampleReport& r);
void to_json(nlohmann::json& j, const CorrectedVarianceReport& r);

}  // namespace opdyn
