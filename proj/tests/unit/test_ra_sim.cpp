#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "opdyn/errors.hpp"
#include "opdyn/ra_sim.hpp"
#include "support/oracles.hpp"

using namespace opdyn;
namespace t = opdyn::testing;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

SimConfig stubborn_config(std::size_t horizon, std::size_t replicas, std::uint64_t seed) {
  SimConfig cfg;
  cfg.alpha = 0.3;
  cfg.horizon = horizon;
  cfg.replicas = replicas;
  cfg.seed = seed;
  cfg.role.kind = RoleKind::kStubborn;
  cfg.init = InitSpec::uniform();
  return cfg;
}

void expect_same_traces(const ReplicaTrace& a, const ReplicaTrace& b) {
  ASSERT_EQ(a.steps, b.steps);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(a.ds, b.ds);
}

void expect_same_summaries(const BatchSummary& a, const BatchSummary& b) {
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& x = a.steps[i];
    const auto& y = b.steps[i];
    EXPECT_EQ(x.n, y.n);
    EXPECT_EQ(x.above_eps, y.above_eps);
    EXPECT_EQ(x.middle, y.middle);
    EXPECT_EQ(x.mean_x, y.mean_x);
    EXPECT_EQ(x.prod_sq, y.prod_sq);
    EXPECT_EQ(x.ds_mean, y.ds_mean);
    EXPECT_EQ(x.ds_var, y.ds_var);
    EXPECT_EQ(x.ds_abs2, y.ds_abs2);
    EXPECT_EQ(x.ds_abs4, y.ds_abs4);
  }
}

}  // namespace

// ============================================================================
// Single steps
// ============================================================================

TEST(RaStep, ConsensusIsAbsorbing) {
  t::Rng rng(1);
  const auto trust = TrustMatrix::create(t::random_irreducible_stochastic(5, rng));
  for (double c : {0.0, 1.0}) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(5, c);
    EXPECT_EQ(ra_step(trust, x, 0.4, x), x);
  }
}

TEST(RaStep, HandEvaluation) {
  const auto trust = TrustMatrix::from_rows({{1, 0}, {0.5, 0.5}}, 0);
  const auto next = ra_step(trust, vec({0, 0.5}), 0.5, vec({0, 1}));
  EXPECT_DOUBLE_EQ(next[0], 0.0);
  EXPECT_DOUBLE_EQ(next[1], 0.5);
}

TEST(RaStep, Preconditions) {
  const auto trust = TrustMatrix::from_rows({{1, 0}, {0.5, 0.5}}, 0);
  EXPECT_THROW(ra_step(trust, vec({0, 0.5}), 0.5, vec({0, 0.5})), PreconditionViolation);
  EXPECT_THROW(ra_step(trust, vec({0, 1.5}), 0.5, vec({0, 1})), PreconditionViolation);
  EXPECT_THROW(ra_step(trust, vec({0}), 0.5, vec({0, 1})), DimensionMismatch);
}

TEST(DrawActions, DegenerateProbabilities) {
  const CounterRng rng(3, 0);
  const AgentRoleSpec none;
  for (std::size_t n = 0; n < 100; ++n) {
    EXPECT_EQ(draw_actions(Eigen::VectorXd::Ones(4), none, n, rng), Eigen::VectorXd::Ones(4));
    EXPECT_EQ(draw_actions(Eigen::VectorXd::Zero(4), none, n, rng), Eigen::VectorXd::Zero(4));
  }
}

TEST(DrawActions, EmpiricalMeanWithinBinomialBound) {
  const CounterRng rng(99, 0);
  const AgentRoleSpec none;
  const std::size_t draws = 100'000;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.5);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (std::size_t n = 0; n < draws; ++n) sum += draw_actions(x, none, n, rng);
  const double bound = 3.0 * std::sqrt(0.25 / draws);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(sum[k] / draws, 0.5, bound);
  }
}

TEST(DrawActions, RoleAgent) {
  AgentRoleSpec stubborn{RoleKind::kStubborn, std::nullopt, 0};
  AgentRoleSpec drifting{RoleKind::kDrifting, DriftLaw::power(1.0, 1.0), 0};
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  const std::size_t streams = 200'000;
  std::size_t ones = 0;
  for (std::size_t s = 0; s < streams; ++s) {
    const CounterRng rng(5, s);
    EXPECT_EQ(draw_actions(x, stubborn, 1, rng)[0], 0.0);
    ones += static_cast<std::size_t>(draw_actions(x, drifting, 1, rng)[0]);  // f[1] = 1/2
  }
  EXPECT_EQ(draw_actions(x, drifting, 0, CounterRng(5, 0))[0], 1.0);  // f[0] = 1
  EXPECT_NEAR(static_cast<double>(ones) / streams, 0.5, 4 * std::sqrt(0.25 / streams));
}

TEST(DriftLaw, BuiltInLaws) {
  const auto power = DriftLaw::power(2.0, 1.0);
  EXPECT_EQ(power(0), 1.0);  // clamped
  EXPECT_DOUBLE_EQ(power(3), 0.5);
  const auto expo = DriftLaw::exponential(0.8, 0.5);
  EXPECT_DOUBLE_EQ(expo(0), 0.8);
  EXPECT_DOUBLE_EQ(expo(2), 0.2);
  EXPECT_LT(power(1'000'000), 1e-5);
  EXPECT_LT(expo(100), 1e-20);
  EXPECT_THROW(DriftLaw::power(1.0, 0.0).validate(), ValidationError);
  EXPECT_THROW(DriftLaw::exponential(1.0, 1.0).validate(), ValidationError);
  EXPECT_THROW(DriftLaw::power(-1.0, 1.0).validate(), ValidationError);
}

TEST(DriftLaw, DrawFrequencyTracksLaw) {
  // Across replicas, the drifting agent's action at step n is Bernoulli(f[n]).
  const auto trust = TrustMatrix::from_rows({{1, 0}, {0.3, 0.7}}, 0);
  SimConfig cfg = stubborn_config(8, 20'000, 31);
  cfg.role = {RoleKind::kDrifting, DriftLaw::power(1.0, 1.0), 0};
  cfg.record_actions = true;
  const RaModel model(trust, cfg);
  std::vector<double> ones(8, 0.0);
  for (std::size_t id = 0; id < cfg.replicas; ++id) {
    const auto trace = model.run_replica(id);
    for (std::size_t n = 0; n < 8; ++n) ones[n] += trace.actions[n][0];
  }
  for (std::size_t n = 0; n < 8; ++n) {
    const double f = 1.0 / static_cast<double>(n + 1);
    const double se = std::sqrt(f * (1 - f) / cfg.replicas);
    EXPECT_NEAR(ones[n] / cfg.replicas, f, 4 * se + 1e-12) << "n=" << n;
  }
}

// ============================================================================
// Replicas
// ============================================================================

TEST(RunReplica, DeterministicForSameSeedAndId) {
  t::Rng rng(6);
  const auto net = t::random_stubborn_network(5, 2, rng);
  const auto cfg = stubborn_config(300, 1, 77);
  expect_same_traces(run_replica(net, cfg, 4), run_replica(net, cfg, 4));
  const auto other = run_replica(net, cfg, 5);
  EXPECT_NE(other.states[0], run_replica(net, cfg, 4).states[0]);
}

TEST(RunReplica, StubbornCoordinateStaysZeroAndStatesContained) {
  t::Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = t::random_stubborn_network(6, 3, rng);
    const auto trace = run_replica(net, stubborn_config(500, 1, trial), 0);
    for (const auto& x : trace.states) {
      EXPECT_EQ(x[0], 0.0);
      EXPECT_GE(x.minCoeff(), 0.0);
      EXPECT_LE(x.maxCoeff(), 1.0);
    }
  }
}

TEST(RunReplica, ZeroDriftMatchesStubborn) {
  t::Rng rng(13);
  const auto net = t::random_stubborn_network(5, 1, rng);
  auto stubborn = stubborn_config(400, 1, 8);
  auto drifting = stubborn;
  drifting.role = {RoleKind::kDrifting, DriftLaw::power(0.0, 1.0), 0};
  for (std::size_t id = 0; id < 5; ++id) {
    expect_same_traces(run_replica(net, stubborn, id), run_replica(net, drifting, id));
  }
}

TEST(RunReplica, DriftingCoordinateFollowsLaw) {
  t::Rng rng(14);
  const auto net = t::random_stubborn_network(4, 2, rng);
  auto cfg = stubborn_config(50, 1, 2);
  const auto law = DriftLaw::exponential(0.9, 0.8);
  cfg.role = {RoleKind::kDrifting, law, 0};
  const auto trace = run_replica(net, cfg, 0);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    EXPECT_EQ(trace.states[i][0], law(trace.steps[i]));
  }
}

TEST(RunReplica, AllZeroStateIsAbsorbing) {
  t::Rng rng(15);
  const auto net = t::random_stubborn_network(5, 2, rng);
  auto cfg = stubborn_config(100, 1, 3);
  cfg.init = InitSpec::constant(0.0);
  const auto trace = run_replica(net, cfg, 0);
  for (const auto& x : trace.states) EXPECT_EQ(x, Eigen::VectorXd::Zero(5));
  for (double d : trace.ds) EXPECT_EQ(d, 0.0);
}

TEST(RunReplica, SMatchesPsiWeights) {
  t::Rng rng(16);
  const auto net = t::random_stubborn_network(5, 2, rng);
  const RaModel model(net, stubborn_config(60, 1, 4));
  const auto& psi = model.partition()->psi;
  const auto trace = model.run_replica(0);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    EXPECT_NEAR(trace.s[i], psi.dot(trace.states[i].tail(4)), 1e-15);
    if (i > 0) EXPECT_NEAR(trace.ds[i], trace.s[i] - trace.s[i - 1], 1e-15);
  }
  EXPECT_EQ(trace.ds[0], 0.0);
}

TEST(RecordingSteps, FullThenGeometric) {
  const auto small = recording_steps(50);
  ASSERT_EQ(small.size(), 51u);
  EXPECT_EQ(small.back(), 50u);
  const auto large = recording_steps(100'000);
  EXPECT_EQ(large[10'000], 10'000u);
  EXPECT_EQ(large.back(), 100'000u);
  for (std::size_t i = 1; i < large.size(); ++i) EXPECT_LT(large[i - 1], large[i]);
  EXPECT_LT(large.size(), 10'300u);
}

// ============================================================================
// Batches
// ============================================================================

TEST(RunBatch, SingleReplicaEqualsTrace) {
  t::Rng rng(20);
  const auto net = t::random_stubborn_network(4, 1, rng);
  const auto cfg = stubborn_config(80, 1, 12);
  const auto summary = run_batch(net, cfg);
  const auto trace = run_replica(net, cfg, 0);
  ASSERT_EQ(summary.steps.size(), trace.steps.size());
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = summary.steps[i];
    const auto& x = trace.states[i];
    EXPECT_EQ(s.mean_x, x);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      EXPECT_EQ(s.above_eps[k], x[k] > cfg.eps ? 1.0 : 0.0);
      const double prod = x[k] * (1 - x[k]);
      EXPECT_EQ(s.prod_sq[k], prod * prod);
    }
    EXPECT_EQ(s.ds_mean, trace.ds[i]);
    EXPECT_EQ(s.ds_var, 0.0);
  }
}

TEST(RunBatch, IndependentOfWorkerCount) {
  t::Rng rng(21);
  const auto net = t::random_stubborn_network(5, 2, rng);
  const auto cfg = stubborn_config(200, 150, 42);
  const auto one = run_batch(net, cfg, 1);
  expect_same_summaries(one, run_batch(net, cfg, 3));
  expect_same_summaries(one, run_batch(net, cfg, 8));
}

TEST(RunBatch, MatchesSummarizeTraces) {
  t::Rng rng(22);
  const auto net = t::random_stubborn_network(4, 2, rng);
  const auto cfg = stubborn_config(40, 70, 5);
  std::vector<ReplicaTrace> traces;
  for (std::size_t id = 0; id < cfg.replicas; ++id) traces.push_back(run_replica(net, cfg, id));
  expect_same_summaries(run_batch(net, cfg, 2), summarize_traces(traces, cfg.eps, 0));
}

TEST(RunBatch, TwoAgentExpectationRecursion) {
  // K = 2 chain: E[Y[n+1]] = (1 - alpha + alpha q) E[Y[n]].
  const double q = 0.6;
  const auto net = TrustMatrix::from_rows({{1, 0}, {1 - q, q}}, 0);
  SimConfig cfg = stubborn_config(30, 20'000, 2024);
  cfg.alpha = 0.5;
  cfg.init = InitSpec::constant(1.0);
  const auto summary = run_batch(net, cfg);
  for (std::size_t n : {1u, 2u, 5u, 10u, 20u}) {
    const double expected = std::pow(1 - cfg.alpha + cfg.alpha * q, static_cast<double>(n));
    const double mean = summary.steps[n].mean_x[1];
    // Var(Y) <= E[Y], so sqrt(E[Y]/N) bounds the standard error.
    const double se = std::sqrt(std::max(expected, 1e-12) / cfg.replicas);
    EXPECT_NEAR(mean, expected, 3 * se) << "n=" << n;
  }
}

TEST(RunBatch, CsvLayout) {
  const auto net = TrustMatrix::from_rows({{1, 0}, {0.3, 0.7}}, 0);
  const auto summary = run_batch(net, stubborn_config(2, 3, 1));
  std::ostringstream out;
  write_batch_csv(out, summary);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# schema_version=1");
  std::getline(in, line);
  EXPECT_EQ(line, "n,stat_name,agent,value");
  std::getline(in, line);
  EXPECT_EQ(line, "0,above_eps,0,0");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  // 3 steps x (4 stats x 2 agents + 5 scalars), one already consumed.
  EXPECT_EQ(rows, 3u * 13u - 1u);
}

TEST(Validation, RejectsBadConfigs) {
  const auto net = TrustMatrix::from_rows({{1, 0}, {0.3, 0.7}}, 0);
  auto cfg = stubborn_config(10, 1, 0);
  cfg.alpha = 1.0;
  EXPECT_THROW(RaModel(net, cfg), ValidationError);
  cfg = stubborn_config(10, 0, 0);
  EXPECT_THROW(RaModel(net, cfg), ValidationError);
  cfg = stubborn_config(10, 1, 0);
  cfg.role = {RoleKind::kDrifting, std::nullopt, 0};
  EXPECT_THROW(RaModel(net, cfg), ValidationError);
  cfg = stubborn_config(10, 1, 0);
  cfg.init = InitSpec::explicit_values({0.5});
  EXPECT_THROW(RaModel(net, cfg), ValidationError);
  const auto no_stubborn = TrustMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  EXPECT_THROW(RaModel(no_stubborn, stubborn_config(10, 1, 0)), ValidationError);
}
