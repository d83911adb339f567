#include "opdyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "opdyn/errors.hpp"

namespace opdyn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// |a - b| in units of `se`. The SE is floored at the round-off level of the
// compared values so that degenerate samples are not judged on noise in the
// last bits.
double z_score(double a, double b, double se) {
  const double diff = std::abs(a - b);
  const double floor = 1e-14 * std::max({1.0, std::abs(a), std::abs(b)});
  return diff / std::max(se, floor);
}

void require_unit_interval(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite() || (v.array() < 0.0).any() || (v.array() > 1.0).any()) {
    throw PreconditionViolation(std::string(what) + ": probabilities must lie in [0, 1]");
  }
}

double window_mean(const std::vector<double>& values,
                   std::pair<std::size_t, std::size_t> window) {
  double sum = 0.0;
  for (std::size_t i = window.first; i < window.second; ++i) sum += values[i];
  return sum / static_cast<double>(window.second - window.first);
}

std::vector<double> agent_series(const BatchSummary& batch, std::size_t agent,
                                 Eigen::VectorXd StepStats::*field) {
  std::vector<double> out;
  out.reserve(batch.steps.size());
  const auto k = static_cast<Eigen::Index>(agent);
  for (const auto& s : batch.steps) out.push_back((s.*field)[k]);
  return out;
}

std::vector<AgentTail> agent_tails(const BatchSummary& batch) {
  if (batch.steps.empty()) throw PreconditionViolation("batch has no recorded steps");
  const auto init = initial_window(batch.steps.size());
  const auto term = terminal_window(batch.steps.size());
  std::vector<AgentTail> out;
  for (std::size_t k : batch.ordinary_agents()) {
    AgentTail t;
    t.agent = k;
    const auto prod = agent_series(batch, k, &StepStats::prod_sq);
    t.initial_prod_sq = window_mean(prod, init);
    t.terminal_prod_sq = window_mean(prod, term);
    t.terminal_middle = window_mean(agent_series(batch, k, &StepStats::middle), term);
    t.terminal_above = window_mean(agent_series(batch, k, &StepStats::above_eps), term);
    out.push_back(t);
  }
  return out;
}

void require_eps(const BatchSummary& batch, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw PreconditionViolation("eps must lie in (0, 0.5)");
  if (std::abs(batch.eps - eps) > 1e-15) {
    throw PreconditionViolation("batch statistics were recorded with a different eps");
  }
}

}  // namespace

void to_json(nlohmann::json& j, const Assertion& a) {
  j = nlohmann::json{{"name", a.name},
                     {"pass", a.passed},
                     {"value", a.value},
                     {"threshold", a.threshold},
                     {"hard", a.hard}};
  if (std::isnan(a.standard_error)) j["standard_error"] = nullptr;
  else j["standard_error"] = a.standard_error;
}

std::pair<std::size_t, std::size_t> initial_window(std::size_t count) {
  const auto w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(count) * kWindowFraction)));
  return {0, std::min(w, count)};
}

std::pair<std::size_t, std::size_t> terminal_window(std::size_t count) {
  const auto [b, e] = initial_window(count);
  return {count - (e - b), count};
}

// --- super-martingale ------------------------------------------------------

double conditional_expectation_next(const PartitionedTrust& p, const Eigen::VectorXd& y,
                                    double alpha) {
  return p.psi.dot((1.0 - alpha) * y + alpha * (p.q * y));
}

double conditional_variance_formula(const PartitionedTrust& p, const Eigen::VectorXd& y,
                                    double alpha) {
  const Eigen::ArrayXd spread = y.array() * (1.0 - y.array());
  return alpha * alpha * p.lambda * p.lambda * (p.psi.array().square() * spread).sum();
}

MartingaleReport check_supermartingale(const PartitionedTrust& p,
                                       const ReplicaTrace& trace, double alpha) {
  const auto m = static_cast<Eigen::Index>(p.ordinary_count());
  MartingaleReport report;
  report.contraction = 1.0 - alpha * (1.0 - p.lambda);
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    const auto& x = trace.states[i];
    if (x.size() != m + 1) throw DimensionMismatch("trace does not match the partition");
    const Eigen::VectorXd y = x.tail(m);
    const double s = p.psi.dot(y);
    const double expected = conditional_expectation_next(p, y, alpha);
    const double contracted = report.contraction * s;
    const double residual = std::abs(expected - contracted);
    if (i == 0 || residual > report.max_residual) {
      report.max_residual = residual;
      report.worst_step = trace.steps[i];
    }
    // Subnormal values round in absolute steps and cannot show the contraction.
    if (s >= std::numeric_limits<double>::min() && !(expected < s)) {
      report.strict_decrease = false;
    }
    report.steps.push_back(trace.steps[i]);
    report.s.push_back(s);
    report.expected_next.push_back(expected);
    report.contracted.push_back(contracted);
    report.variance_formula.push_back(conditional_variance_formula(p, y, alpha));
  }
  return report;
}

std::vector<Assertion> MartingaleReport::assertions() const {
  return {
      {"expectation_identity_residual", max_residual <= kIdentityTolerance, max_residual,
       kIdentityTolerance},
      {"strict_decrease", strict_decrease, strict_decrease ? 1.0 : 0.0, 1.0},
  };
}

void MartingaleReport::throw_if_failed() const {
  if (max_residual > kIdentityTolerance) {
    std::ostringstream msg;
    msg << "E[S[n+1] | Y[n]] != (1 - alpha (1 - lambda)) S[n] at step " << worst_step
        << " (residual " << max_residual << ")";
    throw IdentityViolation(msg.str(), worst_step, max_residual);
  }
  if (!strict_decrease) {
    throw IdentityViolation("S[n] is not strictly decreasing in expectation", worst_step, 0.0);
  }
}

// --- conditional variance ---------------------------------------------------

SampleMoments sample_moments(const std::vector<double>& xs) {
  SampleMoments out;
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw PreconditionViolation("need at least two samples");
  // Shifting by the first sample keeps constant samples at exactly zero
  // variance and limits cancellation.
  const double shift = xs.front();
  double sum = 0.0;
  for (double v : xs) sum += v - shift;
  const double offset = sum / n;
  out.mean = shift + offset;
  double m2 = 0.0, m4 = 0.0;
  for (double v : xs) {
    const double d = (v - shift) - offset;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  out.variance = m2 * n / (n - 1.0);
  out.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  out.mean_se = std::sqrt(out.variance / n);
  return out;
}

VarianceReport check_conditional_variance(const PartitionedTrust& p,
                                          const Eigen::VectorXd& y, double alpha,
                                          std::size_t samples, const CounterRng& rng) {
  const auto m = static_cast<Eigen::Index>(p.ordinary_count());
  if (y.size() != m) throw DimensionMismatch("check_conditional_variance: y has wrong size");
  require_unit_interval(y, "check_conditional_variance");
  if (samples < kMinVarianceSamples) {
    throw PreconditionViolation("check_conditional_variance needs at least 1000 samples");
  }

  const double s = p.psi.dot(y);
  const Eigen::RowVectorXd weight = alpha * (p.psi.transpose() * p.q);
  const double base = (1.0 - alpha) * s - s;

  std::vector<double> ds(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    double acc = base;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (rng.bernoulli(y[k], CounterRng::Domain::kSample, i, static_cast<std::size_t>(k))) {
        acc += weight[k];
      }
    }
    ds[i] = acc;
  }
  const auto moments = sample_moments(ds);

  VarianceReport r;
  r.samples = samples;
  r.formula = conditional_variance_formula(p, y, alpha);
  r.sample_variance = moments.variance;
  r.standard_error = moments.variance_se;
  r.z = z_score(r.sample_variance, r.formula, r.standard_error);
  r.expected_mean = (1.0 - alpha * (1.0 - p.lambda)) * s - s;
  r.sample_mean = moments.mean;
  r.mean_standard_error = moments.mean_se;
  r.mean_z = z_score(r.sample_mean, r.expected_mean, r.mean_standard_error);
  return r;
}

std::vector<Assertion> VarianceReport::assertions() const {
  return {
      {"variance_within_se", z <= sigmas, sample_variance, formula, standard_error},
      {"mean_within_se", mean_z <= sigmas, sample_mean, expected_mean, mean_standard_error},
  };
}

void VarianceReport::throw_if_failed() const {
  if (!passed()) {
    std::ostringstream msg;
    msg << "sampled Var(dS) = " << sample_variance << " vs formula " << formula << " (z = "
        << z << "), sampled mean " << sample_mean << " vs " << expected_mean
        << " (z = " << mean_z << ")";
    throw StatisticalMismatch(msg.str());
  }
}

// --- moments of dS ----------------------------------------------------------

MomentDecayReport check_ds_moment_decay(const BatchSummary& batch, int order,
                                        double threshold) {
  if (order != 2 && order != 4) throw PreconditionViolation("moment order must be 2 or 4");
  if (!batch.has_s) throw PreconditionViolation("batch did not record dS");
  MomentDecayReport r;
  r.order = order;
  r.threshold = threshold;
  for (const auto& s : batch.steps) {
    if (s.n == 0) continue;
    r.steps.push_back(s.n);
    r.moments.push_back(order == 2 ? s.ds_abs2 : s.ds_abs4);
  }
  if (r.moments.empty()) throw PreconditionViolation("batch has no steps beyond n = 0");
  r.initial_average = window_mean(r.moments, initial_window(r.moments.size()));
  r.terminal_average = window_mean(r.moments, terminal_window(r.moments.size()));
  return r;
}

std::vector<Assertion> MomentDecayReport::assertions() const {
  const std::string m = std::to_string(order);
  return {
      {"terminal_moment" + m + "_below_threshold", below_threshold(), terminal_average,
       threshold},
      {"moment" + m + "_decayed", decayed(), terminal_average, initial_average},
  };
}

// --- tails ---------------------------------------------------------------

TailReport check_lemma2_tails(const BatchSummary& batch, double eps, double delta) {
  require_eps(batch, eps);
  TailReport r;
  r.eps = eps;
  r.delta = delta;
  r.proxy_bound = delta * eps * eps * (1.0 - eps) * (1.0 - eps);
  r.agents = agent_tails(batch);
  for (auto& a : r.agents) a.hypothesis_met = a.terminal_prod_sq <= r.proxy_bound;
  return r;
}

bool TailReport::hypothesis_met() const {
  return std::all_of(agents.begin(), agents.end(),
                     [](const AgentTail& a) { return a.hypothesis_met; });
}

bool TailReport::conclusion_holds() const {
  return std::all_of(agents.begin(), agents.end(),
                     [&](const AgentTail& a) { return a.terminal_middle < delta; });
}

std::vector<Assertion> TailReport::assertions() const {
  std::vector<Assertion> out;
  for (const auto& a : agents) {
    const std::string k = std::to_string(a.agent);
    out.push_back({"prod_sq_below_proxy[" + k + "]", a.hypothesis_met, a.terminal_prod_sq,
                   proxy_bound});
  }
  // The conclusion is only meaningful once the hypothesis holds.
  if (hypothesis_met()) {
    for (const auto& a : agents) {
      const std::string k = std::to_string(a.agent);
      out.push_back({"middle_mass[" + k + "]", a.terminal_middle < delta, a.terminal_middle,
                     delta});
    }
  }
  return out;
}

void TailReport::require_hypothesis() const {
  for (const auto& a : agents) {
    if (!a.hypothesis_met) {
      std::ostringstream msg;
      msg << "E[(X(1-X))^2] for agent " << a.agent << " is " << a.terminal_prod_sq
          << ", above the proxy bound " << proxy_bound;
      throw HypothesisNotMet(msg.str());
    }
  }
}

// --- layers ----------------------------------------------------------------

VLayers compute_v_layers(const PartitionedTrust& p) {
  const auto m = static_cast<Eigen::Index>(p.ordinary_count());
  std::vector<bool> assigned(static_cast<std::size_t>(m), false);
  std::vector<std::size_t> frontier;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (p.r[i] > 0.0) {
      frontier.push_back(static_cast<std::size_t>(i));
      assigned[static_cast<std::size_t>(i)] = true;
    }
  }

  VLayers out;
  while (!frontier.empty()) {
    std::vector<std::size_t> layer;
    for (std::size_t i : frontier) layer.push_back(i + 1);
    out.layers.push_back(std::move(layer));

    std::vector<std::size_t> next;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (assigned[static_cast<std::size_t>(i)]) continue;
      const bool trusts_frontier = std::any_of(frontier.begin(), frontier.end(), [&](std::size_t j) {
        return p.q(i, static_cast<Eigen::Index>(j)) > 0.0;
      });
      if (trusts_frontier) next.push_back(static_cast<std::size_t>(i));
    }
    for (std::size_t i : next) assigned[i] = true;
    frontier = std::move(next);
  }

  if (std::find(assigned.begin(), assigned.end(), false) != assigned.end()) {
    throw ExhaustionFailure("V-layers do not cover every ordinary agent");
  }
  return out;
}

std::vector<int> VLayers::layer_of(std::size_t agents) const {
  std::vector<int> out(agents, -1);
  for (std::size_t p = 0; p < layers.size(); ++p) {
    for (std::size_t k : layers[p]) {
      if (k < agents) out[k] = static_cast<int>(p);
    }
  }
  return out;
}

HerdingReport check_layer_herding(const BatchSummary& batch, const VLayers& layers,
                                  double eps, double delta) {
  require_eps(batch, eps);
  HerdingReport r;
  r.eps = eps;
  r.delta = delta;
  r.layers = layers;
  r.agents = agent_tails(batch);

  const auto layer_of = layers.layer_of(batch.agents);
  for (const auto& a : r.agents) {
    if (layer_of[a.agent] < 0) {
      throw PreconditionViolation("agent " + std::to_string(a.agent) + " is in no layer");
    }
  }

  for (const auto& layer : layers.layers) {
    long long first = -1;
    for (const auto& s : batch.steps) {
      const bool below = std::all_of(layer.begin(), layer.end(), [&](std::size_t k) {
        return s.above_eps[static_cast<Eigen::Index>(k)] < delta;
      });
      if (below) {
        first = static_cast<long long>(s.n);
        break;
      }
    }
    r.layer_first_passage.push_back(first);
  }
  r.first_passage_monotone = true;
  for (std::size_t p = 1; p < r.layer_first_passage.size(); ++p) {
    const auto prev = r.layer_first_passage[p - 1];
    const auto cur = r.layer_first_passage[p];
    if (prev < 0 || (cur >= 0 && cur < prev)) r.first_passage_monotone = false;
  }
  return r;
}

bool HerdingReport::passed() const {
  return std::all_of(agents.begin(), agents.end(),
                     [&](const AgentTail& a) { return a.terminal_above < delta; });
}

std::vector<Assertion> HerdingReport::assertions() const {
  std::vector<Assertion> out;
  for (const auto& a : agents) {
    out.push_back({"above_eps[" + std::to_string(a.agent) + "]", a.terminal_above < delta,
                   a.terminal_above, delta});
  }
  return out;
}

// --- counterexample ---------------------------------------------------------

ReplicaTrace counterexample_sequence(std::size_t horizon) {
  if (horizon < 2) throw PreconditionViolation("counterexample needs horizon >= 2");
  ReplicaTrace t;
  for (std::size_t n = 0; n < horizon; ++n) {
    t.steps.push_back(n);
    t.states.push_back(Eigen::VectorXd::Constant(1, n % 2 == 1 ? 1.0 : 0.0));
  }
  return t;
}

CounterexampleReport check_counterexample(const ReplicaTrace& trace) {
  if (trace.states.size() < 2) throw PreconditionViolation("trace too short");
  CounterexampleReport r;
  r.horizon = trace.states.size();
  r.min_adjacent_jump = kInf;
  for (std::size_t n = 0; n < trace.states.size(); ++n) {
    const Eigen::ArrayXd x = trace.states[n].array();
    r.max_product = std::max(r.max_product, (x * (1.0 - x)).abs().maxCoeff());
    if (n > 0) {
      const double jump = (trace.states[n] - trace.states[n - 1]).cwiseAbs().minCoeff();
      r.min_adjacent_jump = std::min(r.min_adjacent_jump, jump);
    }
  }
  // limsup - liminf, estimated on the second half of the sequence.
  double lo = kInf, hi = -kInf;
  for (std::size_t n = (trace.states.size() - 1) / 2; n < trace.states.size(); ++n) {
    lo = std::min(lo, trace.states[n].minCoeff());
    hi = std::max(hi, trace.states[n].maxCoeff());
  }
  r.oscillation = hi - lo;
  return r;
}

std::vector<Assertion> CounterexampleReport::assertions() const {
  return {
      {"product_identically_zero", products_zero(), max_product, 0.0},
      {"oscillation_amplitude_one", oscillation == 1.0, oscillation, 1.0},
      {"adjacent_jump_one", min_adjacent_jump == 1.0, min_adjacent_jump, 1.0},
  };
}

// --- corrected variance identity -------------------------------------------

CorrectedVarianceReport corrected_variance_identity(const TrustMatrix& trust,
                                                    const Eigen::VectorXd& pi,
                                                    const Eigen::VectorXd& x, double alpha,
                                                    std::size_t samples,
                                                    const CounterRng& rng) {
  const auto k = static_cast<Eigen::Index>(trust.size());
  if (pi.size() != k || x.size() != k) {
    throw DimensionMismatch("corrected_variance_identity: vector sizes disagree");
  }
  if (trust.has_stubborn()) {
    throw PreconditionViolation("corrected_variance_identity applies without a stubborn agent");
  }
  if (!check_irreducible(trust.weights())) {
    throw PreconditionViolation("corrected_variance_identity needs an irreducible T");
  }
  const Eigen::MatrixXd& t = trust.weights();
  if ((pi.array() <= 0.0).any() || std::abs(pi.sum() - 1.0) > kStochasticTolerance ||
      (pi.transpose() * t - pi.transpose()).cwiseAbs().maxCoeff() > kStochasticTolerance) {
    throw PreconditionViolation("pi must be the positive unit left eigenvector of T");
  }
  require_unit_interval(x, "corrected_variance_identity");
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionViolation("alpha must lie in (0, 1)");
  if (samples < kMinVarianceSamples) {
    throw PreconditionViolation("corrected_variance_identity needs at least 1000 samples");
  }

  const double q_prev = pi.dot(x);
  const Eigen::ArrayXd pi2 = pi.array().square();
  std::vector<double> dq(samples), unshifted(samples);
  Eigen::VectorXd actions(k);
  for (std::size_t i = 0; i < samples; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      actions[j] = rng.bernoulli(x[j], CounterRng::Domain::kSample, i, static_cast<std::size_t>(j));
    }
    const Eigen::VectorXd next = (1.0 - alpha) * x + alpha * (t * actions);
    dq[i] = pi.dot(next) - q_prev;
    unshifted[i] =
        alpha * alpha * (pi2 * next.array() * (1.0 - next.array())).sum();
  }

  const auto dq_moments = sample_moments(dq);
  const auto u_moments = sample_moments(unshifted);

  CorrectedVarianceReport r;
  r.samples = samples;
  r.formula = alpha * alpha * (pi2 * x.array() * (1.0 - x.array())).sum();
  r.sample_variance = dq_moments.variance;
  r.standard_error = dq_moments.variance_se;
  r.z = z_score(r.sample_variance, r.formula, r.standard_error);
  r.unshifted_mean = u_moments.mean;
  r.unshifted_standard_error = u_moments.mean_se;
  r.unshifted_z = z_score(r.sample_variance, r.unshifted_mean,
                          std::hypot(r.standard_error, r.unshifted_standard_error));
  return r;
}

std::vector<Assertion> CorrectedVarianceReport::assertions() const {
  return {
      {"corrected_variance_within_se", corrected_matches(), sample_variance, formula,
       standard_error},
      // Report-only: documents that the unshifted form is not an identity.
      {"unshifted_variant_rejected", unshifted_rejected(), unshifted_z, kInequalitySigmas,
       std::numeric_limits<double>::quiet_NaN(), false},
  };
}

void CorrectedVarianceReport::throw_if_failed() const {
  if (!passed()) {
    std::ostringstream msg;
    msg << "sampled Var(dQ | X[n-1]) = " << sample_variance << " vs formula " << formula
        << " (z = " << z << ")";
    throw StatisticalMismatch(msg.str());
  }
}

// --- JSON ------------------------------------------------------------------

namespace {
nlohmann::json assertions_json(const std::vector<Assertion>& as) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : as) out.push_back(a);
  return out;
}
}  // namespace

void to_json(nlohmann::json& j, const MartingaleReport& r) {
  j = nlohmann::json{{"contraction", r.contraction},
                     {"steps_checked", r.steps.size()},
                     {"max_residual", r.max_residual},
                     {"worst_step", r.worst_step},
                     {"strict_decrease", r.strict_decrease},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const VarianceReport& r) {
  j = nlohmann::json{{"samples", r.samples},
                     {"formula", r.formula},
                     {"sample_variance", r.sample_variance},
                     {"standard_error", r.standard_error},
                     {"z", r.z},
                     {"expected_mean", r.expected_mean},
                     {"sample_mean", r.sample_mean},
                     {"mean_standard_error", r.mean_standard_error},
                     {"mean_z", r.mean_z},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const MomentDecayReport& r) {
  j = nlohmann::json{{"order", r.order},
                     {"initial_average", r.initial_average},
                     {"terminal_average", r.terminal_average},
                     {"threshold", r.threshold},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const TailReport& r) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : r.agents) {
    agents.push_back({{"agent", a.agent},
                      {"initial_prod_sq", a.initial_prod_sq},
                      {"terminal_prod_sq", a.terminal_prod_sq},
                      {"terminal_middle", a.terminal_middle},
                      {"hypothesis_met", a.hypothesis_met}});
  }
  j = nlohmann::json{{"eps", r.eps},
                     {"delta", r.delta},
                     {"proxy_bound", r.proxy_bound},
                     {"status", r.hypothesis_met() ? (r.conclusion_holds() ? "pass" : "fail")
                                                   : "HypothesisNotMet"},
                     {"agents", agents},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const VLayers& r) {
  j = nlohmann::json{{"layers", r.layers}, {"depth", r.depth()}};
}

void to_json(nlohmann::json& j, const HerdingReport& r) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : r.agents) {
    agents.push_back({{"agent", a.agent},
                      {"terminal_above_eps", a.terminal_above},
                      {"terminal_middle", a.terminal_middle},
                      {"initial_prod_sq", a.initial_prod_sq},
                      {"terminal_prod_sq", a.terminal_prod_sq}});
  }
  j = nlohmann::json{{"eps", r.eps},
                     {"delta", r.delta},
                     {"layers", r.layers},
                     {"layer_first_passage", r.layer_first_passage},
                     {"first_passage_monotone", r.first_passage_monotone},
                     {"agents", agents},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const CounterexampleReport& r) {
  j = nlohmann::json{{"horizon", r.horizon},
                     {"max_product", r.max_product},
                     {"min_adjacent_jump", r.min_adjacent_jump},
                     {"oscillation", r.oscillation},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

void to_json(nlohmann::json& j, const CorrectedVarianceReport& r) {
  j = nlohmann::json{{"samples", r.samples},
                     {"formula", r.formula},
                     {"sample_variance", r.sample_variance},
                     {"standard_error", r.standard_error},
                     {"z", r.z},
                     {"unshifted_mean", r.unshifted_mean},
                     {"unshifted_standard_error", r.unshifted_standard_error},
                     {"unshifted_z", r.unshifted_z},
                     {"assertions", assertions_json(r.assertions())},
                     {"pass", r.passed()}};
}

}  // namespace opdyn
