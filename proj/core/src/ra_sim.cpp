#include "opdyn/ra_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "format.hpp"
#include "opdyn/errors.hpp"

namespace opdyn {
namespace {

// Replicas are reduced in chunks of this size, in id order.
constexpr std::size_t kReductionChunk = 32;
// Row sums of a valid trust matrix may differ from 1 by the stochastic
// tolerance, so states may leave [0, 1] by that much before clamping.
constexpr double kContainmentSlack = 1e-8;

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

void require_probabilities(const Eigen::VectorXd& x, const char* what) {
  if (!x.allFinite() || (x.array() < 0.0).any() || (x.array() > 1.0).any()) {
    throw PreconditionViolation(std::string(what) + ": probabilities must lie in [0, 1]");
  }
}

// Sums over replicas for one recorded step.
struct StepAccumulator {
  Eigen::VectorXd above, middle, sum_x, sum_prod_sq;
  double sum_s = 0.0, sum_ds = 0.0, sum_ds2 = 0.0, sum_ds4 = 0.0;

  explicit StepAccumulator(Eigen::Index k)
      : above(Eigen::VectorXd::Zero(k)),
        middle(Eigen::VectorXd::Zero(k)),
        sum_x(Eigen::VectorXd::Zero(k)),
        sum_prod_sq(Eigen::VectorXd::Zero(k)) {}

  void add(const Eigen::VectorXd& x, double eps, bool has_s, double s, double ds) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double v = x[k];
      if (v > eps) above[k] += 1.0;
      if (v > eps && v < 1.0 - eps) middle[k] += 1.0;
      const double prod = v * (1.0 - v);
      sum_prod_sq[k] += prod * prod;
    }
    sum_x += x;
    if (has_s) {
      const double d2 = ds * ds;
      sum_s += s;
      sum_ds += ds;
      sum_ds2 += d2;
      sum_ds4 += d2 * d2;
    }
  }

  void merge(const StepAccumulator& o) {
    above += o.above;
    middle += o.middle;
    sum_x += o.sum_x;
    sum_prod_sq += o.sum_prod_sq;
    sum_s += o.sum_s;
    sum_ds += o.sum_ds;
    sum_ds2 += o.sum_ds2;
    sum_ds4 += o.sum_ds4;
  }
};

using Accumulator = std::vector<StepAccumulator>;

Accumulator make_accumulator(std::size_t steps, std::size_t k) {
  return Accumulator(steps, StepAccumulator(static_cast<Eigen::Index>(k)));
}

void accumulate(Accumulator& acc, const ReplicaTrace& trace, double eps) {
  if (trace.steps.size() != acc.size()) {
    throw DimensionMismatch("trace recording schedules differ across replicas");
  }
  const bool has_s = !trace.s.empty();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i].add(trace.states[i], eps, has_s, has_s ? trace.s[i] : 0.0,
               has_s ? trace.ds[i] : 0.0);
  }
}

BatchSummary finish(const Accumulator& acc, const std::vector<std::size_t>& steps,
                    std::size_t k, std::size_t replicas, double eps, bool has_s,
                    std::optional<std::size_t> role_agent) {
  BatchSummary out;
  out.agents = k;
  out.replicas = replicas;
  out.eps = eps;
  out.has_s = has_s;
  out.role_agent = role_agent;
  const double n = static_cast<double>(replicas);
  out.steps.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const auto& a = acc[i];
    StepStats s;
    s.n = steps[i];
    s.above_eps = a.above / n;
    s.middle = a.middle / n;
    s.mean_x = a.sum_x / n;
    s.prod_sq = a.sum_prod_sq / n;
    if (has_s) {
      s.s_mean = a.sum_s / n;
      s.ds_mean = a.sum_ds / n;
      s.ds_abs2 = a.sum_ds2 / n;
      s.ds_abs4 = a.sum_ds4 / n;
      s.ds_var = replicas > 1
                     ? std::max(0.0, (a.sum_ds2 - a.sum_ds * a.sum_ds / n) / (n - 1.0))
                     : 0.0;
    }
    out.steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace

double DriftLaw::operator()(std::size_t n) const {
  const double step = static_cast<double>(n);
  const double f = kind == Kind::kPower ? scale / std::pow(step + 1.0, rate)
                                        : scale * std::pow(rate, step);
  return std::clamp(f, 0.0, 1.0);
}

void DriftLaw::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ValidationError("drift law scale must be finite and >= 0");
  }
  if (kind == Kind::kPower && !(rate > 0.0)) {
    throw ValidationError("power drift law needs exponent p > 0 so that f[n] -> 0");
  }
  if (kind == Kind::kExponential && !(rate >= 0.0 && rate < 1.0)) {
    throw ValidationError("exponential drift law needs 0 <= gamma < 1 so that f[n] -> 0");
  }
}

void validate(const SimConfig& cfg, std::size_t k, bool has_stubborn) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ValidationError("alpha must lie strictly inside (0, 1)");
  }
  if (cfg.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (cfg.replicas < 1) throw ValidationError("replicas must be >= 1");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw ValidationError("eps must lie in (0, 0.5)");
  if (cfg.role.kind != RoleKind::kNone) {
    if (!has_stubborn) {
      throw ValidationError("stubborn/drifting role needs a designated agent with the unit row");
    }
    if (cfg.role.agent != 0) {
      throw ValidationError("role agent must be the relabeled index 0");
    }
  }
  if (cfg.role.kind == RoleKind::kDrifting) {
    if (!cfg.role.drift) throw ValidationError("drifting role needs a drift law");
    cfg.role.drift->validate();
  }
  switch (cfg.init.kind) {
    case InitSpec::Kind::kConstant:
      if (!(cfg.init.value >= 0.0 && cfg.init.value <= 1.0)) {
        throw ValidationError("constant initial probability must lie in [0, 1]");
      }
      break;
    case InitSpec::Kind::kExplicit:
      if (cfg.init.values.size() != k) {
        throw ValidationError("explicit initial vector needs " + std::to_string(k) +
                              " entries");
      }
      for (double v : cfg.init.values) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ValidationError("explicit initial probabilities must lie in [0, 1]");
        }
      }
      break;
    case InitSpec::Kind::kUniform:
      break;
  }
}

std::vector<std::size_t> recording_steps(std::size_t horizon) {
  std::vector<std::size_t> steps;
  const std::size_t full = std::min(horizon, kFullRecordSteps);
  steps.reserve(full + 1);
  for (std::size_t n = 0; n <= full; ++n) steps.push_back(n);
  std::size_t n = full;
  while (n < horizon) {
    n = std::max(n + 1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * 1.01)));
    steps.push_back(std::min(n, horizon));
  }
  return steps;
}

std::vector<std::size_t> BatchSummary::ordinary_agents() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < agents; ++k) {
    if (!role_agent || *role_agent != k) out.push_back(k);
  }
  return out;
}

Eigen::VectorXd ra_step(const TrustMatrix& trust, const Eigen::VectorXd& x,
                        double alpha, const Eigen::VectorXd& actions) {
  const auto k = static_cast<Eigen::Index>(trust.size());
  if (x.size() != k || actions.size() != k) {
    throw DimensionMismatch("ra_step: expected vectors of size " + std::to_string(k));
  }
  require_probabilities(x, "ra_step");
  if (!std::all_of(actions.data(), actions.data() + k, is_binary)) {
    throw PreconditionViolation("ra_step: actions must be 0 or 1");
  }
  Eigen::VectorXd next = (1.0 - alpha) * x + alpha * (trust.weights() * actions);
  return next.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::VectorXd draw_actions(const Eigen::VectorXd& x, const AgentRoleSpec& role,
                             std::size_t n, const CounterRng& rng) {
  Eigen::VectorXd a(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    double p = x[k];
    if (role.kind != RoleKind::kNone && idx == role.agent) {
      p = role.kind == RoleKind::kStubborn ? 0.0 : (*role.drift)(n);
    }
    a[k] = rng.bernoulli(p, CounterRng::Domain::kAction, n, idx);
  }
  return a;
}

RaModel::RaModel(TrustMatrix trust, SimConfig cfg)
    : trust_(std::move(trust)), cfg_(std::move(cfg)) {
  validate(cfg_, trust_.size(), trust_.has_stubborn());
  const auto k = static_cast<Eigen::Index>(trust_.size());
  if (cfg_.role.kind != RoleKind::kNone) {
    partition_ = opdyn::partition(trust_);
    s_weights_ = Eigen::VectorXd::Zero(k);
    s_weights_.tail(k - 1) = partition_->psi;
  } else if (check_irreducible(trust_.weights())) {
    s_weights_ = spectral_radius_perron(trust_.weights()).left_vector;
  }
  schedule_ = recording_steps(cfg_.horizon);
}

Eigen::VectorXd RaModel::initial_state(std::size_t replica_id) const {
  const auto k = static_cast<Eigen::Index>(trust_.size());
  const CounterRng rng(cfg_.seed, replica_id);
  Eigen::VectorXd x(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    switch (cfg_.init.kind) {
      case InitSpec::Kind::kConstant:
        x[i] = cfg_.init.value;
        break;
      case InitSpec::Kind::kUniform:
        x[i] = rng.uniform(CounterRng::Domain::kInitial, 0, static_cast<std::size_t>(i));
        break;
      case InitSpec::Kind::kExplicit:
        x[i] = cfg_.init.values[static_cast<std::size_t>(i)];
        break;
    }
  }
  if (cfg_.role.kind == RoleKind::kStubborn) x[0] = 0.0;
  if (cfg_.role.kind == RoleKind::kDrifting) x[0] = (*cfg_.role.drift)(0);
  return x;
}

ReplicaTrace RaModel::run_replica(std::size_t replica_id) const {
  const CounterRng rng(cfg_.seed, replica_id);
  const auto& t = trust_.weights();
  const double alpha = cfg_.alpha;
  const bool has_s = s_weights_.size() > 0;

  ReplicaTrace trace;
  trace.replica_id = replica_id;
  trace.steps = schedule_;
  trace.states.reserve(schedule_.size());
  if (has_s) {
    trace.s.reserve(schedule_.size());
    trace.ds.reserve(schedule_.size());
  }

  Eigen::VectorXd x = initial_state(replica_id);
  double s_prev = has_s ? s_weights_.dot(x) : 0.0;
  std::size_t next_record = 0;
  Eigen::VectorXd actions;
  for (std::size_t n = 0;; ++n) {
    const double s = has_s ? s_weights_.dot(x) : 0.0;
    const bool recorded = next_record < schedule_.size() && schedule_[next_record] == n;
    if (n == cfg_.horizon) {
      if (recorded) {
        trace.states.push_back(x);
        if (has_s) {
          trace.s.push_back(s);
          trace.ds.push_back(n == 0 ? 0.0 : s - s_prev);
        }
      }
      break;
    }
    actions = draw_actions(x, cfg_.role, n, rng);
    if (recorded) {
      trace.states.push_back(x);
      if (cfg_.record_actions) trace.actions.push_back(actions);
      if (has_s) {
        trace.s.push_back(s);
        trace.ds.push_back(n == 0 ? 0.0 : s - s_prev);
      }
      ++next_record;
    }
    s_prev = s;

    x = (1.0 - alpha) * x + alpha * (t * actions);
    if (cfg_.role.kind == RoleKind::kDrifting) x[0] = (*cfg_.role.drift)(n + 1);
    if ((x.array() < -kContainmentSlack).any() || (x.array() > 1.0 + kContainmentSlack).any()) {
      throw PreconditionViolation("state left [0, 1] at step " + std::to_string(n + 1));
    }
    x = x.cwiseMax(0.0).cwiseMin(1.0);
  }
  return trace;
}

BatchSummary RaModel::run_batch(std::size_t jobs) const {
  const std::size_t replicas = cfg_.replicas;
  const std::size_t chunks = (replicas + kReductionChunk - 1) / kReductionChunk;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, chunks);

  const std::size_t k = trust_.size();
  std::vector<Accumulator> partial(chunks);
  std::atomic<std::size_t> next_chunk{0};
  std::mutex failure_mutex;
  std::optional<std::pair<std::size_t, std::string>> failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= chunks) return;
      Accumulator acc = make_accumulator(schedule_.size(), k);
      const std::size_t end = std::min(replicas, (c + 1) * kReductionChunk);
      for (std::size_t id = c * kReductionChunk; id < end; ++id) {
        try {
          accumulate(acc, run_replica(id), cfg_.eps);
        } catch (const std::exception& e) {
          std::lock_guard lock(failure_mutex);
          if (!failure || id < failure->first) failure.emplace(id, e.what());
          break;
        }
      }
      partial[c] = std::move(acc);
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  if (failure) {
    throw ReplicaFailure("replica " + std::to_string(failure->first) +
                             " failed: " + failure->second,
                         failure->first);
  }

  Accumulator total = make_accumulator(schedule_.size(), k);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(acc[i]);
  }
  std::optional<std::size_t> role_agent;
  if (cfg_.role.kind != RoleKind::kNone) role_agent = cfg_.role.agent;
  return finish(total, schedule_, k, replicas, cfg_.eps, s_weights_.size() > 0, role_agent);
}

BatchSummary summarize_traces(std::span<const ReplicaTrace> traces, double eps,
                              std::optional<std::size_t> role_agent) {
  if (traces.empty()) throw PreconditionViolation("summarize_traces: no traces");
  const auto& first = traces.front();
  if (first.states.empty()) throw PreconditionViolation("summarize_traces: empty trace");
  const auto k = static_cast<std::size_t>(first.states.front().size());
  const bool has_s = !first.s.empty();

  Accumulator total = make_accumulator(first.steps.size(), k);
  for (std::size_t c = 0; c * kReductionChunk < traces.size(); ++c) {
    Accumulator acc = make_accumulator(first.steps.size(), k);
    const std::size_t end = std::min(traces.size(), (c + 1) * kReductionChunk);
    for (std::size_t id = c * kReductionChunk; id < end; ++id) {
      if (traces[id].steps != first.steps || traces[id].s.empty() != !has_s) {
        throw DimensionMismatch("summarize_traces: traces have different layouts");
      }
      accumulate(acc, traces[id], eps);
    }
    for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(acc[i]);
  }
  return finish(total, first.steps, k, traces.size(), eps, has_s, role_agent);
}

ReplicaTrace run_replica(const TrustMatrix& trust, const SimConfig& cfg,
                         std::size_t replica_id) {
  return RaModel(trust, cfg).run_replica(replica_id);
}

BatchSummary run_batch(const TrustMatrix& trust, const SimConfig& cfg, std::size_t jobs) {
  return RaModel(trust, cfg).run_batch(jobs);
}

void write_batch_csv(std::ostream& out, const BatchSummary& summary) {
  using detail::format_double;
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  out << "n,stat_name,agent,value\n";
  auto per_agent = [&](std::size_t n, const char* name, const Eigen::VectorXd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      out << n << ',' << name << ',' << k << ',' << format_double(v[k]) << "\n";
    }
  };
  auto scalar = [&](std::size_t n, const char* name, double v) {
    out << n << ',' << name << ",," << format_double(v) << "\n";
  };
  for (const auto& s : summary.steps) {
    per_agent(s.n, "above_eps", s.above_eps);
    per_agent(s.n, "middle", s.middle);
    per_agent(s.n, "mean_x", s.mean_x);
    per_agent(s.n, "prod_sq", s.prod_sq);
    if (summary.has_s) {
      scalar(s.n, "s_mean", s.s_mean);
      scalar(s.n, "ds_mean", s.ds_mean);
      scalar(s.n, "ds_var", s.ds_var);
      scalar(s.n, "ds_abs2", s.ds_abs2);
      scalar(s.n, "ds_abs4", s.ds_abs4);
    }
  }
}

void write_trace_csv(std::ostream& out, const ReplicaTrace& trace) {
  using detail::format_double;
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  out << "n,S,dS";
  const auto k = trace.states.empty() ? 0 : trace.states.front().size();
  for (Eigen::Index i = 0; i < k; ++i) out << ",x_" << i;
  out << "\n";
  for (std::size_t r = 0; r < trace.steps.size(); ++r) {
    out << trace.steps[r] << ',';
    if (!trace.s.empty()) out << format_double(trace.s[r]) << ',' << format_double(trace.ds[r]);
    else out << ',';
    for (Eigen::Index i = 0; i < k; ++i) out << ',' << format_double(trace.states[r][i]);
    out << "\n";
  }
}

void to_json(nlohmann::json& j, const BatchSummary& summary) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : summary.steps) {
    nlohmann::json row{{"n", s.n},
                       {"above_eps", vec(s.above_eps)},
                       {"middle", vec(s.middle)},
                       {"mean_x", vec(s.mean_x)},
                       {"prod_sq", vec(s.prod_sq)}};
    if (summary.has_s) {
      row["s_mean"] = s.s_mean;
      row["ds_mean"] = s.ds_mean;
      row["ds_var"] = s.ds_var;
      row["ds_abs2"] = s.ds_abs2;
      row["ds_abs4"] = s.ds_abs4;
    }
    steps.push_back(std::move(row));
  }
  j = nlohmann::json{{"agents", summary.agents},
                     {"replicas", summary.replicas},
                     {"eps", summary.eps},
                     {"has_s", summary.has_s},
                     {"steps", std::move(steps)}};
  if (summary.role_agent) j["role_agent"] = *summary.role_agent;
  else j["role_agent"] = nullptr;
}

}  // namespace opdyn
