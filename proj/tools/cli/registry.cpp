#include "registry.hpp"

#include <algorithm>
#include <cmath>

#include "opdyn/diagnostics.hpp"
#include "opdyn/errors.hpp"
#include "opdyn/spectral.hpp"

namespace opdyn::cli {
namespace {

using nlohmann::json;

// Stream ids for diagnostic sampling; disjoint from replica ids in practice
// because they live in a separate substream.
constexpr std::uint64_t kDiagnosticStream = 0xd1a9;

template <class T>
T param(const json& params, const char* key, T fallback) {
  return params.contains(key) ? params.at(key).get<T>() : fallback;
}

json assertions_pass(const std::vector<Assertion>& as) {
  json out = json::array();
  for (const auto& a : as) out.push_back(a);
  return out;
}

CounterRng diagnostic_rng(const RunContext& ctx, std::uint64_t which) {
  return CounterRng(ctx.config.seed.value_or(0), 0).substream(kDiagnosticStream + which);
}

// Floating-point allowance on top of the geometric tail bound, which
// underflows far below the round-off of the solve itself.
constexpr double kNeumannRoundoff = 1e-13;

json run_lemma1(const RunContext& ctx, const json&) {
  const auto report = verify_lemma1_rowsums(ctx.partition->q);
  json j = report;
  j["assertions"] = assertions_pass({
      {"rows_non_increasing", report.rows_non_increasing, report.max_increase, 0.0},
      {"final_rows_below_one", report.final_rows_below_one, report.row_sums.back().maxCoeff(),
       1.0},
      {"rho_below_one", report.rho_below_one, report.rho, 1.0},
  });
  return j;
}

json run_neumann(const RunContext& ctx, const json& params) {
  const auto terms = param<std::size_t>(params, "terms", 200);
  const auto& p = *ctx.partition;
  const auto solve = neumann_limit(p.q, p.r);
  const auto series = truncated_neumann_series(p.q, p.r, terms);
  const double gap = (series - solve.solution).cwiseAbs().maxCoeff();
  const double bound =
      std::pow(p.lambda, static_cast<double>(terms)) / (1.0 - p.lambda) + kNeumannRoundoff;
  const Assertion a{"series_within_tail_bound", gap <= bound, gap, bound};
  return json{{"terms", terms},
              {"rho", p.lambda},
              {"solver_residual", solve.residual},
              {"max_gap", gap},
              {"bound", bound},
              {"assertions", assertions_pass({a})},
              {"pass", a.passed}};
}

json run_supermartingale(const RunContext& ctx, const json& params) {
  const auto count =
      std::min(param<std::size_t>(params, "replicas", 4), ctx.config.sim.replicas);
  json per_replica = json::array();
  double max_residual = 0.0;
  std::size_t worst_replica = 0, worst_step = 0;
  bool pass = true;
  std::vector<Assertion> as;
  for (std::size_t id = 0; id < count; ++id) {
    const auto report =
        check_supermartingale(*ctx.partition, ctx.ra->run_replica(id), ctx.config.sim.alpha);
    if (id == 0 || report.max_residual > max_residual) {
      max_residual = report.max_residual;
      worst_replica = id;
      worst_step = report.worst_step;
    }
    pass = pass && report.passed();
    json r = report;
    r["replica"] = id;
    per_replica.push_back(std::move(r));
  }
  as.push_back({"max_residual", max_residual <= kIdentityTolerance, max_residual,
                kIdentityTolerance});
  return json{{"replicas_checked", count},
              {"max_residual", max_residual},
              {"worst_replica", worst_replica},
              {"worst_step", worst_step},
              {"per_replica", per_replica},
              {"assertions", assertions_pass(as)},
              {"pass", pass}};
}

json run_conditional_variance(const RunContext& ctx, const json& params) {
  const auto points = param<std::size_t>(params, "points", 5);
  const auto samples = param<std::size_t>(params, "samples", 100'000);
  const auto& p = *ctx.partition;
  const auto m = static_cast<Eigen::Index>(p.ordinary_count());
  const auto rng = diagnostic_rng(ctx, 1);
  json list = json::array();
  std::vector<Assertion> as;
  bool pass = true;
  for (std::size_t i = 0; i < points; ++i) {
    Eigen::VectorXd y(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      y[k] = rng.uniform(CounterRng::Domain::kAux, i, static_cast<std::size_t>(k));
    }
    const auto report = check_conditional_variance(p, y, ctx.config.sim.alpha, samples,
                                                   rng.substream(i));
    pass = pass && report.passed();
    for (auto a : report.assertions()) {
      a.name += "[" + std::to_string(i) + "]";
      as.push_back(std::move(a));
    }
    json r = report;
    r["y"] = std::vector<double>(y.data(), y.data() + y.size());
    list.push_back(std::move(r));
  }
  return json{{"points", list}, {"assertions", assertions_pass(as)}, {"pass", pass}};
}

json run_moment_decay(const RunContext& ctx, const json& params) {
  return check_ds_moment_decay(*ctx.batch, param<int>(params, "order", 2),
                               param<double>(params, "threshold", kDefaultMomentThreshold));
}

json run_lemma2_tails(const RunContext& ctx, const json& params) {
  return check_lemma2_tails(*ctx.batch, ctx.config.sim.eps,
                            param<double>(params, "delta", kTailDelta));
}

json run_layer_herding(const RunContext& ctx, const json& params) {
  return check_layer_herding(*ctx.batch, compute_v_layers(*ctx.partition), ctx.config.sim.eps,
                             param<double>(params, "delta", kTailDelta));
}

json run_counterexample(const RunContext&, const json& params) {
  return check_counterexample(counterexample_sequence(param<std::size_t>(params, "horizon", 100)));
}

json run_corrected_variance(const RunContext& ctx, const json& params) {
  const auto points = param<std::size_t>(params, "points", 3);
  const auto samples = param<std::size_t>(params, "samples", 100'000);
  const auto& t = *ctx.config.network;
  const auto pi = spectral_radius_perron(t.weights()).left_vector;
  const auto k = static_cast<Eigen::Index>(t.size());
  const auto rng = diagnostic_rng(ctx, 2);
  json list = json::array();
  std::vector<Assertion> as;
  bool pass = true;
  for (std::size_t i = 0; i < points; ++i) {
    Eigen::VectorXd x(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      x[j] = rng.uniform(CounterRng::Domain::kAux, i, static_cast<std::size_t>(j));
    }
    const auto report = corrected_variance_identity(t, pi, x, ctx.config.sim.alpha, samples,
                                                    rng.substream(i));
    pass = pass && report.passed();
    for (auto a : report.assertions()) {
      a.name += "[" + std::to_string(i) + "]";
      as.push_back(std::move(a));
    }
    json r = report;
    r["x"] = std::vector<double>(x.data(), x.data() + x.size());
    list.push_back(std::move(r));
  }
  return json{{"pi", std::vector<double>(pi.data(), pi.data() + pi.size())},
              {"points", list},
              {"assertions", assertions_pass(as)},
              {"pass", pass}};
}

}  // namespace

const std::vector<DiagnosticInfo>& diagnostic_registry() {
  static const std::vector<DiagnosticInfo> registry{
      {"lemma1_rowsums", true, true, Needs::kStubbornNetwork, {}, run_lemma1},
      {"neumann_series", true, true, Needs::kStubbornNetwork, {"terms"}, run_neumann},
      {"supermartingale", false, true, Needs::kRoleAgent, {"replicas"}, run_supermartingale},
      {"conditional_variance", false, true, Needs::kRoleAgent, {"points", "samples"},
       run_conditional_variance},
      {"moment_decay", false, true, Needs::kRoleAgent, {"order", "threshold"}, run_moment_decay},
      {"lemma2_tails", false, true, Needs::kRoleAgent, {"delta"}, run_lemma2_tails},
      {"layer_herding", false, true, Needs::kRoleAgent, {"delta"}, run_layer_herding},
      {"counterexample", true, true, Needs::kNothing, {"horizon"}, run_counterexample},
      {"corrected_variance", false, true, Needs::kNoRole, {"points", "samples"},
       run_corrected_variance},
  };
  return registry;
}

const DiagnosticInfo* find_diagnostic(std::string_view name) {
  const auto& r = diagnostic_registry();
  const auto it = std::find_if(r.begin(), r.end(), [&](const auto& d) { return d.name == name; });
  return it == r.end() ? nullptr : &*it;
}

}  // namespace opdyn::cli
