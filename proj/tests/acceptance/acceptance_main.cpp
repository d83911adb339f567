// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "opdyn/degroot.hpp"
#include "opdyn/diagnostics.hpp"
#include "opdyn/errors.hpp"
#include "opdyn/graph.hpp"
#include "opdyn/ra_sim.hpp"
#include "opdyn/spectral.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
namespace t = opdyn::testing;
using namespace opdyn;

namespace {

const fs::path kSource = OPDYN_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Random instances shared by several criteria, generated once.
struct Suite {
  std::vector<TrustMatrix> consensus;       // one ordinary agent trusts the stubborn one
  std::vector<Eigen::MatrixXd> substochastic;
};

Suite build_suite() {
  Suite s;
  t::Rng rng(20261016);
  for (int i = 0; i < 50; ++i) {
    const auto k = t::uniform_index(rng, 3, 12);
    s.consensus.push_back(t::random_stubborn_network(k, 1, rng));
  }
  for (int i = 0; i < 200; ++i) {
    s.substochastic.push_back(t::random_deficient_substochastic(t::uniform_index(rng, 1, 8), rng));
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome consensus(const Suite& s) {
  Clock clock;
  std::size_t ok = 0;
  double worst_err = 0.0, worst_gap = -1.0;
  for (std::size_t i = 0; i < s.consensus.size(); ++i) {
    const auto& net = s.consensus[i];
    try {
      const auto x0 = random_opinions(net.size(), 1000 + i);
      const auto run = degroot_run(net, x0);
      worst_err = std::max(worst_err, run.final_error);
      worst_gap = std::max(worst_gap, run.rate_estimate - run.rho);
      if (run.final_error <= 1e-10 && run.rate_ok) ++ok;
    } catch (const Error& e) {
      std::fprintf(stderr, "criterion 1, network %zu: %s\n", i, e.what());
    }
  }
  const double secs = clock.seconds();
  return {ok == s.consensus.size() && secs < 5.0,
          std::to_string(ok) + "/" + std::to_string(s.consensus.size()) +
              " networks, max err " + fmt("%.3g", worst_err) + ", max rate - rho " +
              fmt("%.3g", worst_gap) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome lemma1(const Suite& s) {
  Clock clock;
  std::size_t ok = 0;
  double worst_rho_gap = 0.0;
  for (const auto& a : s.substochastic) {
    const auto report = verify_lemma1_rowsums(a);
    const double gap = std::abs(report.rho - t::dense_spectral_radius(a));
    worst_rho_gap = std::max(worst_rho_gap, gap);
    if (report.passed() && report.rho < 1.0 - 1e-12 && gap <= 1e-8) ++ok;
  }
  const double secs = clock.seconds();
  return {ok == s.substochastic.size() && secs < 5.0,
          std::to_string(ok) + "/" + std::to_string(s.substochastic.size()) +
              " matrices, max |rho - oracle| " + fmt("%.3g", worst_rho_gap) + ", " +
              fmt("%.2f", secs) + " s"};
}

// Floating-point allowance for the series/solve comparison. The geometric
// tail bound underflows to far below double round-off when rho is small.
constexpr double kRoundoff = 1e-13;

Outcome neumann(const Suite& s) {
  std::size_t ok = 0, strict = 0, total = 0;
  auto check = [&](const Eigen::MatrixXd& q, const Eigen::VectorXd& r) {
    ++total;
    const double rho = spectral_radius_perron(q).rho;
    const double tail = std::pow(rho, 200.0) / (1.0 - rho);
    const double gap =
        (truncated_neumann_series(q, r, 200) - neumann_limit(q, r).solution).cwiseAbs().maxCoeff();
    if (gap <= tail) ++strict;
    if (gap <= tail + kRoundoff) ++ok;
  };
  for (const auto& a : s.substochastic) {
    check(a, Eigen::VectorXd::Ones(a.rows()) - row_sums(a));
  }
  for (const auto& net : s.consensus) {
    const auto p = partition(net);
    check(p.q, p.r);
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " instances within tail bound + " + fmt("%.0e", kRoundoff) +
                           " round-off (" + std::to_string(strict) + " within the bare bound)"};
}

Outcome supermartingale(const Suite& s) {
  double worst = 0.0;
  std::size_t traces = 0, steps = 0;
  bool decreasing = true;
  auto check = [&](const TrustMatrix& net, const SimConfig& cfg, std::size_t count) {
    const RaModel model(net, cfg);
    const auto& p = *model.partition();
    for (std::size_t id = 0; id < count; ++id) {
      const auto report = check_supermartingale(p, model.run_replica(id), cfg.alpha);
      worst = std::max(worst, report.max_residual);
      decreasing = decreasing && report.strict_decrease;
      ++traces;
      steps += report.steps.size();
    }
  };
  t::Rng rng(4);
  for (std::size_t i = 0; i < s.consensus.size(); ++i) {
    SimConfig cfg;
    cfg.alpha = t::uniform(rng, 0.05, 0.95);
    cfg.horizon = 500;
    cfg.replicas = 2;
    cfg.seed = 400 + i;
    cfg.role.kind = RoleKind::kStubborn;
    check(s.consensus[i], cfg, 2);
  }
  for (const char* name : {"ra_stubborn_k5.json", "ra_drifting_k5.json"}) {
    const auto c = cli::load_config(kSource / "configs" / name);
    check(*c.network, c.sim, 4);
  }
  return {worst <= 1e-12 && decreasing,
          std::to_string(traces) + " traces, " + std::to_string(steps) +
              " steps, max residual " + fmt("%.3g", worst)};
}

Outcome conditional_variance(const Suite&) {
  Clock clock;
  t::Rng rng(5);
  std::size_t ok = 0;
  double worst_z = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto k = t::uniform_index(rng, 2, 8);
    const auto net = t::random_stubborn_network(k, t::uniform_index(rng, 1, k - 1), rng);
    const auto p = partition(net);
    Eigen::VectorXd y(static_cast<Eigen::Index>(k - 1));
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      // Every fifth coordinate sits on the boundary.
      const auto roll = t::uniform_index(rng, 0, 9);
      y[j] = roll == 0 ? 0.0 : roll == 1 ? 1.0 : t::uniform(rng, 0.0, 1.0);
    }
    const double alpha = t::uniform(rng, 0.05, 0.95);
    const auto r = check_conditional_variance(p, y, alpha, 100'000, CounterRng(55, i));
    worst_z = std::max(worst_z, r.z);
    if (r.z <= kEqualitySigmas) ++ok;
  }
  const double secs = clock.seconds();
  return {ok == 20 && secs < 30.0, std::to_string(ok) + "/20 triples, max z " +
                                       fmt("%.2f", worst_z) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome herding(const char* config, const char* fixture) {
  Clock clock;
  const auto fx = nlohmann::json::parse(slurp(kSource / "tests/fixtures" / fixture));
  auto c = cli::load_config(kSource / "configs" / config);
  if (fx.at("config").get<std::string>() != config) return {false, "fixture is for another config"};
  c.sim.horizon = fx.at("horizon").get<std::size_t>();
  if (c.seed == fx.at("pilot_seed").get<std::uint64_t>()) {
    return {false, "acceptance seed equals the pilot seed"};
  }
  const auto batch = RaModel(*c.network, c.sim).run_batch();
  const auto tails = check_lemma2_tails(batch, c.sim.eps);
  bool ok = true;
  double above = 0.0, middle = 0.0, ratio = 0.0;
  for (const auto& a : tails.agents) {
    above = std::max(above, a.terminal_above);
    middle = std::max(middle, a.terminal_middle);
    ratio = std::max(ratio, a.terminal_prod_sq / a.initial_prod_sq);
    ok = ok && a.terminal_above < 0.05 && a.terminal_middle < 0.05 &&
         a.terminal_prod_sq < a.initial_prod_sq;
  }
  const double secs = clock.seconds();
  return {ok && secs < 60.0,
          "horizon " + std::to_string(c.sim.horizon) + ", seed " + std::to_string(c.sim.seed) +
              ", max P(X>eps) " + fmt("%.4g", above) + ", max middle " + fmt("%.4g", middle) +
              ", max prod_sq ratio " + fmt("%.3g", ratio) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome layers(const Suite& s) {
  std::size_t ok = 0, total = 0;
  auto exhaustive = [&](const TrustMatrix& net) {
    ++total;
    const auto p = partition(net);
    const auto v = compute_v_layers(p);
    std::vector<int> seen(net.size(), 0);
    for (const auto& layer : v.layers) {
      for (auto a : layer) ++seen[a];
    }
    bool good = seen[0] == 0;
    for (std::size_t a = 1; a < net.size(); ++a) good = good && seen[a] == 1;
    if (good) ++ok;
  };
  for (const auto& net : s.consensus) exhaustive(net);
  t::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto k = t::uniform_index(rng, 2, 12);
    exhaustive(t::random_stubborn_network(k, t::uniform_index(rng, 1, k - 1), rng, 0.15));
  }
  bool ring_ok = true;
  for (std::size_t m : {4, 5}) {
    const auto ring = t::ring_network(m);
    exhaustive(ring);
    ring_ok = ring_ok && compute_v_layers(partition(ring)).layers == t::bfs_layers(ring.weights());
  }
  return {ok == total && ring_ok, std::to_string(ok) + "/" + std::to_string(total) +
                                      " instances disjoint and exhaustive, ring equals BFS: " +
                                      (ring_ok ? "yes" : "no")};
}

Outcome critique(const Suite&) {
  const auto ce = check_counterexample(counterexample_sequence(1000));
  t::Rng rng(9);
  std::size_t matched = 0;
  double worst_z = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto k = t::uniform_index(rng, 2, 6);
    const auto net = TrustMatrix::create(t::random_irreducible_stochastic(k, rng));
    const auto pi = spectral_radius_perron(net.weights()).left_vector;
    Eigen::VectorXd x(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = t::uniform(rng, 0.0, 1.0);
    const auto r = corrected_variance_identity(net, pi, x, t::uniform(rng, 0.1, 0.9), 100'000,
                                               CounterRng(99, i));
    worst_z = std::max(worst_z, r.z);
    if (r.corrected_matches()) ++matched;
  }
  // Two agents averaging each other, started far from agreement.
  const auto pair = TrustMatrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  const auto u = corrected_variance_identity(pair, Eigen::Vector2d(0.5, 0.5),
                                             Eigen::Vector2d(0.98, 0.02), 0.5, 100'000,
                                             CounterRng(98, 0));
  return {ce.passed() && matched == 10 && u.unshifted_rejected(),
          "counterexample max product " + fmt("%g", ce.max_product) + ", oscillation " +
              fmt("%g", ce.oscillation) + "; corrected " + std::to_string(matched) +
              "/10, max z " + fmt("%.2f", worst_z) + "; unshifted z " +
              fmt("%.1f", u.unshifted_z)};
}

Outcome reproducibility(const Suite&) {
  const auto root = fs::temp_directory_path() / "opdyn_acceptance_repro";
  fs::remove_all(root);
  std::size_t identical = 0, total = 0;
  std::ostringstream sink;
  for (const char* name : {"beta_chain_degroot", "beta_chain_ra", "ra_stubborn_k5",
                           "ra_drifting_k5", "corrected_variance_k4"}) {
    ++total;
    bool same = true;
    for (std::size_t jobs : {1, 4}) {
      cli::Overrides o;
      o.out = root / name / std::to_string(jobs);
      cli::cmd_run(kSource / "configs" / (std::string(name) + ".json"), o, jobs, sink, sink);
    }
    for (const char* file : {"summary.json", "stats.csv"}) {
      const auto a = slurp(root / name / "1" / file);
      const auto b = slurp(root / name / "4" / file);
      same = same && !a.empty() && a == b;
    }
    if (same) ++identical;
  }
  fs::remove_all(root);
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " configs byte-identical with --jobs 1 and 4"};
}

}  // namespace

int main() {
  const Suite suite = build_suite();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"DeGroot consensus", [&] { return consensus(suite); }},
      {"Row-sum lemma", [&] { return lemma1(suite); }},
      {"Neumann identity", [&] { return neumann(suite); }},
      {"Super-martingale identity", [&] { return supermartingale(suite); }},
      {"Conditional variance", [&] { return conditional_variance(suite); }},
      {"Herding, stubborn agent",
       [] { return herding("ra_stubborn_k5.json", "pilot_stubborn_k5.json"); }},
      {"Herding, drifting agent",
       [] { return herding("ra_drifting_k5.json", "pilot_drifting_k5.json"); }},
      {"V-layer structure", [&] { return layers(suite); }},
      {"Counterexample, variance", [&] { return critique(suite); }},
      {"Reproducibility", [&] { return reproducibility(suite); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %2zu  %-26s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
