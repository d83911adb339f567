// Pilot calibration of simulation horizons.
//
// Runs an RA config under a pilot seed at doubling horizons until the
// terminal-window herding statistics clear their thresholds with a margin,
// then writes the horizon to a JSON fixture. The acceptance suite uses the
// fixture with its own, different seed.

#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "opdyn/diagnostics.hpp"

namespace {

struct Probe {
  bool ok = true;
  double worst_above = 0.0;
  double worst_middle = 0.0;
  double worst_decay_ratio = 0.0;  // terminal / initial E[(X(1-X))^2]
  double worst_prod_sq = 0.0;
  double proxy_bound = 0.0;
};

Probe evaluate(const opdyn::BatchSummary& batch, double eps, double delta, double margin) {
  Probe p;
  const auto tails = opdyn::check_lemma2_tails(batch, eps, delta);
  for (const auto& a : tails.agents) {
    p.worst_above = std::max(p.worst_above, a.terminal_above);
    p.worst_middle = std::max(p.worst_middle, a.terminal_middle);
    const double ratio = a.initial_prod_sq > 0.0 ? a.terminal_prod_sq / a.initial_prod_sq : 0.0;
    p.worst_decay_ratio = std::max(p.worst_decay_ratio, ratio);
    p.worst_prod_sq = std::max(p.worst_prod_sq, a.terminal_prod_sq);
  }
  p.proxy_bound = tails.proxy_bound;
  p.ok = p.worst_above < margin * delta && p.worst_middle < margin * delta &&
         p.worst_decay_ratio < margin && p.worst_prod_sq < margin * p.proxy_bound;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate RA horizons on a pilot seed"};
  std::string config, out;
  std::uint64_t seed = 0;
  std::size_t start = 250, max_horizon = 2'000'000;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  double margin = 0.5;
  app.add_option("--config", config, "RA experiment config")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Pilot seed (use one the acceptance run does not use)")
      ->required();
  app.add_option("--out", out, "Fixture to write")->required();
  app.add_option("--start", start, "First horizon tried");
  app.add_option("--max", max_horizon, "Give up beyond this horizon");
  app.add_option("--margin", margin, "Required fraction of each threshold")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--jobs", jobs, "Worker threads");
  CLI11_PARSE(app, argc, argv);

  opdyn::cli::ExperimentConfig cfg;
  try {
    opdyn::cli::Overrides o;
    o.seed = seed;
    cfg = opdyn::cli::load_config(config, o);
  } catch (const opdyn::cli::ConfigInvalid& e) {
    for (const auto& i : e.issues()) std::cerr << i.code << ": " << i.message << "\n";
    return 2;
  }
  if (cfg.model != opdyn::cli::ModelKind::kRa) {
    std::cerr << "pilot calibration needs an ra config\n";
    return 2;
  }

  nlohmann::json probes = nlohmann::json::array();
  for (std::size_t h = start; h <= max_horizon; h *= 2) {
    auto sim = cfg.sim;
    sim.horizon = h;
    const auto batch = opdyn::run_batch(*cfg.network, sim, jobs);
    const auto p = evaluate(batch, sim.eps, opdyn::kTailDelta, margin);
    probes.push_back({{"horizon", h},
                      {"worst_above_eps", p.worst_above},
                      {"worst_middle", p.worst_middle},
                      {"worst_decay_ratio", p.worst_decay_ratio},
                      {"worst_prod_sq", p.worst_prod_sq},
                      {"proxy_bound", p.proxy_bound},
                      {"ok", p.ok}});
    std::cout << "horizon " << h << ": above " << p.worst_above << ", middle " << p.worst_middle
              << ", decay " << p.worst_decay_ratio
              << ", prod_sq " << p.worst_prod_sq << "/" << p.proxy_bound << (p.ok ? "  ok" : "") << std::endl;
    if (p.ok) {
      const nlohmann::json fixture{{"config", std::filesystem::path(config).filename().string()},
                                   {"pilot_seed", seed},
                                   {"margin", margin},
                                   {"replicas", sim.replicas},
                                   {"horizon", h},
                                   {"probes", probes}};
      std::ofstream(out) << fixture.dump(2) << "\n";
      return 0;
    }
  }
  std::cerr << "no horizon up to " << max_horizon << " met the thresholds\n";
  return 1;
}
