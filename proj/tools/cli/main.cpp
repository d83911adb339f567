#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace opdyn::cli;

  CLI::App app{"Opinion dynamics with stubborn and drifting agents"};
  app.require_subcommand(1);

  std::string config_path;
  std::string summary_path;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  Overrides overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  double eps = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the config seed");
    cmd->add_option("--eps", eps, "Override the tail threshold eps")
        ->check(CLI::Range(0.0, 0.5));
  };

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  add_common(validate);

  auto* run = app.add_subcommand("run", "Run the model and its diagnostics");
  add_common(run);
  run->add_option("--jobs", jobs, "Worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_flag("--trace", overrides.trace, "Dump per-replica traces");

  auto* report = app.add_subcommand("report", "Render a summary.json as a table");
  report->add_option("summary", summary_path, "Path to summary.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  auto apply = [&](CLI::App* cmd) {
    if (cmd->count("--seed")) overrides.seed = seed;
    if (cmd->count("--eps")) overrides.eps = eps;
  };

  try {
    if (*validate) {
      apply(validate);
      return cmd_validate(config_path, overrides, std::cout);
    }
    if (*run) {
      apply(run);
      if (!out_dir.empty()) overrides.out = out_dir;
      return cmd_run(config_path, overrides, jobs, std::cout, std::cerr);
    }
    return cmd_report(summary_path, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << error_list({{"InternalError", e.what()}}).dump(2) << "\n";
    return kExitConfigError;
  }
}
