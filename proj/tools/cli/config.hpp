// Experiment configuration: one JSON file describing the network, the
// model, and the diagnostics to run. See README for the schema.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opdyn/degroot.hpp"
#include "opdyn/graph.hpp"
#include "opdyn/ra_sim.hpp"

namespace opdyn::cli {

enum class ModelKind { kDegroot, kRa };

struct DiagnosticSpec {
  std::string name;
  nlohmann::json params;  // object; unknown keys are rejected per diagnostic
};

struct DegrootSettings {
  // Initial opinions in source labeling; drawn from the seed when absent.
  std::optional<std::vector<double>> x0;
  DegrootOptions options;
};

struct OutputSettings {
  std::filesystem::path dir = "out";
  bool trace = false;
  std::size_t trace_replicas = 10;
};

struct ExperimentConfig {
  std::filesystem::path path;
  ModelKind model = ModelKind::kRa;
  std::optional<TrustMatrix> network;
  std::optional<std::uint64_t> seed;
  SimConfig sim;               // RA settings, init already in internal labeling
  DegrootSettings degroot;
  std::vector<DiagnosticSpec> diagnostics;
  OutputSettings output;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<std::filesystem::path> out;
  bool trace = false;
};

struct ConfigIssue {
  std::string code;
  std::string message;
};

/// Thrown when a config has one or more problems; carries all of them.
class ConfigInvalid : public std::runtime_error {
 public:
  explicit ConfigInvalid(std::vector<ConfigIssue> issues);
  ConfigInvalid(const std::string& code, const std::string& message)
      : ConfigInvalid(std::vector<ConfigIssue>{{code, message}}) {}
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses, applies overrides and validates. Relative paths inside the file
/// are resolved against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              const Overrides& overrides = {});

const char* to_string(ModelKind model);

}  // namespace opdyn::cli
