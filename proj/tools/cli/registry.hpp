// Named diagnostics that a config may request.
#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "opdyn/degroot.hpp"
#include "opdyn/graph.hpp"
#include "opdyn/ra_sim.hpp"

namespace opdyn::cli {

struct RunContext {
  const ExperimentConfig& config;
  std::size_t jobs = 1;
  const RaModel* ra = nullptr;
  const BatchSummary* batch = nullptr;
  const DegrootRun* degroot = nullptr;
  const PartitionedTrust* partition = nullptr;  // null without a stubborn agent
};

enum class Needs {
  kNothing,
  kStubbornNetwork,  // a partition of T must exist
  kRoleAgent,        // RA run with a stubborn or drifting role
  kNoRole,           // RA run without a role agent, irreducible T
};

struct DiagnosticInfo {
  std::string_view name;
  bool degroot = false;
  bool ra = false;
  Needs needs = Needs::kNothing;
  std::vector<std::string_view> params;
  // Returns the report JSON; must contain "pass" and "assertions".
  nlohmann::json (*run)(const RunContext&, const nlohmann::json& params) = nullptr;
};

const std::vector<DiagnosticInfo>& diagnostic_registry();
const DiagnosticInfo* find_diagnostic(std::string_view name);

}  // namespace opdyn::cli
