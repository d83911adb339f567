#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace opdyn::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitAssertionFailure = 1;
inline constexpr int kExitConfigError = 2;

inline constexpr int kSummarySchemaVersion = 1;

/// Loads and checks the config without running; prints the network
/// structure. On failure prints {"status": "invalid", "errors": [...]} and
/// returns kExitConfigError.
int cmd_validate(const std::filesystem::path& config, const Overrides& overrides,
                 std::ostream& out);

/// Runs the model and the requested diagnostics, writing summary.json,
/// stats.csv and optional traces into the output directory.
int cmd_run(const std::filesystem::path& config, const Overrides& overrides, std::size_t jobs,
            std::ostream& out, std::ostream& err);

/// Renders a summary.json as a table. Never fails on assertion results.
int cmd_report(const std::filesystem::path& summary, std::ostream& out, std::ostream& err);

/// Table rendering used by cmd_report. Throws std::invalid_argument when
/// the summary does not have the expected shape.
std::string render_report(const nlohmann::json& summary);

/// Machine-readable error list.
nlohmann::json error_list(const std::vector<ConfigIssue>& issues);

}  // namespace opdyn::cli
