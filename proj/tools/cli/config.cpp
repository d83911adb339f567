#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "opdyn/errors.hpp"
#include "registry.hpp"

namespace opdyn::cli {
namespace {

using nlohmann::json;

class Issues {
 public:
  void add(std::string code, std::string message) {
    list.push_back({std::move(code), std::move(message)});
  }
  void config(std::string message) { add("ConfigError", std::move(message)); }
  std::vector<ConfigIssue> list;
};

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where, Issues& issues) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) issues.config("unknown key '" + key + "' in " + where);
  }
}

template <class T>
std::optional<T> read(const json& obj, const std::string& key, const std::string& where,
                      Issues& issues) {
  if (!obj.contains(key)) return std::nullopt;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    issues.config("'" + where + "." + key + "' has the wrong type");
    return std::nullopt;
  }
}

// Non-negative integer; json's unsigned conversion would silently wrap.
std::optional<std::size_t> read_count(const json& obj, const std::string& key,
                                      const std::string& where, Issues& issues) {
  if (!obj.contains(key)) return std::nullopt;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
    issues.config("'" + where + "." + key + "' must be a non-negative integer");
    return std::nullopt;
  }
  return v.get<std::size_t>();
}

std::optional<TrustMatrix> parse_network(const json& net, const std::filesystem::path& base,
                                         Issues& issues) {
  if (!net.is_object()) {
    issues.config("'network' must be an object");
    return std::nullopt;
  }
  reject_unknown_keys(net, {"edge_list", "matrix", "stubborn", "normalize"}, "network", issues);
  try {
    if (net.contains("edge_list") == net.contains("matrix")) {
      issues.config("'network' needs exactly one of 'edge_list' or 'matrix'");
      return std::nullopt;
    }
    if (net.contains("edge_list")) {
      if (net.contains("stubborn") || net.contains("normalize")) {
        issues.config("set 'stubborn' and 'normalize' as directives inside the edge list");
        return std::nullopt;
      }
      const auto rel = read<std::string>(net, "edge_list", "network", issues);
      if (!rel) return std::nullopt;
      std::filesystem::path p(*rel);
      if (p.is_relative()) p = base / p;
      if (!std::filesystem::exists(p)) {
        issues.config("edge list file not found: " + p.string());
        return std::nullopt;
      }
      return load_edge_list_file(p.string());
    }
    const auto rows = read<std::vector<std::vector<double>>>(net, "matrix", "network", issues);
    const auto stubborn = read<std::size_t>(net, "stubborn", "network", issues);
    const auto normalize = read<bool>(net, "normalize", "network", issues).value_or(false);
    if (!rows) return std::nullopt;
    return TrustMatrix::from_rows(*rows, stubborn, normalize);
  } catch (const Error& e) {
    issues.add(e.code(), e.what());
  }
  return std::nullopt;
}

std::optional<DriftLaw> parse_drift(const json& d, Issues& issues) {
  if (!d.is_object()) {
    issues.config("'role.drift' must be an object");
    return std::nullopt;
  }
  const auto law = read<std::string>(d, "law", "role.drift", issues);
  const double c = read<double>(d, "c", "role.drift", issues).value_or(1.0);
  if (law == "power") {
    reject_unknown_keys(d, {"law", "c", "p"}, "role.drift", issues);
    return DriftLaw::power(c, read<double>(d, "p", "role.drift", issues).value_or(1.0));
  }
  if (law == "exp") {
    reject_unknown_keys(d, {"law", "c", "gamma"}, "role.drift", issues);
    const auto gamma = read<double>(d, "gamma", "role.drift", issues);
    if (!gamma) {
      issues.config("'role.drift' with law 'exp' needs 'gamma'");
      return std::nullopt;
    }
    return DriftLaw::exponential(c, *gamma);
  }
  issues.config("'role.drift.law' must be 'power' or 'exp'");
  return std::nullopt;
}

// Reorders a per-agent vector given in source labeling into internal order.
std::vector<double> to_internal(const std::vector<double>& source, const TrustMatrix& t) {
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < t.labels().size(); ++i) out[i] = source[t.labels()[i]];
  return out;
}

void parse_sim(const json& sim, ExperimentConfig& cfg, Issues& issues) {
  if (!sim.is_object()) {
    issues.config("'sim' must be an object");
    return;
  }
  reject_unknown_keys(sim, {"alpha", "horizon", "replicas", "eps", "init", "record_actions"},
                      "sim", issues);
  if (auto v = read<double>(sim, "alpha", "sim", issues)) cfg.sim.alpha = *v;
  if (auto v = read_count(sim, "horizon", "sim", issues)) cfg.sim.horizon = *v;
  if (auto v = read_count(sim, "replicas", "sim", issues)) cfg.sim.replicas = *v;
  if (auto v = read<double>(sim, "eps", "sim", issues)) cfg.sim.eps = *v;
  if (auto v = read<bool>(sim, "record_actions", "sim", issues)) cfg.sim.record_actions = *v;
  if (!sim.contains("init")) return;
  const auto& init = sim.at("init");
  if (init == "uniform") {
    cfg.sim.init = InitSpec::uniform();
  } else if (init.is_object() && init.size() == 1 && init.contains("constant")) {
    if (auto v = read<double>(init, "constant", "sim.init", issues)) {
      cfg.sim.init = InitSpec::constant(*v);
    }
  } else if (init.is_object() && init.size() == 1 && init.contains("values")) {
    if (auto v = read<std::vector<double>>(init, "values", "sim.init", issues)) {
      cfg.sim.init = InitSpec::explicit_values(*v);  // reordered once the network is known
    }
  } else {
    issues.config("'sim.init' must be \"uniform\", {\"constant\": p} or {\"values\": [...]}");
  }
}

void parse_role(const json& role, ExperimentConfig& cfg, Issues& issues) {
  if (!role.is_object()) {
    issues.config("'role' must be an object");
    return;
  }
  reject_unknown_keys(role, {"kind", "drift"}, "role", issues);
  const auto kind = read<std::string>(role, "kind", "role", issues).value_or("");
  if (kind == "none") {
    cfg.sim.role.kind = RoleKind::kNone;
  } else if (kind == "stubborn") {
    cfg.sim.role.kind = RoleKind::kStubborn;
  } else if (kind == "drifting") {
    cfg.sim.role.kind = RoleKind::kDrifting;
    if (!role.contains("drift")) {
      issues.config("drifting role needs 'role.drift'");
    } else {
      cfg.sim.role.drift = parse_drift(role.at("drift"), issues);
    }
  } else {
    issues.config("'role.kind' must be 'none', 'stubborn' or 'drifting'");
  }
  if (kind != "drifting" && role.contains("drift")) {
    issues.config("'role.drift' is only valid for a drifting role");
  }
}

void parse_degroot(const json& d, ExperimentConfig& cfg, Issues& issues) {
  if (!d.is_object()) {
    issues.config("'degroot' must be an object");
    return;
  }
  reject_unknown_keys(d, {"x0", "tol", "horizon", "rate_slack"}, "degroot", issues);
  cfg.degroot.x0 = read<std::vector<double>>(d, "x0", "degroot", issues);
  if (auto v = read<double>(d, "tol", "degroot", issues)) cfg.degroot.options.tol = *v;
  if (auto v = read_count(d, "horizon", "degroot", issues)) cfg.degroot.options.horizon = *v;
  if (auto v = read<double>(d, "rate_slack", "degroot", issues)) {
    cfg.degroot.options.rate_slack = *v;
  }
}

// Diagnostic parameters are counts except these.
bool is_real_param(const std::string& key) { return key == "threshold" || key == "delta"; }

void parse_diagnostics(const json& list, ExperimentConfig& cfg, Issues& issues) {
  if (!list.is_array()) {
    issues.config("'diagnostics' must be an array");
    return;
  }
  std::set<std::string> seen;
  for (const auto& entry : list) {
    DiagnosticSpec spec;
    if (entry.is_string()) {
      spec.name = entry.get<std::string>();
      spec.params = json::object();
    } else if (entry.is_object() && entry.contains("name") && entry.at("name").is_string()) {
      spec.name = entry.at("name").get<std::string>();
      spec.params = entry;
      spec.params.erase("name");
    } else {
      issues.config("each diagnostic must be a name or an object with a 'name'");
      continue;
    }
    const auto* info = find_diagnostic(spec.name);
    if (!info) {
      issues.config("unknown diagnostic '" + spec.name + "'");
      continue;
    }
    if (!seen.insert(spec.name).second) {
      issues.config("diagnostic '" + spec.name + "' is listed more than once");
      continue;
    }
    for (const auto& [key, value] : spec.params.items()) {
      if (std::find(info->params.begin(), info->params.end(), key) == info->params.end()) {
        issues.config("diagnostic '" + spec.name + "' has no parameter '" + key + "'");
      } else if (is_real_param(key) ? !value.is_number()
                                    : !(value.is_number_integer() && value.get<long long>() >= 0)) {
        issues.config("parameter '" + key + "' of diagnostic '" + spec.name + "' must be " +
                      (is_real_param(key) ? "a number" : "a non-negative integer"));
      }
    }
    cfg.diagnostics.push_back(std::move(spec));
  }
}

void parse_output(const json& out, ExperimentConfig& cfg, const std::filesystem::path& base,
                  Issues& issues) {
  if (!out.is_object()) {
    issues.config("'output' must be an object");
    return;
  }
  reject_unknown_keys(out, {"dir", "trace", "trace_replicas"}, "output", issues);
  if (auto v = read<std::string>(out, "dir", "output", issues)) {
    std::filesystem::path p(*v);
    cfg.output.dir = p.is_relative() ? base / p : p;
  }
  if (auto v = read<bool>(out, "trace", "output", issues)) cfg.output.trace = *v;
  if (auto v = read_count(out, "trace_replicas", "output", issues)) {
    cfg.output.trace_replicas = *v;
  }
}

// Cross-field checks once the network and model are known.
void check_semantics(ExperimentConfig& cfg, bool role_given, Issues& issues) {
  const TrustMatrix& t = *cfg.network;
  const std::size_t k = t.size();

  if (cfg.model == ModelKind::kRa) {
    if (!cfg.seed) issues.config("'seed' is required for ra runs");
    if (!role_given) {
      cfg.sim.role.kind = t.has_stubborn() ? RoleKind::kStubborn : RoleKind::kNone;
    }
    if (cfg.sim.init.kind == InitSpec::Kind::kExplicit) {
      if (cfg.sim.init.values.size() != k) {
        issues.config("'sim.init.values' needs " + std::to_string(k) + " entries");
      } else {
        cfg.sim.init.values = to_internal(cfg.sim.init.values, t);
      }
    }
    try {
      validate(cfg.sim, k, t.has_stubborn());
    } catch (const Error& e) {
      issues.add(e.code(), e.what());
    }
  } else {
    if (!t.has_stubborn()) issues.add("ValidationError", "degroot runs need a stubborn agent");
    if (cfg.degroot.x0) {
      if (cfg.degroot.x0->size() != k) {
        issues.config("'degroot.x0' needs " + std::to_string(k) + " entries");
      } else {
        cfg.degroot.x0 = to_internal(*cfg.degroot.x0, t);
      }
    } else if (!cfg.seed) {
      issues.config("degroot runs need 'degroot.x0' or a 'seed' for random opinions");
    }
    if (!(cfg.degroot.options.tol > 0.0)) issues.config("'degroot.tol' must be > 0");
  }

  const bool role_agent = cfg.model == ModelKind::kRa && cfg.sim.role.kind != RoleKind::kNone;
  bool partition_needed = cfg.model == ModelKind::kDegroot || role_agent;
  for (const auto& spec : cfg.diagnostics) {
    const auto* info = find_diagnostic(spec.name);
    const bool model_ok = cfg.model == ModelKind::kDegroot ? info->degroot : info->ra;
    if (!model_ok) {
      issues.config("diagnostic '" + spec.name + "' does not apply to " + to_string(cfg.model) +
                    " runs");
      continue;
    }
    switch (info->needs) {
      case Needs::kStubbornNetwork:
        partition_needed = true;
        if (!t.has_stubborn()) {
          issues.config("diagnostic '" + spec.name + "' needs a stubborn agent");
        }
        break;
      case Needs::kRoleAgent:
        if (!role_agent) {
          issues.config("diagnostic '" + spec.name + "' needs a stubborn or drifting role");
        }
        break;
      case Needs::kNoRole:
        if (cfg.model != ModelKind::kRa || role_agent || t.has_stubborn()) {
          issues.config("diagnostic '" + spec.name + "' needs a network without a stubborn agent");
        } else if (!check_irreducible(t.weights())) {
          issues.add("NotIrreducible", "diagnostic '" + spec.name + "' needs an irreducible T");
        }
        break;
      case Needs::kNothing:
        break;
    }
  }
  if (partition_needed && t.has_stubborn()) {
    try {
      (void)partition(t);
    } catch (const Error& e) {
      issues.add(e.code(), e.what());
    }
  }
}

}  // namespace

ConfigInvalid::ConfigInvalid(std::vector<ConfigIssue> issues)
    : std::runtime_error(issues.empty() ? "invalid config" : issues.front().message),
      issues_(std::move(issues)) {}

const char* to_string(ModelKind model) {
  return model == ModelKind::kDegroot ? "degroot" : "ra";
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir,
                              const Overrides& overrides) {
  Issues issues;
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ConfigInvalid("ConfigError", "config must be a JSON object");
  reject_unknown_keys(doc, {"model", "seed", "network", "role", "sim", "degroot", "diagnostics",
                            "output"},
                      "config", issues);

  const auto model = read<std::string>(doc, "model", "config", issues);
  if (model == "degroot") cfg.model = ModelKind::kDegroot;
  else if (model == "ra") cfg.model = ModelKind::kRa;
  else issues.config("'model' must be 'degroot' or 'ra'");

  cfg.seed = read<std::uint64_t>(doc, "seed", "config", issues);
  if (overrides.seed) cfg.seed = overrides.seed;
  cfg.sim.seed = cfg.seed.value_or(0);

  if (doc.contains("network")) cfg.network = parse_network(doc.at("network"), base_dir, issues);
  else issues.config("'network' is required");

  if (doc.contains("sim")) parse_sim(doc.at("sim"), cfg, issues);
  if (overrides.eps) cfg.sim.eps = *overrides.eps;
  if (doc.contains("role")) parse_role(doc.at("role"), cfg, issues);
  if (doc.contains("degroot")) parse_degroot(doc.at("degroot"), cfg, issues);
  if (doc.contains("diagnostics")) parse_diagnostics(doc.at("diagnostics"), cfg, issues);

  cfg.output.dir = base_dir / "out";
  if (doc.contains("output")) parse_output(doc.at("output"), cfg, base_dir, issues);
  if (overrides.out) cfg.output.dir = *overrides.out;
  if (overrides.trace) cfg.output.trace = true;

  const bool model_ok = model == "degroot" || model == "ra";
  if (model_ok && cfg.network) {
    check_semantics(cfg, doc.contains("role"), issues);
  }
  if (!issues.list.empty()) throw ConfigInvalid(std::move(issues.list));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("ConfigError", "cannot read config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("ParseError", std::string("config is not valid JSON: ") + e.what());
  }
  auto cfg = parse_config(doc, path.parent_path(), overrides);
  cfg.path = path;
  return cfg;
}

}  // namespace opdyn::cli
