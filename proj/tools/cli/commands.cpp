#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "opdyn/diagnostics.hpp"
#include "opdyn/errors.hpp"
#include "opdyn/spectral.hpp"
#include "registry.hpp"

namespace opdyn::cli {
namespace {

using nlohmann::json;

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

const char* role_name(RoleKind kind) {
  switch (kind) {
    case RoleKind::kNone: return "none";
    case RoleKind::kStubborn: return "stubborn";
    case RoleKind::kDrifting: return "drifting";
  }
  return "none";
}

json describe_network(const TrustMatrix& t, const PartitionedTrust* p) {
  json j{{"agents", t.size()}, {"has_stubborn", t.has_stubborn()}, {"labels", t.labels()}};
  if (p) {
    j["lambda"] = p->lambda;
    j["psi"] = to_std(p->psi);
    j["r"] = to_std(p->r);
    j["layers"] = compute_v_layers(*p);
  } else if (check_irreducible(t.weights())) {
    const auto d = spectral_radius_perron(t.weights());
    j["rho"] = d.rho;
    j["pi"] = to_std(d.left_vector);
  }
  return j;
}

json describe_settings(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::kDegroot) {
    json j{{"tol", cfg.degroot.options.tol}, {"rate_slack", cfg.degroot.options.rate_slack}};
    if (cfg.degroot.options.horizon) j["horizon"] = *cfg.degroot.options.horizon;
    return j;
  }
  const auto& s = cfg.sim;
  json role{{"kind", role_name(s.role.kind)}};
  if (s.role.drift) {
    const auto& d = *s.role.drift;
    role["drift"] = d.kind == DriftLaw::Kind::kPower
                        ? json{{"law", "power"}, {"c", d.scale}, {"p", d.rate}}
                        : json{{"law", "exp"}, {"c", d.scale}, {"gamma", d.rate}};
  }
  json init;
  switch (s.init.kind) {
    case InitSpec::Kind::kUniform: init = "uniform"; break;
    case InitSpec::Kind::kConstant: init = json{{"constant", s.init.value}}; break;
    case InitSpec::Kind::kExplicit: init = json{{"values", s.init.values}}; break;
  }
  return json{{"alpha", s.alpha},     {"horizon", s.horizon}, {"replicas", s.replicas},
              {"eps", s.eps},         {"role", role},         {"init", init},
              {"recorded_steps", recording_steps(s.horizon).size()}};
}

std::optional<PartitionedTrust> maybe_partition(const ExperimentConfig& cfg) {
  if (!cfg.network->has_stubborn()) return std::nullopt;
  const bool role_agent = cfg.model == ModelKind::kRa && cfg.sim.role.kind != RoleKind::kNone;
  bool needed = cfg.model == ModelKind::kDegroot || role_agent;
  for (const auto& d : cfg.diagnostics) {
    needed = needed || find_diagnostic(d.name)->needs == Needs::kStubbornNetwork;
  }
  if (!needed) return std::nullopt;
  return partition(*cfg.network);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::string format_number(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (!v.is_number()) throw std::invalid_argument("assertion value is not a number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

json error_list(const std::vector<ConfigIssue>& issues) {
  json errors = json::array();
  for (const auto& i : issues) errors.push_back({{"code", i.code}, {"message", i.message}});
  return json{{"status", "invalid"}, {"errors", errors}};
}

int cmd_validate(const std::filesystem::path& config, const Overrides& overrides,
                 std::ostream& out) {
  ExperimentConfig cfg;
  std::optional<PartitionedTrust> p;
  try {
    cfg = load_config(config, overrides);
    p = maybe_partition(cfg);
  } catch (const ConfigInvalid& e) {
    out << error_list(e.issues()).dump(2) << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    out << error_list({{e.code(), e.what()}}).dump(2) << "\n";
    return kExitConfigError;
  }

  const auto& t = *cfg.network;
  out << "model: " << to_string(cfg.model) << "\n";
  out << "K: " << t.size() << "\n";
  if (t.has_stubborn()) out << "stubborn agent: " << t.labels()[0] << " (internal 0)\n";
  if (p) {
    const auto q_rho = spectral_radius_perron(p->q);
    out << "lambda: " << p->lambda << "\n";
    out << "rho(Q): " << q_rho.rho << " (residual " << q_rho.residual << ")\n";
    out << "psi:";
    for (Eigen::Index i = 0; i < p->psi.size(); ++i) out << ' ' << p->psi[i];
    out << "\n";
    const auto layers = compute_v_layers(*p);
    out << "layers: P = " << layers.depth() << "\n";
    for (std::size_t l = 0; l < layers.layers.size(); ++l) {
      out << "  V" << l << ":";
      for (std::size_t a : layers.layers[l]) out << ' ' << a;
      out << "\n";
    }
  } else if (check_irreducible(t.weights())) {
    const auto d = spectral_radius_perron(t.weights());
    out << "rho(T): " << d.rho << "\npi:";
    for (Eigen::Index i = 0; i < d.left_vector.size(); ++i) out << ' ' << d.left_vector[i];
    out << "\n";
  }
  out << "diagnostics:";
  for (const auto& d : cfg.diagnostics) out << ' ' << d.name;
  out << "\nstatus: valid\n";
  return kExitPass;
}

int cmd_run(const std::filesystem::path& config, const Overrides& overrides, std::size_t jobs,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  std::optional<PartitionedTrust> p;
  try {
    cfg = load_config(config, overrides);
    p = maybe_partition(cfg);
  } catch (const ConfigInvalid& e) {
    err << error_list(e.issues()).dump(2) << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    err << error_list({{e.code(), e.what()}}).dump(2) << "\n";
    return kExitConfigError;
  }

  const auto& dir = cfg.output.dir;
  std::filesystem::create_directories(dir);
  const TrustMatrix& t = *cfg.network;

  json summary{{"schema_version", kSummarySchemaVersion},
               {"model", to_string(cfg.model)},
               {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
               {"network", describe_network(t, p ? &*p : nullptr)},
               {"settings", describe_settings(cfg)}};
  bool pass = true;
  std::ostringstream stats;

  std::optional<DegrootRun> degroot;
  std::optional<RaModel> ra;
  std::optional<BatchSummary> batch;
  json run;
  try {
    if (cfg.model == ModelKind::kDegroot) {
      OpinionState x0;
      if (cfg.degroot.x0) {
        x0.values = Eigen::Map<const Eigen::VectorXd>(
            cfg.degroot.x0->data(), static_cast<Eigen::Index>(cfg.degroot.x0->size()));
      } else {
        x0 = random_opinions(t.size(), *cfg.seed);
      }
      degroot = degroot_run(t, *p, x0, cfg.degroot.options);
      const std::vector<Assertion> as{
          {"final_error_within_tol", degroot->final_error <= cfg.degroot.options.tol,
           degroot->final_error, cfg.degroot.options.tol},
          {"rate_within_slack", degroot->rate_ok, degroot->rate_estimate,
           degroot->rho + cfg.degroot.options.rate_slack},
      };
      run = json{{"steps", degroot->steps},
                 {"horizon", degroot->horizon},
                 {"final_error", degroot->final_error},
                 {"rate_estimate", degroot->rate_estimate},
                 {"rho", degroot->rho},
                 {"solver_residual", degroot->solver_residual},
                 {"limit", to_std(degroot->limit)},
                 {"assertions", as},
                 {"pass", as[0].passed && as[1].passed}};
      write_degroot_csv(stats, *degroot, true);
    } else {
      ra.emplace(t, cfg.sim);
      batch = ra->run_batch(jobs);
      const auto& last = batch->steps.back();
      run = json{{"replicas", batch->replicas},
                 {"final_step", last.n},
                 {"terminal",
                  {{"above_eps", to_std(last.above_eps)},
                   {"middle", to_std(last.middle)},
                   {"mean_x", to_std(last.mean_x)},
                   {"prod_sq", to_std(last.prod_sq)}}},
                 {"assertions", json::array()},
                 {"pass", true}};
      write_batch_csv(stats, *batch);
    }
  } catch (const HorizonExceeded& e) {
    run = json{{"error", {{"code", e.code()}, {"message", e.what()}}},
               {"final_error", e.final_error()},
               {"assertions",
                json::array({Assertion{"final_error_within_tol", false, e.final_error(),
                                       cfg.degroot.options.tol}})},
               {"pass", false}};
    stats << "# schema_version=" << kCsvSchemaVersion << "\nn,err_inf\n";
  } catch (const Error& e) {
    run = json{{"error", {{"code", e.code()}, {"message", e.what()}}},
               {"assertions", json::array()},
               {"pass", false}};
  }
  pass = pass && run.at("pass").get<bool>();
  summary["run"] = run;

  const RunContext ctx{cfg, jobs, ra ? &*ra : nullptr, batch ? &*batch : nullptr,
                       degroot ? &*degroot : nullptr, p ? &*p : nullptr};
  const bool run_ok = !run.contains("error");
  json diagnostics = json::array();
  for (const auto& spec : cfg.diagnostics) {
    json entry;
    const auto* info = find_diagnostic(spec.name);
    const bool needs_run = info->needs == Needs::kRoleAgent || info->needs == Needs::kNoRole;
    if (needs_run && !run_ok) {
      entry = json{{"error", {{"code", "Skipped"}, {"message", "model run failed"}}},
                   {"assertions", json::array()},
                   {"pass", false}};
    } else {
      try {
        entry = info->run(ctx, spec.params);
      } catch (const Error& e) {
        entry = json{{"error", {{"code", e.code()}, {"message", e.what()}}},
                     {"assertions", json::array()},
                     {"pass", false}};
      }
    }
    json named{{"name", spec.name}};
    named.update(entry);
    pass = pass && named.at("pass").get<bool>();
    diagnostics.push_back(std::move(named));
  }
  summary["diagnostics"] = diagnostics;
  summary["pass"] = pass;

  write_file(dir / "summary.json", summary.dump(2) + "\n");
  write_file(dir / "stats.csv", stats.str());

  if (cfg.output.trace && ra) {
    const auto traces = dir / "traces";
    std::filesystem::create_directories(traces);
    const std::size_t count = std::min(cfg.output.trace_replicas, cfg.sim.replicas);
    for (std::size_t id = 0; id < count; ++id) {
      std::ostringstream csv;
      write_trace_csv(csv, ra->run_replica(id));
      write_file(traces / ("replica_" + std::to_string(id) + ".csv"), csv.str());
    }
  }

  out << "wrote " << (dir / "summary.json").string() << "\n";
  out << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitPass : kExitAssertionFailure;
}

std::string render_report(const json& summary) {
  if (!summary.is_object() || !summary.contains("diagnostics") ||
      !summary.at("diagnostics").is_array()) {
    throw std::invalid_argument("summary has no 'diagnostics' array");
  }
  struct Row {
    std::string diagnostic, assertion, value, threshold, se, status;
    bool flagged = false;
  };
  std::vector<Row> rows;
  auto add_rows = [&](const std::string& name, const json& entry) {
    if (!entry.is_object() || !entry.contains("pass")) {
      throw std::invalid_argument("entry '" + name + "' has no 'pass'");
    }
    if (entry.contains("error")) {
      rows.push_back({name, "error: " + entry.at("error").value("code", std::string("?")), "-",
                      "-", "-", "FAIL", true});
    }
    if (!entry.contains("assertions") || !entry.at("assertions").is_array()) {
      throw std::invalid_argument("entry '" + name + "' has no 'assertions' array");
    }
    for (const auto& a : entry.at("assertions")) {
      if (!a.contains("name") || !a.contains("pass") || !a.contains("value") ||
          !a.contains("threshold")) {
        throw std::invalid_argument("malformed assertion in '" + name + "'");
      }
      const bool passed = a.at("pass").get<bool>();
      const bool hard = a.value("hard", true);
      Row r{name,
            a.at("name").get<std::string>(),
            format_number(a.at("value")),
            format_number(a.at("threshold")),
            format_number(a.value("standard_error", json(nullptr))),
            passed ? "PASS" : (hard ? "FAIL" : "info"),
            !passed && hard};
      rows.push_back(std::move(r));
    }
  };
  if (summary.contains("run")) add_rows("run", summary.at("run"));
  for (const auto& d : summary.at("diagnostics")) {
    if (!d.is_object() || !d.contains("name") || !d.at("name").is_string()) {
      throw std::invalid_argument("diagnostic entry without a name");
    }
    add_rows(d.at("name").get<std::string>(), d);
  }

  const Row header{"diagnostic", "assertion", "value", "threshold", "std.err", "status"};
  std::size_t w[5] = {header.diagnostic.size(), header.assertion.size(), header.value.size(),
                      header.threshold.size(), header.se.size()};
  for (const auto& r : rows) {
    w[0] = std::max(w[0], r.diagnostic.size());
    w[1] = std::max(w[1], r.assertion.size());
    w[2] = std::max(w[2], r.value.size());
    w[3] = std::max(w[3], r.threshold.size());
    w[4] = std::max(w[4], r.se.size());
  }
  std::ostringstream out;
  auto line = [&](const Row& r) {
    out << (r.flagged ? "!! " : "   ") << pad(r.diagnostic, w[0]) << "  "
        << pad(r.assertion, w[1]) << "  " << pad(r.value, w[2]) << "  " << pad(r.threshold, w[3])
        << "  " << pad(r.se, w[4]) << "  " << r.status << "\n";
  };
  line(header);
  line({std::string(w[0], '-'), std::string(w[1], '-'), std::string(w[2], '-'),
        std::string(w[3], '-'), std::string(w[4], '-'), "------"});
  for (const auto& r : rows) line(r);
  return out.str();
}

int cmd_report(const std::filesystem::path& summary, std::ostream& out, std::ostream& err) {
  std::ifstream in(summary);
  if (!in) {
    err << error_list({{"ConfigError", "cannot read " + summary.string()}}).dump(2) << "\n";
    return kExitConfigError;
  }
  try {
    out << render_report(json::parse(in));
  } catch (const std::exception& e) {
    err << error_list({{"ParseError", std::string("malformed summary: ") + e.what()}}).dump(2)
        << "\n";
    return kExitConfigError;
  }
  return kExitPass;
}

}  // namespace opdyn::cli
