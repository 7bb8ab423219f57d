// fedosov: run a scenario and write a JSON report.
//
//   fedosov check  [--config c.json] [--scenario NAME] [flags]
//   fedosov star   [--config c.json] [flags]      flat-closed-form
//   fedosov trace  [--config c.json] [flags]      trace-theorem
//   fedosov action [--config c.json] [flags]      action
//   fedosov report REPORT.json                    summarise a saved report
//
// Exit status: 0 all checks pass, 1 some check failed, 2 bad configuration.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fedosov/harness.hpp"

namespace {

using namespace fedosov::harness;

struct Overrides {
  std::string config;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string out;
  std::optional<int> order_h;
  std::optional<int> order_eps;
};

void add_run_flags(CLI::App* cmd, Overrides& o, bool with_scenario) {
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  if (with_scenario) cmd->add_option("--scenario", o.scenario, "core-identities | flat-closed-form | trace-theorem | action");
  cmd->add_option("--seed", o.seed, "u64 seed");
  cmd->add_option("--backend", o.backend, "exact | float")->check(CLI::IsMember({"exact", "float"}));
  cmd->add_option("--out", o.out, "report path (stdout when absent)");
  cmd->add_option("--order-h", o.order_h, "Weyl truncation N");
  cmd->add_option("--order-eps", o.order_eps, "eps truncation E");
}

RunConfig resolve(const Overrides& o, const std::string& forced_scenario) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  Json patch = Json::object();
  if (!o.scenario.empty()) patch["scenario"] = o.scenario;
  if (!forced_scenario.empty()) patch["scenario"] = forced_scenario;
  if (o.seed) patch["seed"] = *o.seed;
  if (!o.backend.empty()) patch["backend"] = o.backend;
  if (!o.out.empty()) patch["out"] = o.out;
  if (o.order_h) patch["order_h"] = *o.order_h;
  if (o.order_eps) patch["order_eps"] = *o.order_eps;
  apply_json(cfg, patch);
  cfg.validate();
  return cfg;
}

int run(const RunConfig& cfg) {
  const Report rep = run_scenario(cfg);
  const std::string text = rep.to_json().dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write report to '" + cfg.out + "'");
    f << text;
    for (const auto& c : rep.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.witness ? "  " + *c.witness : "") << "\n";
  }
  if (!rep.pass()) std::cerr << "invariant violated: " << rep.first_witness().value_or("") << "\n";
  return rep.pass() ? 0 : 1;
}

int summarise(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read report '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("report '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.contains("checks") || !j.contains("status")) throw ConfigError("'" + path + "' is not a fedosov report");
  const auto& cfg = j["config"];
  std::cout << "scenario " << cfg.value("scenario", "?") << ", backend " << cfg.value("backend", "?") << ", seed "
            << cfg.value("seed", 0ULL) << "\n";
  for (const auto& c : j["checks"]) {
    std::cout << (c["status"] == "pass" ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " (" << c["samples"]
              << ")";
    if (!c["witness"].is_null()) std::cout << "  " << c["witness"].get<std::string>();
    std::cout << "\n";
  }
  for (const auto& [k, v] : j["facts"].items()) std::cout << k << " = " << v.get<std::string>() << "\n";
  return j["status"] == "pass" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fedosov star products, traces and gravity actions on tori"};
  app.require_subcommand(1);
  Overrides check_o, star_o, trace_o, action_o;
  std::string report_path;
  auto* check = app.add_subcommand("check", "run the scenario named in the config");
  add_run_flags(check, check_o, true);
  auto* star = app.add_subcommand("star", "plane-wave star products against the closed form");
  add_run_flags(star, star_o, false);
  auto* trace = app.add_subcommand("trace", "isomorphism M and trace identities");
  add_run_flags(trace, trace_o, false);
  auto* act = app.add_subcommand("action", "gravity actions, reality and classical limit");
  add_run_flags(act, action_o, false);
  auto* report = app.add_subcommand("report", "summarise a saved report");
  report->add_option("path", report_path, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return run(resolve(check_o, ""));
    if (star->parsed()) return run(resolve(star_o, "flat-closed-form"));
    if (trace->parsed()) return run(resolve(trace_o, "trace-theorem"));
    if (act->parsed()) return run(resolve(action_o, "action"));
    return summarise(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
