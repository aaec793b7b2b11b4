#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpdht/dht/topology_io.hpp"
#include "qpdht/dht/validate.hpp"
#include "qpdht/simnet/attack.hpp"

using namespace qpdht;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kGeneric = 1, kConfig = 2, kInvariant = 3, kBudget = 4 };

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Flags that override config fields. Unset flags leave the file alone.
struct Overrides {
  std::optional<std::uint32_t> n, eta, lookups, pad_chain;
  std::optional<double> fraction;
  std::optional<std::string> protocol, group, csv, summary, transcript;
  std::optional<std::uint64_t> seed;
  bool final_step_ot = false, sign_ot_request = false;

  void add(CLI::App* app) {
    app->add_option("--n", n, "number of peers");
    app->add_option("--eta", eta, "quorum size");
    app->add_option("--lookups", lookups, "lookups to run");
    app->add_option("--byzantine-fraction", fraction, "fraction of controlled peers");
    app->add_option("--protocol", protocol, "rcp1, rcpqp1, rcp2 or rcpqp2");
    app->add_option("--group", group, "sim64, toy101 or p256");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--pad-chain", pad_chain, "self-links added to each chain");
    app->add_flag("--final-step-ot", final_step_ot, "bucket OT at the owner quorum");
    app->add_flag("--sign-ot-request", sign_ot_request, "quorum-endorsed OT requests");
    app->add_option("--csv", csv, "per-lookup CSV output");
    app->add_option("--summary", summary, "summary JSON output");
    app->add_option("--transcript", transcript, "message transcript output");
  }

  void apply(json& j) const {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (n) j["n"] = *n;
    if (eta) j["eta"] = *eta;
    if (lookups) j["lookups"] = *lookups;
    if (fraction) j["byzantine_fraction"] = *fraction;
    if (protocol) j["protocol"] = *protocol;
    if (group) j["group"] = *group;
    if (seed) j["seed"] = *seed;
    if (pad_chain) j["opts"]["pad_chain"] = *pad_chain;
    if (final_step_ot) j["opts"]["final_step_ot"] = true;
    if (sign_ot_request) j["opts"]["sign_ot_request"] = true;
    if (csv) j["output"]["csv"] = *csv;
    if (summary) j["output"]["summary"] = *summary;
    if (transcript) j["output"]["transcript"] = *transcript;
  }
};

simnet::RunConfig load_config(const std::string& path, const Overrides& o) {
  auto j = load_json(path);
  o.apply(j);
  return simnet::parse_run_config(j);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& item : split(s)) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string("option '") + what + "' has a bad value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("option '") + what + "' is empty");
  return out;
}

int cmd_run(const simnet::RunConfig& c) {
  auto r = simnet::run_experiment(c);
  simnet::write_outputs(r);
  std::cout << r.summary().dump(2) << '\n';
  if (r.failures > c.failure_budget) {
    std::cerr << "error: " << r.failures << " lookups failed, budget " << c.failure_budget << '\n';
    return kBudget;
  }
  return kOk;
}

int cmd_sweep(const simnet::RunConfig& c, const std::vector<std::uint32_t>& ns, const std::string& out) {
  auto s = simnet::sweep(c, ns);
  std::string csv = "protocol,n,eta,mean_messages,failures\n";
  std::uint32_t failures = 0;
  for (const auto& p : s.points) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%u,%u,%.4f,%u\n", std::string(protocols::protocol_name(s.protocol)).c_str(), p.n,
                  p.eta, p.mean_messages, p.failures);
    csv += buf;
    failures += p.failures;
  }
  std::cout << csv;
  if (s.points.size() >= 2) {
    std::printf("fit log n:   c=%.4f R2=%.4f\n", s.log_fit.coefficient, s.log_fit.r2);
    std::printf("fit log^2 n: c=%.4f R2=%.4f\n", s.log2_fit.coefficient, s.log2_fit.r2);
  }
  simnet::write_file(out, csv);
  if (failures > c.failure_budget) {
    std::cerr << "error: " << failures << " lookups failed, budget " << c.failure_budget << '\n';
    return kBudget;
  }
  return kOk;
}

int cmd_attack(const simnet::RunConfig& c, const std::string& kind, const std::string& fractions, const std::string& out) {
  auto k = simnet::parse_attack(kind);
  std::vector<double> fs = fractions.empty() ? std::vector<double>{c.byzantine_fraction}
                                             : parse_list<double>(fractions, "--fractions");
  for (double f : fs)
    if (f < 0 || f >= 1) throw ConfigError("option '--fractions' must lie in [0, 1)");
  simnet::AttackReport rep;
  switch (k) {
    case simnet::AttackKind::range: rep = simnet::range_attack(c, fs); break;
    case simnet::AttackKind::chainlen: rep = simnet::chainlen_attack(c, fs); break;
    case simnet::AttackKind::crawl: rep = simnet::crawl_attack(c); break;
  }
  std::cout << rep.csv();
  simnet::write_file(out, rep.csv());
  return kOk;
}

int cmd_validate(const std::string& path) {
  dht::Topology t;
  try {
    t = dht::from_json(load_json(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  auto rep = dht::validate(t);
  for (const auto& c : rep.checks)
    std::cout << (c.ok ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  return rep.ok() ? kOk : kInvariant;
}

int cmd_topology(const simnet::RunConfig& c, const std::string& out) {
  auto t = dht::build_topology(simnet::topology_params(c));
  auto text = dht::to_json(t).dump(1) + "\n";
  if (out.empty())
    std::cout << text;
  else
    simnet::write_file(out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quorum DHT lookup simulator"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, attack_o, topo_o;
  std::string run_cfg, sweep_cfg, attack_cfg, topo_cfg, validate_file;
  std::string ns, sweep_out, kind, fractions, attack_out, topo_out;

  auto* run = app.add_subcommand("run", "run lookups from a config file");
  run->add_option("config", run_cfg, "config JSON")->required();
  run_o.add(run);

  auto* sw = app.add_subcommand("sweep", "run one config over several network sizes and fit the growth");
  sw->add_option("config", sweep_cfg, "config JSON")->required();
  sw->add_option("--ns", ns, "comma-separated network sizes")->required();
  sw->add_option("--out", sweep_out, "summary CSV output");
  sweep_o.add(sw);

  auto* at = app.add_subcommand("attack", "run an adversary analysis");
  at->add_option("config", attack_cfg, "config JSON")->required();
  at->add_option("--kind", kind, "range, chainlen or crawl")->required();
  at->add_option("--fractions", fractions, "comma-separated adversary fractions (one report row each)");
  at->add_option("--out", attack_out, "report CSV output");
  attack_o.add(at);

  auto* va = app.add_subcommand("validate", "check the structural invariants of a topology file");
  va->add_option("topology", validate_file, "topology JSON")->required();

  auto* tp = app.add_subcommand("topology", "build a topology and dump it as JSON");
  tp->add_option("config", topo_cfg, "config JSON")->required();
  tp->add_option("--out", topo_out, "output file (stdout if absent)");
  topo_o.add(tp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(load_config(run_cfg, run_o));
    if (*sw) return cmd_sweep(load_config(sweep_cfg, sweep_o), parse_list<std::uint32_t>(ns, "--ns"), sweep_out);
    if (*at) return cmd_attack(load_config(attack_cfg, attack_o), kind, fractions, attack_out);
    if (*va) return cmd_validate(validate_file);
    if (*tp) return cmd_topology(load_config(topo_cfg, topo_o), topo_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const TopologyError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
  return kGeneric;
}
