#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qpdht/algebra/p256_group.hpp"
#include "qpdht/algebra/schnorr_group.hpp"
#include "qpdht/protocols/engine.hpp"
#include "qpdht/simnet/fit.hpp"

namespace qpdht::simnet {

using nlohmann::json;

// One experiment: a topology, a protocol and a batch of lookups.
struct RunConfig {
  std::uint32_t n = 0;
  std::uint32_t eta = 0;  // 0: max(4, ceil(log2 n))
  unsigned bits = 64;     // B
  double byzantine_fraction = 0.0;
  std::vector<dht::Behavior> behaviors{dht::Behavior::drop, dht::Behavior::bogus_share, dht::Behavior::bogus_rt,
                                       dht::Behavior::bogus_ot};
  protocols::Protocol protocol = protocols::Protocol::rcpqp1;
  protocols::ProtocolOptions opts;
  std::string group = "sim64";
  std::uint64_t seed = 1;
  std::uint32_t lookups = 100;
  std::uint64_t d_max = 10;
  std::uint32_t failure_budget = 0;  // lookups allowed to fail before the run counts as failed
  bool capture_payloads = false;
  std::string csv_path;
  std::string summary_path;
  std::string transcript_path;
};

namespace detail {

template <class T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + name + "' has the wrong type");
  }
}

inline const std::set<std::string>& known_fields() {
  static const std::set<std::string> k{"n",        "eta",       "bits",   "byzantine_fraction", "behaviors",
                                       "protocol", "opts",      "group",  "seed",               "lookups",
                                       "d_max",    "failure_budget", "capture_payloads", "rules", "output"};
  return k;
}

}  // namespace detail

// Missing required fields and unknown fields are named in the error.
inline RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!detail::known_fields().count(k)) throw ConfigError("unknown field '" + k + "'");
  for (const char* req : {"n", "protocol"})
    if (!j.contains(req)) throw ConfigError(std::string("missing required field '") + req + "'");
  RunConfig c;
  c.n = detail::field<std::uint32_t>(j, "n", 0);
  c.eta = detail::field<std::uint32_t>(j, "eta", 0);
  c.bits = detail::field<unsigned>(j, "bits", 64);
  c.byzantine_fraction = detail::field<double>(j, "byzantine_fraction", 0.0);
  if (j.contains("behaviors")) {
    c.behaviors.clear();
    for (const auto& b : detail::field<std::vector<std::string>>(j, "behaviors", {})) {
      try {
        c.behaviors.push_back(dht::parse_behavior(b));
      } catch (const Error&) {
        throw ConfigError("field 'behaviors' has unknown behavior '" + b + "'");
      }
    }
    if (c.behaviors.empty()) throw ConfigError("field 'behaviors' must not be empty");
  }
  c.protocol = protocols::parse_protocol(detail::field<std::string>(j, "protocol", ""));
  if (j.contains("opts")) {
    const auto& o = j.at("opts");
    if (!o.is_object()) throw ConfigError("field 'opts' must be an object");
    for (const auto& [k, v] : o.items())
      if (k != "final_step_ot" && k != "sign_ot_request" && k != "pad_chain" && k != "chain_window_rounds")
        throw ConfigError("unknown field 'opts." + k + "'");
    c.opts.final_step_ot = detail::field<bool>(o, "final_step_ot", false);
    c.opts.sign_ot_request = detail::field<bool>(o, "sign_ot_request", false);
    c.opts.pad_chain = detail::field<std::uint32_t>(o, "pad_chain", 0);
    c.opts.chain_window_rounds = detail::field<std::uint64_t>(o, "chain_window_rounds", 1000);
  }
  if (j.contains("rules")) {
    const auto& r = j.at("rules");
    c.opts.rules.max_lookups = detail::field<std::uint32_t>(r, "max_lookups", 10);
    c.opts.rules.window_rounds = detail::field<std::uint64_t>(r, "window_rounds", 100);
  }
  c.group = detail::field<std::string>(j, "group", "sim64");
  if (c.group != "sim64" && c.group != "toy101" && c.group != "p256")
    throw ConfigError("field 'group' must be sim64, toy101 or p256");
  c.seed = detail::field<std::uint64_t>(j, "seed", 1);
  c.lookups = detail::field<std::uint32_t>(j, "lookups", 100);
  c.d_max = detail::field<std::uint64_t>(j, "d_max", 10);
  if (c.d_max == 0) throw ConfigError("field 'd_max' must be positive");
  c.failure_budget = detail::field<std::uint32_t>(j, "failure_budget", 0);
  c.capture_payloads = detail::field<bool>(j, "capture_payloads", false);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    c.csv_path = detail::field<std::string>(o, "csv", "");
    c.summary_path = detail::field<std::string>(o, "summary", "");
    c.transcript_path = detail::field<std::string>(o, "transcript", "");
  }
  if (c.n == 0) throw ConfigError("field 'n' must be positive");
  return c;
}

inline dht::TopologyParams topology_params(const RunConfig& c) {
  dht::TopologyParams p;
  p.n = c.n;
  p.eta = c.eta;
  p.bits = c.bits;
  p.byzantine_fraction = c.byzantine_fraction;
  p.behaviors = c.behaviors;
  p.seed = c.seed;
  return p;
}

inline constexpr std::string_view kCsvHeader =
    "lookup,protocol,n,eta,requester,key,start_quorum,owner_quorum,dest_quorum,status,hops,messages,bytes,dropped,"
    "requester_exps,responder_exps,retries,latency";

inline std::string csv_row(std::uint64_t i, const RunConfig& c, std::uint32_t eta, const protocols::LookupResult& r) {
  std::ostringstream o;
  o << i << ',' << protocols::protocol_name(r.protocol) << ',' << c.n << ',' << eta << ',' << r.requester << ','
    << r.key << ',' << r.start << ',' << r.owner << ',';
  if (r.dest != protocols::kNoQuorum) o << r.dest;
  o << ',' << protocols::status_name(r.status) << ',' << r.hops() << ',' << r.metrics.sent << ',' << r.metrics.bytes
    << ',' << r.metrics.dropped << ',' << r.requester_exps << ',' << r.metrics.responder_exps << ',' << r.retries << ','
    << r.latency;
  return o.str();
}

struct ExperimentResult {
  RunConfig config;
  std::uint32_t eta = 0;
  std::size_t quorums = 0;
  std::vector<protocols::LookupResult> lookups;
  Metrics totals;
  std::vector<std::string> transcript;
  std::uint32_t failures = 0;  // lookups that did not reach the owner

  std::string csv() const {
    std::string out(kCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < lookups.size(); ++i) out += csv_row(i, config, eta, lookups[i]) + '\n';
    return out;
  }

  double mean(auto f) const {
    if (lookups.empty()) return 0.0;
    double s = 0;
    for (const auto& r : lookups) s += static_cast<double>(f(r));
    return s / static_cast<double>(lookups.size());
  }
  double mean_messages() const { return mean([](const auto& r) { return r.metrics.sent; }); }

  json summary() const {
    json by_tag = json::object();
    for (std::size_t t = 1; t < wire::kTagCount; ++t)
      if (totals.by_tag[t]) by_tag[std::string(wire::tag_name(static_cast<wire::Tag>(t)))] = totals.by_tag[t];
    double sd = 0;
    const double mm = mean_messages();
    for (const auto& r : lookups) sd += (static_cast<double>(r.metrics.sent) - mm) * (static_cast<double>(r.metrics.sent) - mm);
    sd = lookups.size() > 1 ? std::sqrt(sd / static_cast<double>(lookups.size() - 1)) : 0.0;
    const double req_exps = mean([](const auto& r) { return r.requester_exps; });
    const double resp_exps = mean([](const auto& r) { return r.metrics.responder_exps; });
    return json{{"protocol", protocols::protocol_name(config.protocol)},
                {"group", config.group},
                {"n", config.n},
                {"eta", eta},
                {"quorums", quorums},
                {"byzantine_fraction", config.byzantine_fraction},
                {"seed", config.seed},
                {"lookups", lookups.size()},
                {"ok", lookups.size() - failures},
                {"failures", failures},
                {"mean_messages", mm},
                {"stddev_messages", sd},
                {"mean_bytes", mean([](const auto& r) { return r.metrics.bytes; })},
                {"mean_hops", mean([](const auto& r) { return r.hops(); })},
                {"mean_retries", mean([](const auto& r) { return r.retries; })},
                {"mean_latency", mean([](const auto& r) { return r.latency; })},
                {"mean_requester_exps", req_exps},
                {"mean_responder_exps", resp_exps},
                // at roughly 1 ms per exponentiation
                {"estimated_requester_ms", req_exps},
                {"messages_by_tag", by_tag},
                {"sent", totals.sent},
                {"delivered", totals.delivered},
                {"dropped", totals.dropped},
                {"late", totals.late},
                {"conserved", totals.conserved()}};
  }

  std::string transcript_text() const {
    std::string out;
    for (const auto& l : transcript) out += l + '\n';
    return out;
  }
};

template <algebra::PrimeOrderGroup G>
ExperimentResult run_experiment_with(G g, const RunConfig& c) {
  auto topo = dht::build_topology(topology_params(c));
  ExperimentResult res;
  res.config = c;
  res.eta = topo.eta;
  res.quorums = topo.quorum_count();
  auto world = protocols::build_world(std::move(g), std::move(topo), c.seed);
  protocols::Engine<G> engine(world, c.opts, NetConfig{c.d_max}, c.seed, c.capture_payloads);
  algebra::Drbg workload = algebra::Drbg(c.seed).fork("workload", 0);
  std::vector<dht::PeerIndex> honest;
  for (const auto& p : world.topo.peers)
    if (!p.byzantine()) honest.push_back(p.index);
  for (std::uint32_t i = 0; i < c.lookups; ++i) {
    auto p = honest[workload.uniform(honest.size())];
    auto key = workload() & world.topo.ring.mask();
    auto r = engine.lookup(c.protocol, p, key, i);
    if (!r.correct()) ++res.failures;
    res.lookups.push_back(std::move(r));
  }
  res.totals = engine.metrics();
  res.transcript = engine.transcript().lines();
  return res;
}

// Invalid configurations throw before any simulation work.
inline ExperimentResult run_experiment(const RunConfig& c) {
  if (c.group == "toy101") return run_experiment_with(algebra::SchnorrGroup::toy(), c);
  if (c.group == "p256") return run_experiment_with(algebra::P256Group(), c);
  return run_experiment_with(algebra::SchnorrGroup::sim64(), c);
}

inline void write_file(const std::string& path, const std::string& data) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << data;
}

inline void write_outputs(const ExperimentResult& r) {
  write_file(r.config.csv_path, r.csv());
  write_file(r.config.summary_path, r.summary().dump(2) + "\n");
  write_file(r.config.transcript_path, r.transcript_text());
}

struct SweepPoint {
  std::uint32_t n = 0;
  std::uint32_t eta = 0;
  double mean_messages = 0;
  std::vector<std::uint64_t> messages;  // per lookup
  std::uint32_t failures = 0;
};

struct SweepResult {
  protocols::Protocol protocol;
  std::vector<SweepPoint> points;
  Fit log_fit, log2_fit;

  std::vector<std::pair<double, double>> series() const {
    std::vector<std::pair<double, double>> s;
    for (const auto& p : points) s.emplace_back(p.n, p.mean_messages);
    return s;
  }
};

inline SweepResult sweep(RunConfig base, const std::vector<std::uint32_t>& ns) {
  SweepResult out;
  out.protocol = base.protocol;
  for (auto n : ns) {
    base.n = n;
    auto r = run_experiment(base);
    SweepPoint p{n, r.eta, r.mean_messages(), {}, r.failures};
    for (const auto& l : r.lookups) p.messages.push_back(l.metrics.sent);
    out.points.push_back(std::move(p));
  }
  if (out.points.size() >= 2) {
    out.log_fit = fit_complexity(out.series(), Model::log_n);
    out.log2_fit = fit_complexity(out.series(), Model::log2_n);
  }
  return out;
}

}  // namespace qpdht::simnet
