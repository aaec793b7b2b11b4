#pragma once

#include <json.hpp>

#include "qpdht/dht/topology.hpp"

namespace qpdht::dht {

inline nlohmann::json to_json(const Topology& t) {
  nlohmann::json j;
  j["bits"] = t.ring.bits;
  j["eta"] = t.eta;
  j["nu"] = t.nu;
  j["byzantine_fraction"] = t.byzantine_fraction;
  j["seed"] = t.seed;
  auto& peers = j["peers"] = nlohmann::json::array();
  for (const auto& p : t.peers)
    peers.push_back({{"id", p.id}, {"addr", p.addr}, {"quorum", p.quorum}, {"behavior", behavior_name(p.behavior)}});
  auto& qs = j["quorums"] = nlohmann::json::array();
  for (const auto& q : t.quorums) {
    nlohmann::json jq{{"id", q.id}, {"members", q.members}, {"arc", {q.arc.lower, q.arc.upper}}};
    auto& rt = jq["rt"] = nlohmann::json::array();
    for (const auto& e : q.rt)
      rt.push_back({{"target", e.target},
                    {"p", e.p},
                    {"p_prev", e.p_prev},
                    {"range", {e.range.lower, e.range.upper}},
                    {"ts", e.ts}});
    qs.push_back(std::move(jq));
  }
  return j;
}

// Loads exactly what was dumped; nothing is recomputed, so a hand-edited file
// can be checked with validate().
inline Topology from_json(const nlohmann::json& j) {
  try {
    Topology t;
    t.ring = Ring{j.at("bits").get<unsigned>()};
    if (t.ring.bits < 1 || t.ring.bits > 64) throw ConfigError("bits must be in [1, 64]");
    t.eta = j.at("eta").get<std::uint32_t>();
    t.nu = j.at("nu").get<std::uint32_t>();
    t.byzantine_fraction = j.value("byzantine_fraction", 0.0);
    t.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jp : j.at("peers")) {
      Peer p;
      p.index = static_cast<PeerIndex>(t.peers.size());
      p.id = jp.at("id").get<KeyId>();
      p.addr = jp.at("addr").get<std::string>();
      p.quorum = jp.at("quorum").get<QuorumId>();
      p.behavior = parse_behavior(jp.at("behavior").get<std::string>());
      t.peers.push_back(std::move(p));
    }
    for (const auto& jq : j.at("quorums")) {
      Quorum q;
      q.id = jq.at("id").get<QuorumId>();
      q.members = jq.at("members").get<std::vector<PeerIndex>>();
      q.arc = Range{jq.at("arc").at(0).get<KeyId>(), jq.at("arc").at(1).get<KeyId>()};
      for (const auto& je : jq.at("rt")) {
        RtEntry e;
        e.target = je.at("target").get<QuorumId>();
        e.p = je.at("p").get<PeerIndex>();
        e.p_prev = je.at("p_prev").get<PeerIndex>();
        e.range = Range{je.at("range").at(0).get<KeyId>(), je.at("range").at(1).get<KeyId>()};
        e.ts = je.value("ts", std::uint64_t{0});
        q.rt.push_back(e);
      }
      for (std::uint32_t s = 0; s < q.members.size(); ++s) {
        auto p = q.members[s];
        if (p < t.peers.size() && t.peers[p].quorum == q.id) t.peers[p].member_index = s + 1;
      }
      t.quorums.push_back(std::move(q));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed topology file: ") + e.what());
  }
}

}  // namespace qpdht::dht
