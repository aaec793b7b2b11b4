#pragma once

#include <map>

#include "qpdht/adversary/chain_length.hpp"
#include "qpdht/adversary/crawl.hpp"
#include "qpdht/adversary/range_estimate.hpp"
#include "qpdht/simnet/experiment.hpp"

namespace qpdht::simnet {

enum class AttackKind { range, chainlen, crawl };

inline AttackKind parse_attack(std::string_view s) {
  if (s == "range") return AttackKind::range;
  if (s == "chainlen") return AttackKind::chainlen;
  if (s == "crawl") return AttackKind::crawl;
  throw ConfigError("unknown attack '" + std::string(s) + "' (range, chainlen or crawl)");
}

// Rows of a CSV report plus its header.
struct AttackReport {
  std::string header;
  std::vector<std::string> rows;

  std::string csv() const {
    std::string out = header + '\n';
    for (const auto& r : rows) out += r + '\n';
    return out;
  }
};

namespace detail {

template <class F>
auto with_group(const std::string& name, F&& f) {
  if (name == "toy101") return f(algebra::SchnorrGroup::toy());
  if (name == "p256") return f(algebra::P256Group());
  return f(algebra::SchnorrGroup::sim64());
}

// Same seed for every fraction, so the controlled sets are nested; the
// workload comes from peers honest at the largest fraction so every row sees
// the same lookups.
inline std::vector<dht::Topology> nested_topologies(const RunConfig& base, const std::vector<double>& fractions) {
  std::vector<dht::Topology> out;
  for (double f : fractions) {
    auto c = base;
    c.byzantine_fraction = f;
    out.push_back(dht::build_topology(topology_params(c)));
  }
  return out;
}

inline std::vector<std::pair<dht::PeerIndex, dht::KeyId>> shared_workload(const std::vector<dht::Topology>& topos,
                                                                          const RunConfig& c) {
  const dht::Topology* worst = &topos.front();
  for (const auto& t : topos)
    if (t.byzantine_fraction > worst->byzantine_fraction) worst = &t;
  std::vector<dht::PeerIndex> honest;
  for (const auto& p : worst->peers)
    if (!p.byzantine()) honest.push_back(p.index);
  if (honest.empty()) throw ConfigError("field 'byzantine_fraction' leaves no honest requester");
  algebra::Drbg rng = algebra::Drbg(c.seed).fork("workload", 0);
  std::vector<std::pair<dht::PeerIndex, dht::KeyId>> work;
  for (std::uint32_t i = 0; i < c.lookups; ++i) {
    auto p = honest[rng.uniform(honest.size())];
    work.emplace_back(p, rng() & worst->ring.mask());
  }
  return work;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace detail

inline constexpr std::string_view kRangeHeader =
    "fraction,byzantine,lookups,failures,observed,mean_candidate_fraction,contained";

// Mean size of the interval the colluding adversary narrows each key down to.
// An empty adversary leaves the whole ring (fraction 1).
inline AttackReport range_attack(const RunConfig& c, const std::vector<double>& fractions) {
  AttackReport rep{std::string(kRangeHeader), {}};
  auto topos = detail::nested_topologies(c, fractions);
  auto work = detail::shared_workload(topos, c);
  for (std::size_t fi = 0; fi < topos.size(); ++fi) {
    detail::with_group(c.group, [&](auto g) {
      auto w = protocols::build_world(std::move(g), topos[fi], c.seed);
      protocols::Engine<std::decay_t<decltype(w.g)>> e(w, c.opts, NetConfig{c.d_max}, c.seed);
      std::size_t failures = 0, observed = 0, contained = 0;
      double sum = 0;
      for (std::uint64_t i = 0; i < work.size(); ++i) {
        auto [p, key] = work[i];
        if (!e.lookup(c.protocol, p, key, i).correct()) ++failures;
        auto seen = e.observations().for_lookup(i);
        auto est = adversary::range_estimate(seen, w.topo);
        if (!dht::full_ring(est)) ++observed;
        if (dht::contains(w.topo.ring, est, key)) ++contained;
        sum += dht::fraction(w.topo.ring, est);
      }
      std::size_t byz = 0;
      for (const auto& p : w.topo.peers) byz += p.byzantine();
      const double mean = work.empty() ? 1.0 : sum / static_cast<double>(work.size());
      rep.rows.push_back(detail::fmt(fractions[fi]) + ',' + std::to_string(byz) + ',' + std::to_string(work.size()) +
                         ',' + std::to_string(failures) + ',' + std::to_string(observed) + ',' + detail::fmt(mean) +
                         ',' + std::to_string(contained));
    });
  }
  return rep;
}

inline constexpr std::string_view kChainLenHeader = "fraction,pad_chain,lookups,failures,observations,hit_rate";

// How often the chain length seen by a controlled peer gives away the
// remaining distance bucket. Needs a chain-carrying protocol.
inline AttackReport chainlen_attack(const RunConfig& c, const std::vector<double>& fractions) {
  if (!protocols::uses_chain(c.protocol)) throw ConfigError("field 'protocol' must be rcp2 or rcpqp2 for chainlen");
  AttackReport rep{std::string(kChainLenHeader), {}};
  auto topos = detail::nested_topologies(c, fractions);
  auto work = detail::shared_workload(topos, c);
  for (std::size_t fi = 0; fi < topos.size(); ++fi) {
    detail::with_group(c.group, [&](auto g) {
      auto w = protocols::build_world(std::move(g), topos[fi], c.seed);
      algebra::Drbg mrng = algebra::Drbg(c.seed).fork("model", 0);
      auto model = adversary::build_chain_length_model(w.topo, 4000, mrng);
      protocols::Engine<std::decay_t<decltype(w.g)>> e(w, c.opts, NetConfig{c.d_max}, c.seed);
      std::map<std::uint64_t, dht::QuorumId> owners;
      std::size_t failures = 0;
      for (std::uint64_t i = 0; i < work.size(); ++i) {
        auto [p, key] = work[i];
        owners[i] = w.topo.owner(key);
        if (!e.lookup(c.protocol, p, key, i).correct()) ++failures;
      }
      std::size_t seen = 0;
      for (const auto& o : e.observations().entries) seen += o.kind == adversary::ObservationKind::hop && o.chain_length >= 0;
      auto hit = adversary::chain_inference_hit_rate(model, e.observations(), w.topo,
                                                     [&](std::uint64_t id) { return owners.at(id); });
      rep.rows.push_back(detail::fmt(fractions[fi]) + ',' + std::to_string(c.opts.pad_chain) + ',' +
                         std::to_string(work.size()) + ',' + std::to_string(failures) + ',' + std::to_string(seen) +
                         ',' + detail::fmt(hit));
    });
  }
  return rep;
}

inline constexpr std::string_view kCrawlHeader =
    "variant,target,rt_size,entries,authorizations,interactions,ot_runs,max_entries_per_authorization,leakage,messages";

// One authorised attacker in quorum 0 harvesting a neighbour's table, once per
// variant. The signed-OT row is the countermeasure.
inline AttackReport crawl_attack(const RunConfig& c) {
  AttackReport rep{std::string(kCrawlHeader), {}};
  detail::with_group(c.group, [&](auto g) {
    auto w = protocols::build_world(std::move(g), dht::build_topology(topology_params(c)), c.seed);
    dht::PeerIndex attacker = w.topo.quorum(0).members.front();
    for (auto p : w.topo.quorum(0).members)
      if (!w.topo.peer(p).byzantine()) {
        attacker = p;
        break;
      }
    using adversary::CrawlVariant;
    for (auto v : {CrawlVariant::trivial_pir, CrawlVariant::qp1, CrawlVariant::qp1_signed, CrawlVariant::qp2}) {
      auto opts = c.opts;
      opts.sign_ot_request = v == CrawlVariant::qp1_signed;
      protocols::Engine<std::decay_t<decltype(w.g)>> e(w, opts, NetConfig{c.d_max}, c.seed);
      algebra::Drbg rng = algebra::Drbg(c.seed).fork("crawl", static_cast<std::uint64_t>(v));
      auto r = adversary::crawl_rt(e, attacker, v, rng);
      std::uint32_t most = 0;
      for (auto x : r.entries_per_authorization) most = std::max(most, x);
      rep.rows.push_back(std::string(adversary::crawl_variant_name(v)) + ',' + std::to_string(r.target) + ',' +
                         std::to_string(r.rt_size) + ',' + std::to_string(r.entries) + ',' +
                         std::to_string(r.authorizations) + ',' + std::to_string(r.interactions) + ',' +
                         std::to_string(r.ot_runs) + ',' + std::to_string(most) + ',' + detail::fmt(r.leakage()) +
                         ',' + std::to_string(r.messages));
    }
  });
  return rep;
}

}  // namespace qpdht::simnet
