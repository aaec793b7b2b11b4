#pragma once

#include <set>

#include "qpdht/protocols/engine.hpp"

namespace qpdht::adversary {

enum class CrawlVariant { trivial_pir, qp1, qp1_signed, qp2 };

inline std::string_view crawl_variant_name(CrawlVariant v) {
  switch (v) {
    case CrawlVariant::trivial_pir: return "trivial-pir";
    case CrawlVariant::qp1: return "rcpqp1";
    case CrawlVariant::qp1_signed: return "rcpqp1+signed-ot";
    case CrawlVariant::qp2: return "rcpqp2";
  }
  return "?";
}

struct CrawlReport {
  CrawlVariant variant = CrawlVariant::qp1;
  dht::QuorumId target = 0;
  std::uint32_t rt_size = 0;
  std::uint32_t entries = 0;          // distinct genuine entries recovered
  std::uint32_t authorizations = 0;   // rule-set admissions spent
  std::uint32_t interactions = 0;     // hop interactions with the target
  std::uint32_t ot_runs = 0;          // OT responses obtained
  std::vector<std::uint32_t> entries_per_authorization;
  std::uint64_t messages = 0;

  double fraction() const { return rt_size ? static_cast<double>(entries) / rt_size : 0.0; }
  // RT entries per unit of attacker work (interactions + OT executions).
  double leakage() const {
    auto work = interactions + ot_runs;
    return work ? static_cast<double>(entries) / work : 0.0;
  }
};

namespace detail {

template <algebra::PrimeOrderGroup G>
struct Offer {
  ot::OtSetupPublic<G> setup;
  std::vector<dht::Range> ranges;
  ot::EncryptedRt enc;
};

template <algebra::PrimeOrderGroup G>
std::optional<Offer<G>> parse_offer(const G& g, ByteView payload) {
  try {
    std::optional<ot::OtSetupPublic<G>> s;
    std::optional<std::vector<dht::Range>> r;
    std::optional<ot::EncryptedRt> e;
    for (const auto& f : wire::parse_bundle(payload)) {
      if (f.tag == wire::Tag::ot_setup) s = ot::decode_setup(g, wire::frame(f.tag, f.body));
      if (f.tag == wire::Tag::rt_ranges) r = protocols::decode_ranges(f.body);
      if (f.tag == wire::Tag::enc_rt) e = ot::decode_enc_rt(wire::frame(f.tag, f.body));
    }
    if (!s || !r || !e) return std::nullopt;
    return Offer<G>{*s, *r, *e};
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline const wire::Frame* find(const std::vector<wire::Frame>& parts, wire::Tag t) {
  for (const auto& f : parts)
    if (f.tag == t) return &f;
  return nullptr;
}

template <algebra::PrimeOrderGroup G>
std::optional<Bytes> fetch_index(const G& g, const Offer<G>& offer, const ot::OtChooser<G>& ch, ByteView reply) {
  try {
    auto parts = wire::parse_bundle(reply);
    auto* f = find(parts, wire::Tag::ot_response);
    if (!f) return std::nullopt;
    auto resp = ot::decode_response(wire::frame(f->tag, f->body));
    auto key = algebra::SymKey::from(ot::ot_decrypt(g, offer.setup, ch, resp));
    return ot::decrypt_rt_entry(offer.enc, ch.rho, key);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

// An authorised requester at home quorum H tries to harvest the routing
// table of H's first out-neighbour. The engine's members behave honestly;
// the attacker deviates only in what it asks for.
template <algebra::PrimeOrderGroup G>
CrawlReport crawl_rt(protocols::Engine<G>& e, dht::PeerIndex attacker, CrawlVariant variant, algebra::Drbg& rng) {
  using namespace protocols;
  const auto& w = e.world();
  const auto& g = w.g;
  const auto home = w.topo.peer(attacker).quorum;
  CrawlReport rep;
  rep.variant = variant;
  rep.target = w.topo.quorum(home).rt.front().target;
  const auto& tq = w.topo.quorum(rep.target);
  const auto nu = static_cast<std::uint32_t>(tq.rt.size());
  rep.rt_size = nu;
  const auto before = e.metrics().sent;

  if (variant == CrawlVariant::trivial_pir) {
    // the whole table in one reply, no OT
    rep.entries = nu;
    rep.authorizations = 1;
    rep.interactions = 1;
    rep.entries_per_authorization = {nu};
    return rep;
  }

  std::set<Bytes> learned;
  auto genuine = [&](const Bytes& plain) {
    const auto& table = w.keys[rep.target].rt_plain;
    return std::find(table.begin(), table.end(), plain) != table.end();
  };
  auto signed_genuine = [&](const Bytes& s) {
    const auto& table = w.keys[rep.target].rt_signed;
    return std::find(table.begin(), table.end(), s) != table.end();
  };
  const auto timeout = e.network().base_timeout();

  // a fresh authorization: new ts, so a new request tag
  auto authorize = [&]() {
    e.network().advance_to((e.network().round() + 1) * e.network().round_length());
    auto h = e.authorize_at_home(attacker);
    if (h.ok) ++rep.authorizations;
    return h;
  };

  if (variant == CrawlVariant::qp2) {
    auto h = authorize();
    if (!h.ok) return rep;
    Chain chain{auth_message(attacker, w.topo.peer(attacker).addr, h.ts), h.sigma, {}};
    auto chain_frame = encode_chain_msg(home, chain);
    std::uint32_t got = 0;
    // one index per peer: each member answers one OT per chain
    for (std::uint32_t rho = 1; rho <= nu && rho <= tq.members.size(); ++rho) {
      auto peer = tq.members[rho - 1];
      ++rep.interactions;
      auto r1 = e.exchange(attacker, {{peer, wire::bundle({chain_frame, wire::frame(wire::Tag::ot_init, {})})}}, timeout);
      if (r1.empty()) continue;
      auto offer = detail::parse_offer(g, r1[0].payload);
      if (!offer) continue;
      auto [req, ch] = ot::ot_request(g, offer->setup, rho, rng);
      auto r2 = e.exchange(attacker, {{peer, wire::bundle({chain_frame, ot::encode_request(g, req)})}}, timeout);
      if (r2.empty()) continue;
      auto s = detail::fetch_index(g, *offer, ch, r2[0].payload);
      if (!s) continue;
      ++rep.ot_runs;
      if (signed_genuine(*s) && learned.insert(*s).second) ++got;
    }
    rep.entries_per_authorization.push_back(got);
    rep.entries = static_cast<std::uint32_t>(learned.size());
    rep.messages = e.metrics().sent - before;
    return rep;
  }

  const bool signed_ot = variant == CrawlVariant::qp1_signed;
  // keep authorizing until the table is complete or the rule set stops us
  for (std::uint32_t attempt = 0; attempt < nu && learned.size() < nu; ++attempt) {
    auto h = authorize();
    if (!h.ok) break;
    AuthReq a{attacker, w.topo.peer(attacker).addr, e.network().round(), home, h.ts, h.sigma};
    auto auth_frame = a.frame();
    ++rep.interactions;
    auto r1 = e.exchange(attacker, e.to_quorum(rep.target, wire::bundle({auth_frame, wire::frame(wire::Tag::ot_init, {})})),
                         timeout);
    std::optional<detail::Offer<G>> offer;
    for (const auto& r : r1)
      if ((offer = detail::parse_offer(g, r.payload))) break;
    if (!offer) break;

    // one OT request per index, each to a different member, all in parallel
    // start from an index not learned yet
    std::vector<std::pair<ot::OtRequest<G>, ot::OtChooser<G>>> reqs;
    for (std::uint32_t i = 0; i < nu; ++i) reqs.push_back(ot::ot_request(g, offer->setup, (attempt + i) % nu + 1, rng));

    std::vector<Bytes> endorsements(nu);
    if (signed_ot) {
      for (std::uint32_t i = 0; i < nu; ++i) {
        auto pk1 = g.encode(reqs[i].first.pk1);
        auto rs = e.exchange(attacker,
                             e.to_quorum(rep.target, wire::bundle({auth_frame, wire::frame(wire::Tag::ot_sign_req, pk1)})),
                             timeout);
        std::vector<std::pair<std::uint32_t, Bytes>> shares;
        for (const auto& r : rs) {
          auto parts = wire::parse_bundle(r.payload);
          if (auto* f = detail::find(parts, wire::Tag::ot_endorse)) {
            ByteReader br(f->body);
            auto s = threshold::decode_share(g, br);
            shares.emplace_back(s.index, g.encode(s.sigma));
          }
        }
        endorsements[i] = encode_share_list(shares);
      }
    }

    std::vector<std::pair<dht::PeerIndex, Bytes>> out;
    for (std::uint32_t i = 0; i < nu && i < tq.members.size(); ++i) {
      std::vector<Bytes> frames{auth_frame};
      if (signed_ot) frames.push_back(wire::frame(wire::Tag::ot_endorse, endorsements[i]));
      frames.push_back(ot::encode_request(g, reqs[i].first));
      out.emplace_back(tq.members[i], wire::bundle(frames));
    }
    auto r2 = e.exchange(attacker, out, timeout);
    std::uint32_t got = 0;
    for (const auto& r : r2) {
      auto i = static_cast<std::uint32_t>(
          std::find(tq.members.begin(), tq.members.end(), r.from) - tq.members.begin());
      auto s = detail::fetch_index(g, *offer, reqs[i].second, r.payload);
      if (!s) continue;
      ++rep.ot_runs;
      if (genuine(*s) && learned.insert(*s).second) ++got;
    }
    rep.entries_per_authorization.push_back(got);
    if (!signed_ot) break;  // one authorization is all it takes
  }
  rep.entries = static_cast<std::uint32_t>(learned.size());
  rep.messages = e.metrics().sent - before;
  return rep;
}

struct WalkReport {
  std::uint32_t steps = 0;
  std::uint32_t visited = 1;  // quorums interacted with, home included
  std::uint32_t interactions = 0;
  std::uint32_t entries = 0;
  std::uint32_t trivial_pir_entries = 0;  // what the same walk leaks under trivial PIR
};

// Weak crawling: the attacker keeps mutating its key to step one quorum
// further round the ring, paying one hop interaction per new quorum.
template <algebra::PrimeOrderGroup G>
WalkReport key_mutation_walk(protocols::Engine<G>& e, dht::PeerIndex attacker, std::uint32_t steps) {
  using namespace protocols;
  const auto& w = e.world();
  const auto m = static_cast<std::uint32_t>(w.topo.quorum_count());
  const auto home = w.topo.peer(attacker).quorum;
  WalkReport rep;
  rep.steps = steps;
  rep.trivial_pir_entries = static_cast<std::uint32_t>(w.topo.quorum(home).rt.size());
  if (steps == 0 || m < 2) return rep;
  auto h = e.authorize_at_home(attacker);
  if (!h.ok) return rep;
  QuorumId prev_q = home;
  std::uint64_t prev_ts = h.ts;
  Bytes prev_sigma = h.sigma;
  std::set<QuorumId> seen{home};
  for (std::uint32_t s = 0; s < steps && s + 1 < m; ++s) {
    const QuorumId next = (home + s + 1) % m;
    const KeyId key = w.topo.quorum((next + 1) % m).arc.lower;
    auto hop = e.quorum_hop(Protocol::rcpqp1, attacker, next, {prev_q, prev_ts, prev_sigma}, key);
    ++rep.interactions;
    if (!hop.ok) break;
    seen.insert(next);
    ++rep.entries;
    rep.trivial_pir_entries += static_cast<std::uint32_t>(w.topo.quorum(next).rt.size());
    prev_q = hop.proof->quorum;
    prev_ts = hop.proof->ts;
    prev_sigma = hop.proof->sigma;
  }
  rep.visited = static_cast<std::uint32_t>(seen.size());
  return rep;
}

}  // namespace qpdht::adversary
