#pragma once

#include <map>
#include <set>

#include "qpdht/dht/topology.hpp"
#include "qpdht/protocols/messages.hpp"
#include "qpdht/threshold/dkg.hpp"
#include "qpdht/threshold/signature.hpp"

namespace qpdht::protocols {

template <algebra::PrimeOrderGroup G>
struct QuorumKeys {
  threshold::DkgOutput<G> dkg;
  std::vector<Bytes> rt_plain;               // WireEntry encodings, entry j at j-1
  std::vector<Bytes> rt_signed;              // entry || sigma under this quorum
  std::map<QuorumId, Bytes> in_links;        // [PK_k]_{sk_this} for in-neighbours k
  Bytes self_link;                           // [PK_this]_{sk_this}, used for chain padding
};

// A topology with key material: one DKG per quorum, signed tables and the
// signed in-links that the chain-based variants hand out.
template <algebra::PrimeOrderGroup G>
struct World {
  G g;
  dht::Topology topo;
  threshold::SimulatedPairing<G> pairing;
  std::vector<QuorumKeys<G>> keys;
  std::vector<std::set<QuorumId>> in_neighbors;

  const typename G::Element& pk(QuorumId q) const { return keys.at(q).dkg.pk; }
  Bytes pk_bytes(QuorumId q) const { return g.encode(pk(q)); }
  std::uint32_t threshold(QuorumId q) const { return keys.at(q).dkg.t; }
  const typename G::Scalar& sk_share(PeerIndex p) const {
    const auto& peer = topo.peer(p);
    return keys.at(peer.quorum).dkg.sk_shares.at(peer.member_index - 1);
  }
  const typename G::Element& pk_share(QuorumId q, std::uint32_t member_index) const {
    return keys.at(q).dkg.pk_shares.at(member_index - 1);
  }
};

template <algebra::PrimeOrderGroup G>
World<G> build_world(G g, dht::Topology topo, std::uint64_t seed) {
  World<G> w{g, std::move(topo), threshold::SimulatedPairing<G>(g), {}, {}};
  algebra::Drbg rng(seed);
  const auto m = w.topo.quorum_count();
  w.keys.reserve(m);
  for (QuorumId q = 0; q < m; ++q) {
    auto dkg_rng = rng.fork("dkg", q);
    auto size = static_cast<std::uint32_t>(w.topo.quorum(q).members.size());
    w.keys.push_back(QuorumKeys<G>{threshold::dkg_run(g, size, w.topo.threshold(q), dkg_rng, {}, &w.pairing), {}, {}, {}, {}});
  }
  // Full-key signing below stands in for one threshold-signing round per
  // item at setup time; the result is the same signature.
  auto sk_of = [&](QuorumId q) { return *w.pairing.dlog(w.keys[q].dkg.pk); };
  w.in_neighbors.assign(m, {});
  for (QuorumId q = 0; q < m; ++q) {
    const auto& quorum = w.topo.quorum(q);
    auto sk = sk_of(q);
    for (const auto& e : quorum.rt) {
      WireEntry we;
      we.target = e.target;
      we.p = e.p;
      we.p_id = w.topo.peer(e.p).id;
      we.p_addr = w.topo.peer(e.p).addr;
      we.p_prev = e.p_prev;
      we.p_prev_id = w.topo.peer(e.p_prev).id;
      we.pk = w.pk_bytes(e.target);
      we.range = e.range;
      we.ts = e.ts;
      auto plain = we.encode();
      auto sigma = threshold::sign_full(g, sk, signed_entry_message(q, plain));
      w.keys[q].rt_signed.push_back(encode_signed_entry(plain, g.encode(sigma)));
      w.keys[q].rt_plain.push_back(std::move(plain));
      w.in_neighbors[e.target].insert(q);
    }
    w.keys[q].self_link = g.encode(threshold::sign_full(g, sk, w.pk_bytes(q)));
  }
  for (QuorumId q = 0; q < m; ++q) {
    auto sk = sk_of(q);
    for (auto k : w.in_neighbors[q]) w.keys[q].in_links[k] = g.encode(threshold::sign_full(g, sk, w.pk_bytes(k)));
  }
  return w;
}

}  // namespace qpdht::protocols
