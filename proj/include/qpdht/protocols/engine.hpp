#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>

#include "qpdht/adversary/observation.hpp"
#include "qpdht/ot/messages.hpp"
#include "qpdht/ot/private_fetch.hpp"
#include "qpdht/protocols/majority.hpp"
#include "qpdht/protocols/rule_set.hpp"
#include "qpdht/protocols/world.hpp"
#include "qpdht/simnet/network.hpp"

namespace qpdht::protocols {

enum class Protocol { rcp1, rcpqp1, rcp2, rcpqp2 };

inline std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::rcp1: return "rcp1";
    case Protocol::rcpqp1: return "rcpqp1";
    case Protocol::rcp2: return "rcp2";
    case Protocol::rcpqp2: return "rcpqp2";
  }
  return "?";
}

inline Protocol parse_protocol(std::string_view s) {
  for (auto p : {Protocol::rcp1, Protocol::rcpqp1, Protocol::rcp2, Protocol::rcpqp2})
    if (protocol_name(p) == s) return p;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected rcp1, rcpqp1, rcp2 or rcpqp2)");
}

inline bool uses_ot(Protocol p) { return p == Protocol::rcpqp1 || p == Protocol::rcpqp2; }
inline bool uses_chain(Protocol p) { return p == Protocol::rcp2 || p == Protocol::rcpqp2; }

struct ProtocolOptions {
  bool final_step_ot = false;
  bool sign_ot_request = false;
  std::uint32_t pad_chain = 0;
  RuleSet rules;
  std::uint64_t chain_window_rounds = 1000;
};

enum class LookupStatus { ok, rejected_at_source, hop_rejected, failed };

inline std::string_view status_name(LookupStatus s) {
  switch (s) {
    case LookupStatus::ok: return "ok";
    case LookupStatus::rejected_at_source: return "rejected";
    case LookupStatus::hop_rejected: return "hop_rejected";
    case LookupStatus::failed: return "failed";
  }
  return "?";
}

struct LookupResult {
  LookupStatus status = LookupStatus::failed;
  Protocol protocol = Protocol::rcp1;
  PeerIndex requester = 0;
  KeyId key = 0;
  QuorumId start = 0;
  QuorumId owner = 0;
  QuorumId dest = kNoQuorum;
  std::vector<QuorumId> path;
  std::vector<PeerIndex> delivered_to;  // D
  std::uint32_t retries = 0;
  std::uint32_t chain_length = 0;       // links in the final chain, -II only
  std::uint32_t ot_runs = 0;
  std::uint64_t requester_exps = 0;
  std::uint64_t latency = 0;
  simnet::Metrics metrics;
  std::string error;

  std::uint32_t hops() const { return static_cast<std::uint32_t>(path.size()); }
  bool correct() const { return status == LookupStatus::ok && dest == owner; }
};

// Proof-timestamp windows for the -I variants, in rounds.
inline constexpr std::uint64_t kTsSlack = 1;
inline constexpr std::uint64_t kPrevProofRounds = 5;

// All peers of one world as event-driven state machines, plus requester-side
// drivers for the four lookup protocols.
template <algebra::PrimeOrderGroup G>
class Engine {
 public:
  using Element = typename G::Element;
  using Scalar = typename G::Scalar;

  Engine(const World<G>& world, ProtocolOptions opts, simnet::NetConfig net, std::uint64_t seed,
         bool capture_payloads = false)
      : w_(world),
        opts_(opts),
        seed_rng_(seed),
        transcript_(capture_payloads),
        net_(net, seed_rng_.fork("net", 0), &metrics_, &transcript_) {
    members_.reserve(w_.topo.peers.size());
    for (const auto& p : w_.topo.peers) members_.emplace_back(RuleSetState(opts_.rules), seed_rng_.fork("bogus", p.index));
    select_rng_.emplace(seed_rng_.fork("select", ~0ULL));
    ot_rng_.emplace(seed_rng_.fork("ot", ~0ULL));
    net_.set_drop_filter([this](simnet::PeerId p) { return w_.topo.peer(p).behavior == dht::Behavior::drop; });
  }

  const World<G>& world() const { return w_; }
  const ProtocolOptions& options() const { return opts_; }
  simnet::Network& network() { return net_; }
  simnet::Metrics& metrics() { return metrics_; }
  simnet::Transcript& transcript() { return transcript_; }
  adversary::ObservationLog& observations() { return log_; }
  void set_lookup_id(std::uint64_t id) { lookup_id_ = id; }

  std::vector<simnet::Reply> exchange(PeerIndex from, const std::vector<std::pair<PeerIndex, Bytes>>& out,
                                      std::uint64_t timeout) {
    return net_.exchange(from, out, timeout,
                         [this](simnet::PeerId to, simnet::PeerId src, ByteView p) { return handle(to, src, p); });
  }

  std::vector<std::pair<PeerIndex, Bytes>> to_quorum(QuorumId q, const Bytes& payload, PeerIndex except = ~0u) const {
    std::vector<std::pair<PeerIndex, Bytes>> out;
    for (auto m : w_.topo.quorum(q).members)
      if (m != except) out.emplace_back(m, payload);
    return out;
  }

  // ---------------------------------------------------------------- members

  std::optional<Bytes> handle(PeerIndex to, PeerIndex from, ByteView payload) {
    std::vector<wire::Frame> parts;
    try {
      parts = wire::parse_bundle(payload);
    } catch (const DecodeError&) {
      return wire::bundle({reject_frame("malformed")});
    }
    const wire::Frame* auth = find(parts, wire::Tag::auth_req);
    const wire::Frame* chain = find(parts, wire::Tag::chain_msg);
    if (!auth && !chain) return wire::bundle({reject_frame("no authorization")});
    find_final_ = find(parts, wire::Tag::final_deliver) != nullptr;
    auto check = check_auth(to, from, auth ? *auth : *chain, auth != nullptr);
    if (!check.ok) return wire::bundle({reject_frame(check.why)});

    const auto& peer = w_.topo.peer(to);
    auto& st = members_[to];
    const QuorumId q = peer.quorum;
    const bool second = find(parts, wire::Tag::key_query) || find(parts, wire::Tag::ot_request) ||
                        find(parts, wire::Tag::share_filter_req) || find(parts, wire::Tag::ot_sign_req) ||
                        find(parts, wire::Tag::final_deliver);
    const bool final = find(parts, wire::Tag::final_deliver) != nullptr;
    std::vector<wire::Frame> out;

    if (!second) {
      if (auth) {
        auto m = auth_message(check.requester, check.addr, check.ts);
        auto share = threshold::sign_share(w_.g, peer.member_index, w_.sk_share(to), m);
        out.push_back({wire::Tag::sig_share, threshold::encode_share(w_.g, share)});
      } else {
        out.push_back({wire::Tag::chain_msg, w_.keys[q].in_links.at(check.prev)});
      }
    }
    if (final) out.push_back({wire::Tag::final_deliver, Bytes{1}});

    for (const auto& f : parts) {
      switch (f.tag) {
        case wire::Tag::ot_init: {
          auto& res = reserve(st, q, check.tag, final);
          out.push_back(unframe_body(ot::encode_setup(w_.g, res.setup.pub)));
          out.push_back(unframe_body(encode_ranges(final ? bucket_ranges(q) : dht::rt_ranges(w_.topo.quorum(q)))));
          auto enc = ot::encrypt_rt(table_for(q, auth != nullptr, final), w_.keys[q].dkg.prf_key, check.tag).first;
          out.push_back(unframe_body(ot::encode_enc_rt(enc)));
          break;
        }
        case wire::Tag::key_query: {
          ByteReader r(f.body);
          KeyId key = r.u64();
          auto idx = dht::rt_index_for_key(w_.topo, q, key);
          out.push_back({wire::Tag::rt_entry, auth ? w_.keys[q].rt_plain[idx - 1] : w_.keys[q].rt_signed[idx - 1]});
          break;
        }
        case wire::Tag::share_filter_req: {
          std::vector<std::uint32_t> valid;
          for (const auto& [idx, sig] : decode_share_list(f.body)) {
            if (idx < 1 || idx > w_.topo.quorum(q).members.size()) continue;
            try {
              threshold::SignatureShare<G> s{idx, w_.g.decode(sig)};
              if (threshold::verify_share(w_.pairing, w_.pk_share(q, idx),
                                          auth_message(check.requester, check.addr, check.ts), s))
                valid.push_back(idx);
            } catch (const Error&) {
            }
          }
          out.push_back(unframe_body(encode_index_list(valid)));
          break;
        }
        case wire::Tag::ot_sign_req: {
          auto it = st.endorsed.find(check.tag);
          if (it != st.endorsed.end() && it->second != f.body) {
            out.push_back(unframe_body(reject_frame("already endorsed another request")));
            break;
          }
          st.endorsed[check.tag] = f.body;
          auto share = threshold::sign_share(w_.g, peer.member_index, w_.sk_share(to), endorse_message(check.tag, f.body));
          out.push_back({wire::Tag::ot_endorse, threshold::encode_share(w_.g, share)});
          break;
        }
        case wire::Tag::ot_request: {
          auto it = st.reservations.find(check.tag);
          if (it == st.reservations.end() || it->second.answered) {
            out.push_back(unframe_body(reject_frame("no OT reservation")));
            break;
          }
          if (opts_.sign_ot_request && auth && !it->second.bucket) {
            const auto* endorse = find(parts, wire::Tag::ot_endorse);
            if (!endorse || !endorsement_valid(q, check.tag, f.body, endorse->body)) {
              out.push_back(unframe_body(reject_frame("OT request not endorsed")));
              break;
            }
          }
          ot::OtRequest<G> req{w_.g.identity()};
          try {
            req = ot::decode_request(w_.g, wire::frame(wire::Tag::ot_request, f.body));
          } catch (const Error&) {
            out.push_back(unframe_body(reject_frame("malformed OT request")));
            break;
          }
          it->second.answered = true;
          const auto& prf = w_.keys[q].dkg.prf_key;
          auto keys = ot::encrypt_rt(table_for(q, auth != nullptr, it->second.bucket), prf, check.tag).second;
          std::vector<Bytes> strings;
          for (const auto& k : keys) strings.emplace_back(k.bytes.begin(), k.bytes.end());
          auto resp = ot::ot_respond(w_.g, it->second.setup, req, strings, ot::ot_nonce_for(prf, check.tag));
          out.push_back(unframe_body(ot::encode_response(resp)));
          break;
        }
        default:
          break;
      }
    }
    corrupt(peer.behavior, st, out);
    std::vector<Bytes> frames;
    for (const auto& f : out) frames.push_back(wire::frame(f.tag, f.body));
    return wire::bundle(frames);
  }

  // ------------------------------------------------------------- requesters

  struct HomeProof {
    bool ok = false;
    bool rejected = false;
    std::uint64_t ts = 0;
    Bytes sigma;
  };

  // Initial step: every other member of p's quorum checks the rule set and
  // returns a share on [p|p_addr|ts]; p verifies them against PK-hat.
  HomeProof authorize_at_home(PeerIndex p) {
    const auto& peer = w_.topo.peer(p);
    const QuorumId q1 = peer.quorum;
    AuthReq a{p, peer.addr, net_.round(), kNoQuorum, 0, {}};
    auto payload = wire::bundle({a.frame()});
    auto replies = exchange(p, to_quorum(q1, payload, p), net_.base_timeout());
    auto m = auth_message(p, peer.addr, a.ts);
    std::vector<threshold::SignatureShare<G>> valid{threshold::sign_share(w_.g, peer.member_index, w_.sk_share(p), m)};
    std::size_t rejects = 0;
    for (const auto& r : replies) {
      auto parts = safe_parse(r.payload);
      if (find(parts, wire::Tag::reject)) ++rejects;
      for (const auto& f : parts) {
        if (f.tag != wire::Tag::sig_share) continue;
        auto s = decode_share_opt(f.body);
        if (!s) continue;
        const auto& sender = w_.topo.peer(r.from);
        if (s->index == sender.member_index && threshold::verify_share(w_.pairing, w_.pk_share(q1, s->index), m, *s))
          valid.push_back(*s);
      }
    }
    HomeProof out;
    out.ts = a.ts;
    const auto size = w_.topo.quorum(q1).members.size();
    if (rejects * 2 > size || valid.size() < w_.threshold(q1) + 1) {
      out.rejected = rejects * 2 > size;
      return out;
    }
    out.sigma = w_.g.encode(threshold::combine(w_.g, valid, w_.threshold(q1), m).sigma);
    out.ok = true;
    return out;
  }

  LookupResult lookup(Protocol proto, PeerIndex p, KeyId key, std::uint64_t lookup_id) {
    lookup_id_ = lookup_id;
    net_.set_rng(seed_rng_.fork("net", lookup_id));
    select_rng_.emplace(seed_rng_.fork("select", lookup_id));
    ot_rng_.emplace(seed_rng_.fork("ot", lookup_id));
    const auto before = metrics_;
    const auto start_time = net_.now();
    algebra::ExpScope scope;
    transcript_.note("lookup " + std::to_string(lookup_id) + " " + std::string(protocol_name(proto)) +
                     " requester=" + std::to_string(p) + " key=" + std::to_string(key));

    LookupResult res;
    res.protocol = proto;
    res.requester = p;
    res.key = key;
    res.start = w_.topo.peer(p).quorum;
    res.owner = w_.topo.owner(key);
    try {
      if (uses_chain(proto))
        run_chain(proto, p, key, res);
      else
        run_quorum(proto, p, key, res);
    } catch (const Error& e) {
      res.status = LookupStatus::failed;
      res.error = e.what();
    }
    res.metrics = metrics_ - before;
    res.requester_exps = scope.delta() - res.metrics.responder_exps;
    res.latency = net_.now() - start_time;
    transcript_.note("result " + std::to_string(lookup_id) + " " + std::string(status_name(res.status)) +
                     " dest=" + std::to_string(res.dest) + " hops=" + std::to_string(res.hops()));
    return res;
  }

 private:
  struct AuthCheck {
    bool ok = false;
    std::string why;
    Bytes tag;
    PeerIndex requester = 0;
    std::string addr;
    std::uint64_t ts = 0;
    QuorumId prev = kNoQuorum;
  };

  struct Reservation {
    ot::OtSetup<G> setup;
    bool bucket = false;
    bool answered = false;
  };

  struct MemberState {
    MemberState(RuleSetState r, algebra::Drbg b) : rules(std::move(r)), bogus_rng(std::move(b)) {}
    RuleSetState rules;
    algebra::Drbg bogus_rng;
    std::map<Bytes, AuthCheck> auth_cache;
    std::uint64_t epoch = 0;
    std::size_t reserved = 0;
    std::optional<ot::OtSetup<G>> setup;
    std::map<Bytes, Reservation> reservations;
    std::map<Bytes, Bytes> endorsed;
  };

  static const wire::Frame* find(const std::vector<wire::Frame>& parts, wire::Tag t) {
    for (const auto& f : parts)
      if (f.tag == t) return &f;
    return nullptr;
  }
  static std::vector<wire::Frame> safe_parse(ByteView payload) {
    try {
      return wire::parse_bundle(payload);
    } catch (const DecodeError&) {
      return {};
    }
  }
  static wire::Frame unframe_body(const Bytes& framed) { return wire::unframe(framed); }

  std::optional<threshold::SignatureShare<G>> decode_share_opt(ByteView body) const {
    try {
      ByteReader r(body);
      auto s = threshold::decode_share(w_.g, r);
      r.expect_end();
      return s;
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  std::optional<Element> decode_element(ByteView b) const {
    try {
      return w_.g.decode(b);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  bool fresh(std::uint64_t ts, std::uint64_t before, std::uint64_t after) const {
    auto r = net_.round();
    return ts + before >= r && ts <= r + after;
  }

  AuthCheck check_auth(PeerIndex to, PeerIndex from, const wire::Frame& f, bool quorum_proof) {
    const auto& peer = w_.topo.peer(to);
    auto& st = members_[to];
    auto tag = request_tag(f.tag, f.body);
    auto it = st.auth_cache.find(tag);
    if (it != st.auth_cache.end()) {
      if (it->second.requester == from || !it->second.ok) return it->second;
      AuthCheck replay = it->second;
      replay.ok = false;
      replay.why = "requester mismatch";
      return replay;
    }

    AuthCheck c;
    c.tag = tag;
    int chain_len = -1;
    adversary::ObservationKind kind = adversary::ObservationKind::hop;
    try {
      if (quorum_proof) {
        auto a = AuthReq::decode(f.body);
        c.requester = a.requester;
        c.addr = a.addr;
        c.ts = a.ts;
        c.prev = a.prev_quorum;
        if (a.requester != from || a.requester >= w_.topo.peers.size() || w_.topo.peer(a.requester).addr != a.addr) {
          c.why = "requester mismatch";
        } else if (!fresh(a.ts, kTsSlack, kTsSlack)) {
          c.why = "stale timestamp";
        } else if (a.prev_quorum == kNoQuorum) {
          kind = adversary::ObservationKind::home;
          if (w_.topo.peer(a.requester).quorum != peer.quorum)
            c.why = "requester is not a member";
          else if (!st.rules.admit(a.requester, net_.round()))
            c.why = "rule set";
          else
            c.ok = true;
        } else if (!w_.in_neighbors[peer.quorum].count(a.prev_quorum)) {
          c.why = "previous quorum is not an in-neighbour";
        } else if (!fresh(a.prev_ts, kPrevProofRounds, kTsSlack)) {
          c.why = "stale proof";
        } else {
          auto sigma = decode_element(a.prev_sigma);
          c.ok = sigma && threshold::verify(w_.pairing, w_.pk(a.prev_quorum), auth_message(a.requester, a.addr, a.prev_ts),
                                            *sigma);
          if (!c.ok) c.why = "bad proof";
        }
      } else {
        auto [prev, chain] = decode_chain_msg(f.body);
        c.prev = prev;
        chain_len = static_cast<int>(chain.links.size());
        auto m1 = parse_auth_message(chain.m1);
        if (!m1 || m1->requester != from) {
          c.why = "requester mismatch";
        } else if (!fresh(m1->ts, opts_.chain_window_rounds, kTsSlack)) {
          c.requester = m1->requester;
          c.why = "chain expired";
        } else if (!w_.in_neighbors[peer.quorum].count(prev)) {
          c.requester = m1->requester;
          c.why = "previous quorum is not an in-neighbour";
        } else {
          c.requester = m1->requester;
          c.addr = m1->addr;
          c.ts = m1->ts;
          c.ok = verify_chain(prev, chain);
          if (!c.ok) c.why = "bad chain";
        }
      }
    } catch (const Error&) {
      c.ok = false;
      c.why = "malformed authorization";
    }
    if (peer.byzantine()) {
      if (find_final_) kind = adversary::ObservationKind::final;
      log_.entries.push_back(adversary::Observation{to, c.requester, peer.quorum, c.prev, net_.now(), chain_len,
                                                    lookup_id_, kind});
    }
    st.auth_cache.emplace(tag, c);
    return c;
  }

  // Walk from the known in-neighbour key back to Q_1.
  bool verify_chain(QuorumId prev, const Chain& c) const {
    Element cur = w_.pk(prev);
    for (auto it = c.links.rbegin(); it != c.links.rend(); ++it) {
      auto sigma = decode_element(it->sigma);
      if (!sigma || !threshold::verify(w_.pairing, cur, it->payload, *sigma)) return false;
      auto next = decode_element(it->payload);
      if (!next) return false;
      cur = *next;
    }
    auto sigma = decode_element(c.sigma1);
    return sigma && threshold::verify(w_.pairing, cur, c.m1, *sigma);
  }

  bool endorsement_valid(QuorumId q, const Bytes& tag, const Bytes& pk1, const Bytes& list) const {
    std::vector<std::uint32_t> ok;
    auto m = endorse_message(tag, pk1);
    try {
      for (const auto& [idx, sig] : decode_share_list(list)) {
        if (idx < 1 || idx > w_.topo.quorum(q).members.size()) continue;
        if (std::find(ok.begin(), ok.end(), idx) != ok.end()) continue;
        auto s = decode_element(sig);
        if (s && threshold::verify_share(w_.pairing, w_.pk_share(q, idx), m, threshold::SignatureShare<G>{idx, *s}))
          ok.push_back(idx);
      }
    } catch (const DecodeError&) {
      return false;
    }
    return ok.size() * 2 > w_.topo.quorum(q).members.size();
  }

  Reservation& reserve(MemberState& st, QuorumId q, const Bytes& tag, bool bucket) {
    auto it = st.reservations.find(tag);
    if (it != st.reservations.end()) return it->second;
    const std::size_t nu = w_.topo.nu;
    if (!st.setup || st.reserved == nu) {
      ++st.epoch;
      ByteWriter label;
      label.raw(as_view("ot-setup")).u64(st.epoch);
      algebra::Drbg rng(w_.keys[q].dkg.prf_key, label.bytes());
      st.setup = ot::ot_setup(w_.g, nu, rng);
      st.reserved = 0;
    }
    ++st.reserved;
    Reservation r{*st.setup, bucket, false};
    r.setup.uses = 0;
    return st.reservations.emplace(tag, std::move(r)).first->second;
  }

 public:
  // The destination arc split into nu buckets for the final-step OT.
  std::vector<dht::Range> bucket_ranges(QuorumId q) const {
    const auto& arc = w_.topo.quorum(q).arc;
    const std::size_t nu = w_.topo.nu;
    auto len = dht::length(w_.topo.ring, arc);
    std::vector<dht::Range> out;
    for (std::size_t b = 0; b < nu; ++b) {
      auto lo = static_cast<std::uint64_t>(len * b / nu), hi = static_cast<std::uint64_t>(len * (b + 1) / nu);
      out.push_back({w_.topo.ring.wrap(arc.lower + lo), w_.topo.ring.wrap(arc.lower + hi)});
    }
    return out;
  }

  std::vector<Bytes> bucket_table(QuorumId q) const {
    std::vector<Bytes> out;
    for (std::size_t b = 0; b < w_.topo.nu; ++b)
      out.push_back(to_bytes("data:" + std::to_string(q) + ":" + std::to_string(b + 1)));
    return out;
  }

 private:
  std::vector<Bytes> table_for(QuorumId q, bool quorum_proof, bool bucket) const {
    if (bucket) return bucket_table(q);
    return quorum_proof ? w_.keys[q].rt_plain : w_.keys[q].rt_signed;
  }

  void corrupt(dht::Behavior b, MemberState& st, std::vector<wire::Frame>& out) {
    for (auto& f : out) {
      switch (b) {
        case dht::Behavior::bogus_share:
          if (f.tag == wire::Tag::sig_share || f.tag == wire::Tag::ot_endorse) {
            ByteReader r(f.body);
            auto idx = r.u32();
            ByteWriter bw;
            bw.u32(idx).raw(w_.g.encode(w_.g.random_element(st.bogus_rng)));
            f.body = bw.take();
          } else if (f.tag == wire::Tag::chain_msg) {
            f.body = w_.g.encode(w_.g.random_element(st.bogus_rng));
          } else if (f.tag == wire::Tag::share_filter_resp) {
            std::vector<std::uint32_t> all;
            for (std::uint32_t i = 1; i <= 64; ++i) all.push_back(i);
            f.body = wire::unframe(encode_index_list(all)).body;
          }
          break;
        case dht::Behavior::bogus_rt:
        case dht::Behavior::bogus_ot:
          if (f.tag == wire::Tag::rt_entry && !f.body.empty()) {
            f.body[f.body.size() / 2] ^= 0x5a;
          } else if (b == dht::Behavior::bogus_rt && f.tag == wire::Tag::enc_rt) {
            auto enc = ot::decode_enc_rt(wire::frame(f.tag, f.body));
            for (auto& c : enc.ciphertexts) c.back() ^= 1;
            f.body = wire::unframe(ot::encode_enc_rt(enc)).body;
          } else if (b == dht::Behavior::bogus_ot && f.tag == wire::Tag::ot_response) {
            auto resp = ot::decode_response(wire::frame(f.tag, f.body));
            for (auto& e : resp.e)
              if (!e.empty()) e[0] ^= 0x80;
            f.body = wire::unframe(ot::encode_response(resp)).body;
          }
          break;
        default:
          break;
      }
    }
  }

  // ---------------------------------------------------------- -I variants

  struct Proof {
    QuorumId quorum;
    std::uint64_t ts;
    Bytes sigma;
  };

  AuthReq auth_for(PeerIndex p, const Proof& prev) const {
    return AuthReq{p, w_.topo.peer(p).addr, net_.round(), prev.quorum, prev.ts, prev.sigma};
  }

  static std::size_t count_rejects(const std::vector<simnet::Reply>& replies) {
    std::size_t n = 0;
    for (const auto& r : replies)
      if (find(safe_parse(r.payload), wire::Tag::reject)) ++n;
    return n;
  }

  // OT_SETUP | RT_RANGES | ENC_RT agreed on by a strict majority.
  struct OtOffer {
    ot::OtSetupPublic<G> setup;
    std::vector<dht::Range> ranges;
    ot::EncryptedRt enc;
  };

  std::optional<OtOffer> parse_offer(const std::vector<wire::Frame>& parts) const {
    auto* s = find(parts, wire::Tag::ot_setup);
    auto* r = find(parts, wire::Tag::rt_ranges);
    auto* e = find(parts, wire::Tag::enc_rt);
    if (!s || !r || !e) return std::nullopt;
    try {
      return OtOffer{ot::decode_setup(w_.g, wire::frame(s->tag, s->body)), decode_ranges(r->body),
                     ot::decode_enc_rt(wire::frame(e->tag, e->body))};
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  static Bytes offer_key(const std::vector<wire::Frame>& parts) {
    Bytes k;
    for (auto t : {wire::Tag::ot_setup, wire::Tag::rt_ranges, wire::Tag::enc_rt}) {
      auto* f = find(parts, t);
      if (!f) return {};
      auto fr = wire::frame(f->tag, f->body);
      k.insert(k.end(), fr.begin(), fr.end());
    }
    return k;
  }

  // Majority-filters one body per reply for the given tag.
  static Bytes majority_body(const std::vector<simnet::Reply>& replies, wire::Tag t, std::size_t quorum_size) {
    std::vector<Bytes> bodies;
    for (const auto& r : replies) {
      auto parts = safe_parse(r.payload);
      if (auto* f = find(parts, t)) bodies.push_back(f->body);
    }
    return majority_filter(bodies, quorum_size);
  }

  static Bytes majority_offer(const std::vector<simnet::Reply>& replies, std::size_t quorum_size) {
    std::vector<Bytes> keys;
    for (const auto& r : replies) {
      auto k = offer_key(safe_parse(r.payload));
      if (!k.empty()) keys.push_back(std::move(k));
    }
    return majority_filter(keys, quorum_size);
  }

  // Runs the chooser side against an agreed offer; returns the plaintext entry.
  struct OtSession {
    ot::OtChooser<G> chooser;
    ot::OtRequest<G> request;
    std::uint32_t index;
  };

  OtSession start_ot(const OtOffer& offer, KeyId key) {
    auto idx = dht::rt_index_for_key(w_.topo.ring, std::span<const dht::Range>(offer.ranges), key);
    auto [req, ch] = ot::ot_request(w_.g, offer.setup, idx, *ot_rng_);
    return OtSession{ch, req, idx};
  }

  std::optional<Bytes> finish_ot(const OtOffer& offer, const OtSession& s, const Bytes& response_body) const {
    try {
      auto resp = ot::decode_response(wire::frame(wire::Tag::ot_response, response_body));
      auto key = algebra::SymKey::from(ot::ot_decrypt(w_.g, offer.setup, s.chooser, resp));
      return ot::decrypt_rt_entry(offer.enc, s.index, key);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  // Endorsement round of the crawling countermeasure.
  std::optional<Bytes> collect_endorsement(PeerIndex p, QuorumId q, const Bytes& auth_frame, const Bytes& pk1) {
    auto payload = wire::bundle({auth_frame, wire::frame(wire::Tag::ot_sign_req, pk1)});
    auto replies = exchange(p, to_quorum(q, payload), net_.base_timeout());
    std::vector<std::pair<std::uint32_t, Bytes>> shares;
    for (const auto& r : replies) {
      auto parts = safe_parse(r.payload);
      if (auto* f = find(parts, wire::Tag::ot_endorse)) {
        auto s = decode_share_opt(f->body);
        if (s) shares.emplace_back(s->index, w_.g.encode(s->sigma));
      }
    }
    if (shares.size() * 2 <= w_.topo.quorum(q).members.size()) return std::nullopt;
    return encode_share_list(shares);
  }

 public:
  // One intermediate hop of the -I variants against quorum q. On success
  // returns the entry for key and the proof S_q.
  struct HopOutcome {
    bool ok = false;
    bool rejected = false;
    std::optional<WireEntry> entry;
    std::optional<Proof> proof;
  };

  HopOutcome quorum_hop(Protocol proto, PeerIndex p, QuorumId q, const Proof& prev, KeyId key) {
    HopOutcome out;
    const auto size = w_.topo.quorum(q).members.size();
    const auto t = w_.threshold(q);
    auto auth = auth_for(p, prev);
    auto auth_frame = auth.frame();
    const bool qp = uses_ot(proto);

    std::vector<Bytes> r1{auth_frame};
    if (qp) r1.push_back(wire::frame(wire::Tag::ot_init, {}));
    auto replies = exchange(p, to_quorum(q, wire::bundle(r1)), net_.base_timeout());
    if (count_rejects(replies) * 2 > size) {
      out.rejected = true;
      return out;
    }

    auto m = auth_message(p, auth.addr, auth.ts);
    std::vector<threshold::SignatureShare<G>> shares;
    for (const auto& r : replies)
      for (const auto& f : safe_parse(r.payload))
        if (f.tag == wire::Tag::sig_share)
          if (auto s = decode_share_opt(f.body)) shares.push_back(*s);
    std::optional<Element> sigma;
    if (shares.size() >= t + 1) {
      auto c = threshold::combine(w_.g, shares, t, m);
      if (threshold::verify(w_.pairing, w_.pk(q), m, c.sigma)) sigma = c.sigma;
    }

    std::optional<OtOffer> offer;
    std::optional<OtSession> session;
    std::vector<Bytes> r2{auth_frame};
    if (qp) {
      offer = parse_offer(safe_parse(wire::bundle({majority_offer(replies, size)})));
      if (!offer) throw FilteringFailed("agreed OT offer does not parse");
      session = start_ot(*offer, key);
      ++ot_runs_;
      auto pk1 = w_.g.encode(session->request.pk1);
      if (opts_.sign_ot_request) {
        auto endorsement = collect_endorsement(p, q, auth_frame, pk1);
        if (!endorsement) throw FilteringFailed("OT request not endorsed by a majority");
        r2.push_back(wire::frame(wire::Tag::ot_endorse, *endorsement));
      }
      r2.push_back(ot::encode_request(w_.g, session->request));
    } else {
      ByteWriter kq;
      kq.u64(key);
      r2.push_back(wire::frame(wire::Tag::key_query, kq.bytes()));
    }
    if (!sigma) {
      std::vector<std::pair<std::uint32_t, Bytes>> list;
      for (const auto& s : shares) list.emplace_back(s.index, w_.g.encode(s.sigma));
      r2.push_back(wire::frame(wire::Tag::share_filter_req, encode_share_list(list)));
    }
    auto replies2 = exchange(p, to_quorum(q, wire::bundle(r2)), net_.base_timeout());

    Bytes entry_bytes;
    if (qp) {
      auto body = majority_body(replies2, wire::Tag::ot_response, size);
      auto plain = finish_ot(*offer, *session, body);
      if (!plain) throw FilteringFailed("agreed OT response does not decrypt");
      entry_bytes = *plain;
    } else {
      entry_bytes = majority_body(replies2, wire::Tag::rt_entry, size);
    }
    if (!sigma) {
      auto valid = decode_index_list(majority_body(replies2, wire::Tag::share_filter_resp, size));
      std::vector<threshold::SignatureShare<G>> good;
      for (const auto& s : shares)
        if (std::find(valid.begin(), valid.end(), s.index) != valid.end()) good.push_back(s);
      auto c = threshold::combine(w_.g, good, t, m);
      if (!threshold::verify(w_.pairing, w_.pk(q), m, c.sigma)) throw FilteringFailed("filtered shares do not verify");
      sigma = c.sigma;
    }
    out.entry = WireEntry::decode(entry_bytes);
    out.proof = Proof{q, auth.ts, w_.g.encode(*sigma)};
    out.ok = true;
    return out;
  }

 private:
  // Final step towards D = Q_l. Returns the members that accepted.
  std::vector<PeerIndex> final_step(PeerIndex p, QuorumId q, const Bytes& auth_frame, KeyId key) {
    const auto size = w_.topo.quorum(q).members.size();
    std::vector<PeerIndex> accepted;
    auto collect = [&](const std::vector<simnet::Reply>& replies) {
      for (const auto& r : replies) {
        auto parts = safe_parse(r.payload);
        auto* f = find(parts, wire::Tag::final_deliver);
        if (f && f->body == Bytes{1}) accepted.push_back(r.from);
      }
    };
    if (!opts_.final_step_ot) {
      auto payload = wire::bundle({auth_frame, wire::frame(wire::Tag::final_deliver, final_payload(key))});
      collect(exchange(p, to_quorum(q, payload), net_.base_timeout()));
    } else {
      auto payload = wire::bundle({auth_frame, wire::frame(wire::Tag::ot_init, {}),
                                   wire::frame(wire::Tag::final_deliver, final_payload(std::nullopt))});
      auto replies = exchange(p, to_quorum(q, payload), net_.base_timeout());
      collect(replies);
      auto offer = parse_offer(safe_parse(wire::bundle({majority_offer(replies, size)})));
      if (!offer) throw FilteringFailed("agreed bucket offer does not parse");
      auto s = start_ot(*offer, key);
      ++ot_runs_;
      auto replies2 = exchange(p, to_quorum(q, wire::bundle({auth_frame, ot::encode_request(w_.g, s.request)})),
                               net_.base_timeout());
      auto data = finish_ot(*offer, s, majority_body(replies2, wire::Tag::ot_response, size));
      if (!data || *data != bucket_table(q)[s.index - 1]) throw FilteringFailed("bucket data mismatch");
    }
    std::sort(accepted.begin(), accepted.end());
    return accepted;
  }

  void settle(LookupResult& res, QuorumId dest, std::vector<PeerIndex> accepted) {
    res.dest = dest;
    res.delivered_to = std::move(accepted);
    const auto size = w_.topo.quorum(dest).members.size();
    res.status = res.delivered_to.size() * 2 > size ? LookupStatus::ok : LookupStatus::failed;
    if (res.status != LookupStatus::ok) res.error = "destination quorum did not accept";
  }

  void run_quorum(Protocol proto, PeerIndex p, KeyId key, LookupResult& res) {
    ot_runs_ = 0;
    const QuorumId q1 = res.start;
    res.path.push_back(q1);
    auto home = authorize_at_home(p);
    if (!home.ok) {
      res.status = home.rejected ? LookupStatus::rejected_at_source : LookupStatus::failed;
      res.error = "initial step failed";
      return;
    }
    if (dht::contains(w_.topo.ring, w_.topo.quorum(q1).arc, key)) {
      res.dest = q1;
      res.status = LookupStatus::ok;
      return;
    }
    Proof prev{q1, home.ts, home.sigma};
    auto entry = WireEntry::decode(w_.keys[q1].rt_plain[dht::rt_index_for_key(w_.topo, q1, key) - 1]);
    for (std::size_t guard = 0; guard <= w_.topo.quorum_count(); ++guard) {
      const QuorumId cur = entry.target;
      res.path.push_back(cur);
      if (dht::contains(w_.topo.ring, entry.target_arc(w_.topo.ring), key)) {
        settle(res, cur, final_step(p, cur, auth_for(p, prev).frame(), key));
        res.ot_runs = ot_runs_;
        return;
      }
      auto hop = quorum_hop(proto, p, cur, prev, key);
      if (!hop.ok) {
        res.status = hop.rejected ? LookupStatus::hop_rejected : LookupStatus::failed;
        res.error = "hop at quorum " + std::to_string(cur) + " failed";
        return;
      }
      if (!dht::contains(w_.topo.ring, hop.entry->range, key)) throw FilteringFailed("entry range does not cover key");
      prev = *hop.proof;
      entry = *hop.entry;
    }
    throw Error("routing loop");
  }

  // --------------------------------------------------------- -II variants

 public:
  struct ChainHop {
    bool ok = false;
    std::uint32_t attempts = 0;
    std::optional<WireEntry> entry;
    Bytes link;
  };

  // One hop of the -II variants: peers of q are tried one at a time, chosen
  // at random without replacement, with a doubling timeout.
  ChainHop chain_hop(Protocol proto, PeerIndex p, QuorumId q, QuorumId prev, const Chain& chain, KeyId key) {
    ChainHop out;
    const bool qp = uses_ot(proto);
    auto members = w_.topo.quorum(q).members;
    std::vector<PeerIndex> order;
    while (!members.empty()) {
      auto i = select_rng_->uniform(members.size());
      order.push_back(members[i]);
      members.erase(members.begin() + static_cast<std::ptrdiff_t>(i));
    }
    auto chain_frame = encode_chain_msg(prev, chain);
    const auto prev_pk = w_.pk_bytes(prev);
    std::uint64_t timeout = net_.base_timeout();
    for (auto peer : order) {
      ++out.attempts;
      std::vector<Bytes> r1{chain_frame};
      if (qp) r1.push_back(wire::frame(wire::Tag::ot_init, {}));
      auto replies = exchange(p, {{peer, wire::bundle(r1)}}, timeout);
      timeout *= 2;
      if (replies.empty()) continue;
      auto parts = safe_parse(replies[0].payload);
      auto* link = find(parts, wire::Tag::chain_msg);
      if (!link) continue;
      auto sigma = decode_element(link->body);
      if (!sigma || !threshold::verify(w_.pairing, w_.pk(q), prev_pk, *sigma)) continue;

      std::optional<OtOffer> offer;
      std::optional<OtSession> session;
      std::vector<Bytes> r2{chain_frame};
      if (qp) {
        offer = parse_offer(parts);
        if (!offer) continue;
        session = start_ot(*offer, key);
        ++ot_runs_;
        r2.push_back(ot::encode_request(w_.g, session->request));
      } else {
        ByteWriter kq;
        kq.u64(key);
        r2.push_back(wire::frame(wire::Tag::key_query, kq.bytes()));
      }
      auto replies2 = exchange(p, {{peer, wire::bundle(r2)}}, timeout / 2);
      if (replies2.empty()) continue;
      auto parts2 = safe_parse(replies2[0].payload);
      std::optional<Bytes> signed_entry;
      if (qp) {
        if (auto* f = find(parts2, wire::Tag::ot_response)) signed_entry = finish_ot(*offer, *session, f->body);
      } else if (auto* f = find(parts2, wire::Tag::rt_entry)) {
        signed_entry = f->body;
      }
      if (!signed_entry) continue;
      try {
        auto [plain, sig] = decode_signed_entry(*signed_entry);
        auto s = decode_element(sig);
        if (!s || !threshold::verify(w_.pairing, w_.pk(q), signed_entry_message(q, plain), *s)) continue;
        auto e = WireEntry::decode(plain);
        if (!dht::contains(w_.topo.ring, e.range, key)) continue;
        out.entry = e;
      } catch (const Error&) {
        continue;
      }
      out.link = link->body;
      out.ok = true;
      return out;
    }
    return out;
  }

 private:
  void run_chain(Protocol proto, PeerIndex p, KeyId key, LookupResult& res) {
    ot_runs_ = 0;
    const QuorumId q1 = res.start;
    res.path.push_back(q1);
    auto home = authorize_at_home(p);
    if (!home.ok) {
      res.status = home.rejected ? LookupStatus::rejected_at_source : LookupStatus::failed;
      res.error = "initial step failed";
      return;
    }
    if (dht::contains(w_.topo.ring, w_.topo.quorum(q1).arc, key)) {
      res.dest = q1;
      res.status = LookupStatus::ok;
      return;
    }
    Chain chain{auth_message(p, w_.topo.peer(p).addr, home.ts), home.sigma, {}};
    for (std::uint32_t i = 0; i < opts_.pad_chain; ++i) chain.links.push_back({w_.pk_bytes(q1), w_.keys[q1].self_link});
    QuorumId prev = q1;
    auto entry = WireEntry::decode(w_.keys[q1].rt_plain[dht::rt_index_for_key(w_.topo, q1, key) - 1]);
    for (std::size_t guard = 0; guard <= w_.topo.quorum_count(); ++guard) {
      const QuorumId cur = entry.target;
      res.path.push_back(cur);
      if (dht::contains(w_.topo.ring, entry.target_arc(w_.topo.ring), key)) {
        settle(res, cur, final_step(p, cur, encode_chain_msg(prev, chain), key));
        res.chain_length = static_cast<std::uint32_t>(chain.links.size());
        res.ot_runs = ot_runs_;
        return;
      }
      auto hop = chain_hop(proto, p, cur, prev, chain, key);
      res.retries += hop.attempts - (hop.ok ? 1 : 0);
      if (!hop.ok) {
        res.status = LookupStatus::failed;
        res.error = "no peer of quorum " + std::to_string(cur) + " answered correctly";
        return;
      }
      chain.links.push_back({w_.pk_bytes(prev), hop.link});
      prev = cur;
      entry = *hop.entry;
    }
    throw Error("routing loop");
  }

  const World<G>& w_;
  ProtocolOptions opts_;
  algebra::Drbg seed_rng_;
  simnet::Metrics metrics_;
  simnet::Transcript transcript_;
  simnet::Network net_;
  std::vector<MemberState> members_;
  adversary::ObservationLog log_;
  std::uint64_t lookup_id_ = 0;
  std::optional<algebra::Drbg> select_rng_;
  std::optional<algebra::Drbg> ot_rng_;
  std::uint32_t ot_runs_ = 0;
  bool find_final_ = false;
};

}  // namespace qpdht::protocols
