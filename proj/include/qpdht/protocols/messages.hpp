#pragma once

#include <optional>
#include <string>

#include "qpdht/algebra/hash.hpp"
#include "qpdht/dht/topology.hpp"
#include "qpdht/wire.hpp"

namespace qpdht::protocols {

using dht::KeyId;
using dht::PeerIndex;
using dht::QuorumId;

inline constexpr QuorumId kNoQuorum = 0xffffffffu;

// [p | p_addr | ts], the payload every quorum proof signs.
inline Bytes auth_message(PeerIndex p, std::string_view addr, std::uint64_t ts) {
  ByteWriter w;
  w.raw(as_view("qpdht/auth")).u32(p).var(as_view(addr)).u64(ts);
  return w.take();
}

// AUTH_REQ body: u32 p | var(addr) | u64 ts_i | u32 prev quorum | u64 prev ts | var(prev sigma)
struct AuthReq {
  PeerIndex requester = 0;
  std::string addr;
  std::uint64_t ts = 0;
  QuorumId prev_quorum = kNoQuorum;
  std::uint64_t prev_ts = 0;
  Bytes prev_sigma;

  Bytes body() const {
    ByteWriter w;
    w.u32(requester).var(as_view(addr)).u64(ts).u32(prev_quorum).u64(prev_ts).var(prev_sigma);
    return w.take();
  }
  Bytes frame() const { return wire::frame(wire::Tag::auth_req, body()); }
  static AuthReq decode(ByteView body) {
    ByteReader r(body);
    AuthReq a;
    a.requester = r.u32();
    auto addr = r.var();
    a.addr.assign(addr.begin(), addr.end());
    a.ts = r.u64();
    a.prev_quorum = r.u32();
    a.prev_ts = r.u64();
    a.prev_sigma = r.var();
    r.expect_end();
    return a;
  }
};

struct ChainLink {
  Bytes payload;  // encoded PK of the previous quorum
  Bytes sigma;
  friend bool operator==(const ChainLink&, const ChainLink&) = default;
};

// M_i = [M_1 | link_2 | ... | link_i]; padding links sit right after M_1.
struct Chain {
  Bytes m1;
  Bytes sigma1;
  std::vector<ChainLink> links;
};

// CHAIN_MSG request body: u32 prev quorum | var(m1) | var(sigma1) | u16 count | (var(payload) | var(sigma))*
inline Bytes encode_chain_msg(QuorumId prev, const Chain& c) {
  ByteWriter w;
  w.u32(prev).var(c.m1).var(c.sigma1).u16(static_cast<std::uint16_t>(c.links.size()));
  for (const auto& l : c.links) w.var(l.payload).var(l.sigma);
  return wire::frame(wire::Tag::chain_msg, w.bytes());
}

inline std::pair<QuorumId, Chain> decode_chain_msg(ByteView body) {
  ByteReader r(body);
  QuorumId prev = r.u32();
  Chain c;
  c.m1 = r.var();
  c.sigma1 = r.var();
  auto n = r.u16();
  for (std::size_t i = 0; i < n; ++i) {
    ChainLink l;
    l.payload = r.var();
    l.sigma = r.var();
    c.links.push_back(std::move(l));
  }
  r.expect_end();
  return {prev, std::move(c)};
}

inline std::optional<AuthReq> parse_auth_message(ByteView m) {
  try {
    ByteReader r(m);
    auto prefix = r.raw(10);
    if (!std::equal(prefix.begin(), prefix.end(), as_view("qpdht/auth").begin())) return std::nullopt;
    AuthReq a;
    a.requester = r.u32();
    auto addr = r.var();
    a.addr.assign(addr.begin(), addr.end());
    a.ts = r.u64();
    r.expect_end();
    return a;
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

// Plaintext routing-table entry as transferred to requesters.
struct WireEntry {
  QuorumId target = 0;
  PeerIndex p = 0;
  KeyId p_id = 0;
  std::string p_addr;
  PeerIndex p_prev = 0;
  KeyId p_prev_id = 0;
  Bytes pk;
  dht::Range range;
  std::uint64_t ts = 0;

  Bytes encode() const {
    ByteWriter w;
    w.u32(target).u32(p).u64(p_id).var(as_view(p_addr)).u32(p_prev).u64(p_prev_id).var(pk);
    w.u64(range.lower).u64(range.upper).u64(ts);
    return w.take();
  }
  static WireEntry decode(ByteReader& r) {
    WireEntry e;
    e.target = r.u32();
    e.p = r.u32();
    e.p_id = r.u64();
    auto a = r.var();
    e.p_addr.assign(a.begin(), a.end());
    e.p_prev = r.u32();
    e.p_prev_id = r.u64();
    e.pk = r.var();
    e.range.lower = r.u64();
    e.range.upper = r.u64();
    e.ts = r.u64();
    return e;
  }
  static WireEntry decode(ByteView v) {
    ByteReader r(v);
    auto e = decode(r);
    r.expect_end();
    return e;
  }
  // Arc (p', p] of the target quorum.
  dht::Range target_arc(const dht::Ring& ring) const { return {ring.wrap(p_prev_id + 1), ring.wrap(p_id + 1)}; }
};

// Signed entries: entry || var(sigma); the signature covers the owning
// quorum id and the whole entry, range included.
inline Bytes signed_entry_message(QuorumId owner, ByteView entry) {
  ByteWriter w;
  w.raw(as_view("qpdht/rt-entry")).u32(owner).var(entry);
  return w.take();
}

inline Bytes encode_signed_entry(ByteView entry, ByteView sigma) {
  ByteWriter w;
  w.var(entry).var(sigma);
  return w.take();
}

inline std::pair<Bytes, Bytes> decode_signed_entry(ByteView v) {
  ByteReader r(v);
  auto e = r.var();
  auto s = r.var();
  r.expect_end();
  return {std::move(e), std::move(s)};
}

// RT_RANGES body: u16 count | (u64 lower | u64 upper)*
inline Bytes encode_ranges(const std::vector<dht::Range>& rs) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(rs.size()));
  for (const auto& r : rs) w.u64(r.lower).u64(r.upper);
  return wire::frame(wire::Tag::rt_ranges, w.bytes());
}

inline std::vector<dht::Range> decode_ranges(ByteView body) {
  ByteReader r(body);
  std::vector<dht::Range> out;
  auto n = r.u16();
  for (std::size_t i = 0; i < n; ++i) {
    dht::Range x;
    x.lower = r.u64();
    x.upper = r.u64();
    out.push_back(x);
  }
  r.expect_end();
  return out;
}

// Share lists (SHARE_FILTER_REQ, OT_ENDORSE requests): u16 count | (u32 index | var(sigma))*
inline Bytes encode_share_list(const std::vector<std::pair<std::uint32_t, Bytes>>& shares) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(shares.size()));
  for (const auto& [i, s] : shares) w.u32(i).var(s);
  return w.take();
}

inline std::vector<std::pair<std::uint32_t, Bytes>> decode_share_list(ByteView body) {
  ByteReader r(body);
  std::vector<std::pair<std::uint32_t, Bytes>> out;
  auto n = r.u16();
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = r.u32();
    out.emplace_back(idx, r.var());
  }
  r.expect_end();
  return out;
}

// SHARE_FILTER_RESP body: u16 count | u32 index*
inline Bytes encode_index_list(const std::vector<std::uint32_t>& idx) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(idx.size()));
  for (auto i : idx) w.u32(i);
  return wire::frame(wire::Tag::share_filter_resp, w.bytes());
}

inline std::vector<std::uint32_t> decode_index_list(ByteView body) {
  ByteReader r(body);
  std::vector<std::uint32_t> out;
  auto n = r.u16();
  for (std::size_t i = 0; i < n; ++i) out.push_back(r.u32());
  r.expect_end();
  return out;
}

// Message a member signs to endorse one OT-request per authorization.
inline Bytes endorse_message(ByteView request_tag, ByteView pk1) {
  ByteWriter w;
  w.raw(as_view("qpdht/ot-endorse")).var(request_tag).var(pk1);
  return w.take();
}

// FINAL_DELIVER body. With the final-step OT the key is left out and the
// destination only learns that the key falls in its arc.
inline Bytes final_payload(std::optional<KeyId> key) {
  ByteWriter w;
  w.raw(as_view("get"));
  if (key) w.u64(*key);
  return w.take();
}

inline Bytes reject_frame(std::string_view why) { return wire::frame(wire::Tag::reject, as_view(why)); }

// Request tag for the PRF: a digest of the authorization frame body.
inline Bytes request_tag(wire::Tag kind, ByteView auth_body) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind)).var(auth_body);
  auto d = algebra::sha256(w.bytes());
  return Bytes(d.begin(), d.end());
}

}  // namespace qpdht::protocols
