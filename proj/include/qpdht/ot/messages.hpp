#pragma once

#include "qpdht/ot/naor_pinkas.hpp"
#include "qpdht/wire.hpp"

namespace qpdht::ot {

// OT_SETUP body:    u16 nu | alpha | C_2 .. C_nu
// OT_REQUEST body:  PK_1
// OT_RESPONSE body: u8 |R| | R | u16 nu | u16 |S| | E_1 .. E_nu
// Elements use the group's fixed-length encoding.

template <PrimeOrderGroup G>
Bytes encode_setup(const G& g, const OtSetupPublic<G>& s) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(s.nu())).raw(g.encode(s.alpha));
  for (const auto& c : s.c) w.raw(g.encode(c));
  return wire::frame(wire::Tag::ot_setup, w.bytes());
}

template <PrimeOrderGroup G>
OtSetupPublic<G> decode_setup(const G& g, ByteView msg) {
  auto f = wire::unframe(msg, wire::Tag::ot_setup);
  ByteReader r(f.body);
  auto nu = r.u16();
  if (nu == 0) throw DecodeError("OT setup with nu = 0");
  OtSetupPublic<G> s{g.decode(r.raw(g.element_size())), {}};
  for (std::size_t i = 2; i <= nu; ++i) s.c.push_back(g.decode(r.raw(g.element_size())));
  r.expect_end();
  return s;
}

template <PrimeOrderGroup G>
Bytes encode_request(const G& g, const OtRequest<G>& q) {
  return wire::frame(wire::Tag::ot_request, g.encode(q.pk1));
}

// Malformed PK_1 surfaces here as MalformedElement.
template <PrimeOrderGroup G>
OtRequest<G> decode_request(const G& g, ByteView msg) {
  auto f = wire::unframe(msg, wire::Tag::ot_request);
  return {g.decode(f.body)};
}

inline Bytes encode_response(const OtResponse& resp) {
  ByteWriter w;
  const std::size_t len = resp.e.empty() ? 0 : resp.e[0].size();
  w.u8(static_cast<std::uint8_t>(resp.nonce.size())).raw(resp.nonce);
  w.u16(static_cast<std::uint16_t>(resp.e.size())).u16(static_cast<std::uint16_t>(len));
  for (const auto& e : resp.e) {
    if (e.size() != len) throw InvalidArgument("OT response strings must have equal length");
    w.raw(e);
  }
  return wire::frame(wire::Tag::ot_response, w.bytes());
}

inline OtResponse decode_response(ByteView msg) {
  auto f = wire::unframe(msg, wire::Tag::ot_response);
  ByteReader r(f.body);
  OtResponse resp;
  auto rlen = r.u8();
  auto rv = r.raw(rlen);
  resp.nonce.assign(rv.begin(), rv.end());
  auto nu = r.u16();
  auto len = r.u16();
  for (std::size_t i = 0; i < nu; ++i) {
    auto e = r.raw(len);
    resp.e.emplace_back(e.begin(), e.end());
  }
  r.expect_end();
  return resp;
}

// Group-element-sized items carried by each message. The response counts R
// and each E_i as one item, so a fresh-setup invocation totals 2nu+2.
template <PrimeOrderGroup G>
std::size_t setup_elements(const OtSetupPublic<G>& s) {
  return s.nu();
}
inline std::size_t request_elements() { return 1; }
inline std::size_t response_elements(const OtResponse& r) { return r.e.size() + 1; }

}  // namespace qpdht::ot
