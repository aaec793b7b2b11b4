#pragma once

#include <string_view>
#include <vector>

#include "qpdht/bytes.hpp"

namespace qpdht::wire {

// Every message on the simulated wire is: u8 tag | u32 body length | body.
enum class Tag : std::uint8_t {
  auth_req = 0x01,
  sig_share = 0x02,
  share_filter_req = 0x03,
  share_filter_resp = 0x04,
  ot_setup = 0x05,
  ot_request = 0x06,
  ot_response = 0x07,
  rt_ranges = 0x08,
  enc_rt = 0x09,
  chain_msg = 0x0A,
  final_deliver = 0x0B,
  ot_init = 0x0C,
  key_query = 0x0D,
  rt_entry = 0x0E,
  ot_sign_req = 0x0F,
  ot_endorse = 0x10,
  reject = 0x11,
};

inline constexpr std::size_t kHeaderBytes = 5;

inline std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::auth_req: return "AUTH_REQ";
    case Tag::sig_share: return "SIG_SHARE";
    case Tag::share_filter_req: return "SHARE_FILTER_REQ";
    case Tag::share_filter_resp: return "SHARE_FILTER_RESP";
    case Tag::ot_setup: return "OT_SETUP";
    case Tag::ot_request: return "OT_REQUEST";
    case Tag::ot_response: return "OT_RESPONSE";
    case Tag::rt_ranges: return "RT_RANGES";
    case Tag::enc_rt: return "ENC_RT";
    case Tag::chain_msg: return "CHAIN_MSG";
    case Tag::final_deliver: return "FINAL_DELIVER";
    case Tag::ot_init: return "OT_INIT";
    case Tag::key_query: return "KEY_QUERY";
    case Tag::rt_entry: return "RT_ENTRY";
    case Tag::ot_sign_req: return "OT_SIGN_REQ";
    case Tag::ot_endorse: return "OT_ENDORSE";
    case Tag::reject: return "REJECT";
  }
  return "UNKNOWN";
}

inline constexpr std::size_t kTagCount = 0x12;

inline Bytes frame(Tag tag, ByteView body) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(tag)).var(body);
  return w.take();
}

struct Frame {
  Tag tag;
  Bytes body;
};

inline Frame unframe(ByteView msg) {
  ByteReader r(msg);
  auto t = r.u8();
  if (t == 0 || t >= kTagCount) throw DecodeError("unknown message tag");
  Frame f{static_cast<Tag>(t), r.var()};
  r.expect_end();
  return f;
}

inline Frame unframe(ByteView msg, Tag expected) {
  auto f = unframe(msg);
  if (f.tag != expected) throw DecodeError("unexpected message tag");
  return f;
}

}  // namespace qpdht::wire

namespace qpdht::wire {

// A transmission carries one or more frames back to back.
inline Bytes bundle(const std::vector<Bytes>& frames) {
  Bytes out;
  for (const auto& f : frames) out.insert(out.end(), f.begin(), f.end());
  return out;
}

inline std::vector<Frame> parse_bundle(ByteView payload) {
  std::vector<Frame> out;
  ByteReader r(payload);
  while (!r.done()) {
    auto t = r.u8();
    if (t == 0 || t >= kTagCount) throw DecodeError("unknown message tag");
    out.push_back(Frame{static_cast<Tag>(t), r.var()});
  }
  return out;
}

inline std::string bundle_tags(ByteView payload) {
  std::string s;
  try {
    for (const auto& f : parse_bundle(payload)) {
      if (!s.empty()) s += '+';
      s += tag_name(f.tag);
    }
  } catch (const DecodeError&) {
    s = "MALFORMED";
  }
  return s;
}

}  // namespace qpdht::wire
