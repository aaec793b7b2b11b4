#pragma once

#include <vector>

#include "qpdht/algebra/aead.hpp"
#include "qpdht/wire.hpp"

namespace qpdht::ot {

using algebra::PrfKey;
using algebra::SymKey;

struct EncryptedRt {
  std::vector<Bytes> ciphertexts;  // entry i under key i, 1-based in the protocol
  friend bool operator==(const EncryptedRt&, const EncryptedRt&) = default;
};

namespace detail {
inline Bytes rt_label(std::string_view what, ByteView request_tag, std::uint32_t i) {
  ByteWriter w;
  w.raw(as_view(what)).var(request_tag).u32(i);
  return w.take();
}
}  // namespace detail

// Key i is phi(r, "rt-key" || tag || i); nonces come from the PRF as well, so
// every member holding r emits the same bytes for the same request.
inline SymKey rt_entry_key(const PrfKey& r, ByteView request_tag, std::uint32_t i) {
  return SymKey::from(algebra::prf(r, detail::rt_label("rt-key", request_tag, i), 32));
}

inline std::pair<EncryptedRt, std::vector<SymKey>> encrypt_rt(const std::vector<Bytes>& entries, const PrfKey& r,
                                                              ByteView request_tag) {
  EncryptedRt out;
  std::vector<SymKey> keys;
  for (std::uint32_t i = 1; i <= entries.size(); ++i) {
    auto key = rt_entry_key(r, request_tag, i);
    auto nb = algebra::prf(r, detail::rt_label("rt-nonce", request_tag, i), algebra::kNonceSize);
    algebra::Nonce nonce;
    std::copy(nb.begin(), nb.end(), nonce.begin());
    out.ciphertexts.push_back(algebra::sym_encrypt(key, entries[i - 1], nonce));
    keys.push_back(key);
  }
  return {std::move(out), std::move(keys)};
}

inline Bytes decrypt_rt_entry(const EncryptedRt& rt, std::uint32_t index, const SymKey& key) {
  if (index < 1 || index > rt.ciphertexts.size()) throw InvalidArgument("RT index out of range");
  return algebra::sym_decrypt(key, rt.ciphertexts[index - 1]);
}

// ENC_RT body: u16 count | (u32 len | ciphertext)*
inline Bytes encode_enc_rt(const EncryptedRt& rt) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(rt.ciphertexts.size()));
  for (const auto& c : rt.ciphertexts) w.var(c);
  return wire::frame(wire::Tag::enc_rt, w.bytes());
}

inline EncryptedRt decode_enc_rt(ByteView msg) {
  auto f = wire::unframe(msg, wire::Tag::enc_rt);
  ByteReader r(f.body);
  EncryptedRt rt;
  auto n = r.u16();
  for (std::size_t i = 0; i < n; ++i) rt.ciphertexts.push_back(r.var());
  r.expect_end();
  return rt;
}

}  // namespace qpdht::ot
