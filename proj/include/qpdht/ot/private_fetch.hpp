#pragma once

#include "qpdht/ot/messages.hpp"
#include "qpdht/ot/rt_cipher.hpp"

namespace qpdht::ot {

struct FetchStats {
  std::size_t online_messages = 0;  // OT_REQUEST + OT_RESPONSE
  std::size_t setup_messages = 0;   // piggybacked OT_SETUP
  std::size_t elements = 0;         // group-element-sized items across all three
  std::size_t setup_bytes = 0;
  std::size_t request_bytes = 0;
  std::size_t response_bytes = 0;
  std::size_t enc_rt_bytes = 0;
};

struct FetchResult {
  Bytes entry;
  FetchStats stats;
};

// R for a request: phi(r, "ot-R" || tag), 200 bits.
inline Bytes ot_nonce_for(const PrfKey& r, ByteView request_tag) {
  ByteWriter w;
  w.raw(as_view("ot-R")).var(request_tag);
  return algebra::prf(r, w.bytes(), kNonceBytes);
}

// Server side holds the setup, the plaintext table and the quorum PRF key;
// the chooser ends up with entry rho and the keyed ciphertexts of the rest.
// All traffic goes through the wire encodings.
template <PrimeOrderGroup G>
FetchResult private_rt_fetch(const G& g, OtSetup<G>& setup, const std::vector<Bytes>& entries, const PrfKey& r,
                             ByteView request_tag, std::uint32_t rho, Drbg& chooser_rng) {
  if (entries.size() != setup.nu()) throw InvalidArgument("table size must equal nu");
  FetchResult out;
  auto& st = out.stats;

  auto setup_msg = encode_setup(g, setup.pub);
  auto [enc, keys] = encrypt_rt(entries, r, request_tag);
  auto enc_msg = encode_enc_rt(enc);
  st.setup_messages = 1;
  st.setup_bytes = setup_msg.size();
  st.enc_rt_bytes = enc_msg.size();
  st.elements += setup_elements(setup.pub);

  auto pub = decode_setup(g, setup_msg);
  auto [req, chooser] = ot_request(g, pub, rho, chooser_rng);
  auto req_msg = encode_request(g, req);
  st.request_bytes = req_msg.size();
  st.elements += request_elements();

  std::vector<Bytes> strings;
  for (const auto& k : keys) strings.emplace_back(k.bytes.begin(), k.bytes.end());
  auto resp = ot_respond(g, setup, decode_request(g, req_msg), strings, ot_nonce_for(r, request_tag));
  auto resp_msg = encode_response(resp);
  st.response_bytes = resp_msg.size();
  st.elements += response_elements(resp);
  st.online_messages = 2;

  auto key = SymKey::from(ot_decrypt(g, pub, chooser, decode_response(resp_msg)));
  out.entry = decrypt_rt_entry(decode_enc_rt(enc_msg), rho, key);
  return out;
}

}  // namespace qpdht::ot
