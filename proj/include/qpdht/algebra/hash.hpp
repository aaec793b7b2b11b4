#pragma once

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>

#include "qpdht/bytes.hpp"

namespace qpdht::algebra {

using Digest = std::array<std::uint8_t, 32>;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("sha256 init failed");
  }
  Sha256& update(ByteView v) {
    if (!v.empty()) EVP_DigestUpdate(ctx_.get(), v.data(), v.size());
    return *this;
  }
  Sha256& update_u32(std::uint32_t v) {
    std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
    return update(ByteView(b, 4));
  }
  // Length-prefixed, so field boundaries are unambiguous.
  Sha256& update_var(ByteView v) {
    update_u32(static_cast<std::uint32_t>(v.size()));
    return update(v);
  }
  Digest finish() {
    Digest out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Digest sha256(ByteView v) { return Sha256().update(v).finish(); }

inline Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
    throw Error("hmac failed");
  return out;
}

// H(e, R, i) from the OT response: a domain-separated 256-bit digest of an
// encoded group element, the response nonce and a 1-based index.
inline Digest hash_digest(ByteView encoded_element, ByteView nonce, std::uint32_t index) {
  return Sha256()
      .update(as_view("qpdht/ot-H/v1"))
      .update_var(encoded_element)
      .update_var(nonce)
      .update_u32(index)
      .finish();
}

struct PrfKey {
  std::array<std::uint8_t, 32> bytes{};
  friend bool operator==(const PrfKey&, const PrfKey&) = default;
};

// phi(r, input): HMAC-SHA256 in counter mode, truncated to `length` bytes.
inline Bytes prf(const PrfKey& key, ByteView input, std::size_t length) {
  Bytes out;
  out.reserve(length + 32);
  for (std::uint32_t counter = 0; out.size() < length; ++counter) {
    ByteWriter w;
    w.u32(counter).raw(input);
    auto block = hmac_sha256(key.bytes, w.bytes());
    out.insert(out.end(), block.begin(), block.end());
  }
  out.resize(length);
  return out;
}

inline PrfKey derive_prf_key(ByteView material) {
  PrfKey k;
  k.bytes = Sha256().update(as_view("qpdht/prf-key/v1")).update_var(material).finish();
  return k;
}

}  // namespace qpdht::algebra
