#pragma once

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <optional>

#include "qpdht/algebra/drbg.hpp"

namespace qpdht::algebra {

struct SymKey {
  std::array<std::uint8_t, 32> bytes{};
  friend bool operator==(const SymKey&, const SymKey&) = default;

  static SymKey from(ByteView v) {
    if (v.size() != 32) throw InvalidArgument("symmetric key must be 32 bytes");
    SymKey k;
    std::copy(v.begin(), v.end(), k.bytes.begin());
    return k;
  }
};

inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kSymOverhead = kNonceSize + kTagSize;

using Nonce = std::array<std::uint8_t, kNonceSize>;

namespace detail {
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;
inline CipherCtx new_cipher_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx) throw Error("EVP_CIPHER_CTX_new failed");
  return ctx;
}
}  // namespace detail

// AES-256-GCM. Output layout: nonce(12) | ciphertext | tag(16).
inline Bytes sym_encrypt(const SymKey& key, ByteView plaintext, const Nonce& nonce) {
  auto ctx = detail::new_cipher_ctx();
  Bytes out(kNonceSize + plaintext.size() + kTagSize);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  int len = 0;
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.bytes.data(), nonce.data()) != 1)
    throw Error("aes-gcm init failed");
  if (!plaintext.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data() + kNonceSize, &len, plaintext.data(), static_cast<int>(plaintext.size())) != 1)
    throw Error("aes-gcm encrypt failed");
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceSize + len, &len) != 1) throw Error("aes-gcm final failed");
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                          out.data() + kNonceSize + plaintext.size()) != 1)
    throw Error("aes-gcm tag failed");
  return out;
}

inline Bytes sym_encrypt(const SymKey& key, ByteView plaintext, Drbg& rng) {
  Nonce nonce;
  rng.fill(nonce);
  return sym_encrypt(key, plaintext, nonce);
}

inline std::optional<Bytes> try_sym_decrypt(const SymKey& key, ByteView ciphertext) {
  if (ciphertext.size() < kSymOverhead) return std::nullopt;
  const auto body = ciphertext.size() - kSymOverhead;
  auto ctx = detail::new_cipher_ctx();
  Bytes out(body);
  int len = 0;
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.bytes.data(), ciphertext.data()) != 1)
    return std::nullopt;
  if (body > 0 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data() + kNonceSize, static_cast<int>(body)) != 1)
    return std::nullopt;
  Bytes tag(ciphertext.end() - kTagSize, ciphertext.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data()) != 1)
    return std::nullopt;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) return std::nullopt;
  return out;
}

inline Bytes sym_decrypt(const SymKey& key, ByteView ciphertext) {
  auto out = try_sym_decrypt(key, ciphertext);
  if (!out) throw AuthenticationFailure("symmetric decryption failed authentication");
  return *std::move(out);
}

}  // namespace qpdht::algebra
