#pragma once

#include <vector>

#include "qpdht/algebra/group.hpp"
#include "qpdht/algebra/hash.hpp"

namespace qpdht::ot {

using algebra::Drbg;
using algebra::PrimeOrderGroup;

inline constexpr std::size_t kNonceBytes = 25;  // 200-bit R
inline constexpr std::size_t kMaxStringBytes = 32;

// Public half of a 1-of-nu setup: alpha = g^r and C_2..C_nu.
template <PrimeOrderGroup G>
struct OtSetupPublic {
  typename G::Element alpha;
  std::vector<typename G::Element> c;  // c[0] is C_2

  std::size_t nu() const { return c.size() + 1; }
  friend bool operator==(const OtSetupPublic&, const OtSetupPublic&) = default;
};

template <PrimeOrderGroup G>
struct OtSetup {
  OtSetupPublic<G> pub;
  typename G::Scalar r;
  std::vector<typename G::Element> c_r;  // C_i^r, same indexing as pub.c
  std::size_t uses = 0;

  std::size_t nu() const { return pub.nu(); }
  bool exhausted() const { return uses >= nu(); }
};

template <PrimeOrderGroup G>
struct OtRequest {
  typename G::Element pk1;
  friend bool operator==(const OtRequest&, const OtRequest&) = default;
};

template <PrimeOrderGroup G>
struct OtChooser {
  typename G::Scalar k;
  std::uint32_t rho = 1;
};

struct OtResponse {
  Bytes nonce;             // R
  std::vector<Bytes> e;    // E_1..E_nu
  friend bool operator==(const OtResponse&, const OtResponse&) = default;
};

// nu counted exponentiations: alpha and the nu-1 values C_i^r. The C_i are
// sampled without exponentiating.
template <PrimeOrderGroup G>
OtSetup<G> ot_setup(const G& g, std::size_t nu, Drbg& rng) {
  if (nu == 0) throw InvalidArgument("OT needs at least one string");
  if (nu > 0xffff) throw InvalidArgument("nu too large");
  OtSetup<G> s{{g.identity(), {}}, g.random_nonzero_scalar(rng), {}, 0};
  s.pub.alpha = g.exp(g.generator(), s.r);
  s.pub.c.reserve(nu - 1);
  s.c_r.reserve(nu - 1);
  for (std::size_t i = 2; i <= nu; ++i) {
    auto ci = g.random_element(rng);
    while (g.is_identity(ci)) ci = g.random_element(rng);
    s.pub.c.push_back(ci);
    s.c_r.push_back(g.exp(ci, s.r));
  }
  return s;
}

// PK_1 for a given k; one exponentiation. Exposed separately so tests can
// feed a k recovered from the discrete-log oracle.
template <PrimeOrderGroup G>
OtRequest<G> ot_request_with(const G& g, const OtSetupPublic<G>& pub, std::uint32_t rho, const typename G::Scalar& k) {
  if (rho < 1 || rho > pub.nu()) throw InvalidArgument("OT index out of range");
  auto pk_rho = g.exp(g.generator(), k);
  if (rho == 1) return {pk_rho};
  return {g.div(pub.c[rho - 2], pk_rho)};
}

template <PrimeOrderGroup G>
std::pair<OtRequest<G>, OtChooser<G>> ot_request(const G& g, const OtSetupPublic<G>& pub, std::uint32_t rho,
                                                 Drbg& rng) {
  if (rho < 1 || rho > pub.nu()) throw InvalidArgument("OT index out of range");
  auto k = g.random_scalar(rng);
  return {ot_request_with(g, pub, rho, k), OtChooser<G>{k, rho}};
}

namespace detail {
inline Bytes mask(ByteView key_encoding, ByteView nonce, std::uint32_t i, ByteView s) {
  auto h = algebra::hash_digest(key_encoding, nonce, i);
  Bytes out(s.begin(), s.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] ^= h[j];
  return out;
}
}  // namespace detail

// One counted exponentiation (PK_1^r). Consumes one use of the setup.
template <PrimeOrderGroup G>
OtResponse ot_respond(const G& g, OtSetup<G>& setup, const OtRequest<G>& req, const std::vector<Bytes>& strings,
                      ByteView nonce) {
  if (strings.size() != setup.nu()) throw InvalidArgument("need exactly nu strings");
  for (const auto& s : strings) {
    if (s.size() != strings[0].size()) throw InvalidArgument("OT strings must have equal length");
    if (s.size() > kMaxStringBytes) throw InvalidArgument("OT strings are limited to 32 bytes");
  }
  if (nonce.size() != kNonceBytes) throw InvalidArgument("R must be 200 bits");
  if (setup.exhausted()) throw InvalidArgument("OT setup used nu times; refresh required");
  ++setup.uses;
  auto pk1_r = g.exp(req.pk1, setup.r);
  OtResponse resp{Bytes(nonce.begin(), nonce.end()), {}};
  resp.e.reserve(strings.size());
  resp.e.push_back(detail::mask(g.encode(pk1_r), nonce, 1, strings[0]));
  for (std::size_t i = 2; i <= setup.nu(); ++i) {
    auto pki_r = g.div(setup.c_r[i - 2], pk1_r);
    resp.e.push_back(detail::mask(g.encode(pki_r), nonce, static_cast<std::uint32_t>(i), strings[i - 1]));
  }
  return resp;
}

template <PrimeOrderGroup G>
OtResponse ot_respond(const G& g, OtSetup<G>& setup, const OtRequest<G>& req, const std::vector<Bytes>& strings,
                      Drbg& rng) {
  auto nonce = rng.bytes(kNonceBytes);
  return ot_respond(g, setup, req, strings, nonce);
}

// One counted exponentiation (alpha^k = PK_rho^r).
template <PrimeOrderGroup G>
Bytes ot_decrypt(const G& g, const OtSetupPublic<G>& pub, const OtChooser<G>& chooser, const OtResponse& resp) {
  if (resp.e.size() != pub.nu()) throw InvalidArgument("response length does not match setup");
  if (resp.nonce.size() != kNonceBytes) throw InvalidArgument("R must be 200 bits");
  if (chooser.rho < 1 || chooser.rho > resp.e.size()) throw InvalidArgument("OT index out of range");
  auto key = g.exp(pub.alpha, chooser.k);
  return detail::mask(g.encode(key), resp.nonce, chooser.rho, resp.e[chooser.rho - 1]);
}

}  // namespace qpdht::ot
