#pragma once

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include <array>
#include <memory>
#include <optional>

#include "qpdht/algebra/exp_counter.hpp"
#include "qpdht/algebra/group.hpp"

namespace qpdht::algebra {

// NIST P-256 via OpenSSL. Elements are kept in compressed SEC1 form (33 bytes,
// all-zero for the point at infinity); scalars are 32-byte big-endian mod n.
class P256Group {
 public:
  class Element {
   public:
    const std::array<std::uint8_t, 33>& bytes() const noexcept { return b_; }
    friend bool operator==(const Element&, const Element&) = default;
    friend auto operator<=>(const Element&, const Element&) = default;

   private:
    friend class P256Group;
    Element() = default;
    std::array<std::uint8_t, 33> b_{};
  };

  class Scalar {
   public:
    Scalar() = default;
    const std::array<std::uint8_t, 32>& bytes() const noexcept { return b_; }
    friend bool operator==(const Scalar&, const Scalar&) = default;
    friend auto operator<=>(const Scalar&, const Scalar&) = default;

   private:
    friend class P256Group;
    std::array<std::uint8_t, 32> b_{};
  };

  P256Group() : group_(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1), &EC_GROUP_free) {
    if (!group_) throw Error("P-256 unavailable");
    Bn order;
    EC_GROUP_get_order(group_.get(), order.get(), ctx());
    order_bytes_ = to_scalar_bytes(order.get());
    generator_ = from_point(EC_GROUP_get0_generator(group_.get()));
  }

  GroupParams params() const {
    return GroupParams{"p256", "prime256v1", to_hex(order_bytes_), 128, GroupMode::production};
  }
  std::size_t element_size() const noexcept { return 33; }
  std::size_t scalar_size() const noexcept { return 32; }

  Element generator() const { return generator_; }
  Element identity() const { return Element(); }

  Element exp(const Element& b, const Scalar& e) const {
    count_exponentiation();
    auto pt = to_point(b);
    Point r(group_.get());
    Bn k(e.b_);
    if (EC_POINT_mul(group_.get(), r.get(), nullptr, pt.get(), k.get(), ctx()) != 1) throw Error("EC_POINT_mul failed");
    return from_point(r.get());
  }
  Element mul(const Element& a, const Element& b) const {
    auto pa = to_point(a), pb = to_point(b);
    Point r(group_.get());
    EC_POINT_add(group_.get(), r.get(), pa.get(), pb.get(), ctx());
    return from_point(r.get());
  }
  Element inverse(const Element& a) const {
    auto pa = to_point(a);
    EC_POINT_invert(group_.get(), pa.get(), ctx());
    return from_point(pa.get());
  }
  Element div(const Element& a, const Element& b) const { return mul(a, inverse(b)); }
  bool is_identity(const Element& a) const { return a == Element(); }

  Bytes encode(const Element& e) const { return Bytes(e.b_.begin(), e.b_.end()); }
  Element decode(ByteView v) const {
    if (v.size() != 33) throw MalformedElement("P-256 element must be 33 bytes");
    Element e;
    std::copy(v.begin(), v.end(), e.b_.begin());
    if (is_identity(e)) return e;
    Point p(group_.get());
    if (EC_POINT_oct2point(group_.get(), p.get(), v.data(), v.size(), ctx()) != 1 ||
        EC_POINT_is_on_curve(group_.get(), p.get(), ctx()) != 1)
      throw MalformedElement("not a P-256 point");
    // canonical form only
    if (from_point(p.get()) != e) throw MalformedElement("non-canonical point encoding");
    return e;
  }

  // Try-and-increment on compressed x coordinates; cofactor is 1.
  Element hash_to_group(ByteView data) const {
    for (std::uint32_t ctr = 0;; ++ctr) {
      auto d = Sha256().update(as_view("qpdht/h2g/v1")).update_var(data).update_u32(ctr).finish();
      std::array<std::uint8_t, 33> buf{};
      buf[0] = static_cast<std::uint8_t>(0x02 | (d[31] & 1));
      auto x = Sha256().update(as_view("qpdht/h2g-x/v1")).update(d).finish();
      std::copy(x.begin(), x.end(), buf.begin() + 1);
      Point p(group_.get());
      if (EC_POINT_oct2point(group_.get(), p.get(), buf.data(), buf.size(), ctx()) == 1) return from_point(p.get());
    }
  }
  Element random_element(Drbg& rng) const { return hash_to_group(rng.bytes(32)); }

  std::optional<Scalar> dlog(const Element&) const { return std::nullopt; }

  Scalar scalar(std::uint64_t v) const {
    Bn b;
    BN_set_word(b.get(), v);
    return reduce(b);
  }
  Scalar random_scalar(Drbg& rng) const {
    // 48 bytes reduced mod n: bias below 2^-128
    return reduce(Bn(rng.bytes(48)));
  }
  Scalar random_nonzero_scalar(Drbg& rng) const {
    for (;;) {
      auto s = random_scalar(rng);
      if (!is_zero(s)) return s;
    }
  }
  Scalar add(const Scalar& a, const Scalar& b) const {
    Bn x(a.b_), y(b.b_), r, n(order_bytes_);
    BN_mod_add(r.get(), x.get(), y.get(), n.get(), ctx());
    return make(r);
  }
  Scalar sub(const Scalar& a, const Scalar& b) const {
    Bn x(a.b_), y(b.b_), r, n(order_bytes_);
    BN_mod_sub(r.get(), x.get(), y.get(), n.get(), ctx());
    return make(r);
  }
  Scalar mul(const Scalar& a, const Scalar& b) const {
    Bn x(a.b_), y(b.b_), r, n(order_bytes_);
    BN_mod_mul(r.get(), x.get(), y.get(), n.get(), ctx());
    return make(r);
  }
  Scalar neg(const Scalar& a) const { return sub(Scalar(), a); }
  Scalar inverse(const Scalar& a) const {
    if (is_zero(a)) throw InvalidArgument("zero has no inverse");
    Bn x(a.b_), r, n(order_bytes_);
    if (!BN_mod_inverse(r.get(), x.get(), n.get(), ctx())) throw Error("BN_mod_inverse failed");
    return make(r);
  }
  bool is_zero(const Scalar& a) const { return a == Scalar(); }
  Bytes encode(const Scalar& s) const { return Bytes(s.b_.begin(), s.b_.end()); }
  Scalar decode_scalar(ByteView v) const {
    if (v.size() != 32) throw DecodeError("scalar must be 32 bytes");
    Scalar s;
    std::copy(v.begin(), v.end(), s.b_.begin());
    if (!(s.b_ < order_bytes_)) throw DecodeError("scalar out of range");
    return s;
  }
  Scalar scalar_from_hash(ByteView data) const {
    auto d1 = Sha256().update(as_view("qpdht/h2s/0")).update(data).finish();
    auto d2 = Sha256().update(as_view("qpdht/h2s/1")).update(data).finish();
    Bytes wide(d1.begin(), d1.end());
    wide.insert(wide.end(), d2.begin(), d2.begin() + 16);
    return reduce(Bn(wide));
  }

 private:
  struct Bn {
    Bn() : p(BN_new(), &BN_free) {}
    explicit Bn(ByteView v) : Bn() { BN_bin2bn(v.data(), static_cast<int>(v.size()), p.get()); }
    explicit Bn(const std::array<std::uint8_t, 32>& a) : Bn(ByteView(a)) {}
    explicit Bn(const Bytes& v) : Bn(ByteView(v)) {}
    BIGNUM* get() const { return p.get(); }
    std::unique_ptr<BIGNUM, decltype(&BN_free)> p;
  };
  struct Point {
    explicit Point(const EC_GROUP* g) : p(EC_POINT_new(g), &EC_POINT_free) {}
    EC_POINT* get() const { return p.get(); }
    std::unique_ptr<EC_POINT, decltype(&EC_POINT_free)> p;
  };

  static BN_CTX* ctx() {
    thread_local std::unique_ptr<BN_CTX, decltype(&BN_CTX_free)> c(BN_CTX_new(), &BN_CTX_free);
    return c.get();
  }
  static std::array<std::uint8_t, 32> to_scalar_bytes(const BIGNUM* b) {
    std::array<std::uint8_t, 32> out{};
    BN_bn2binpad(b, out.data(), 32);
    return out;
  }
  Scalar make(const Bn& b) const {
    Scalar s;
    s.b_ = to_scalar_bytes(b.get());
    return s;
  }
  Scalar reduce(const Bn& b) const {
    Bn r, n(order_bytes_);
    BN_nnmod(r.get(), b.get(), n.get(), ctx());
    return make(r);
  }
  Point to_point(const Element& e) const {
    Point p(group_.get());
    if (is_identity(e)) {
      EC_POINT_set_to_infinity(group_.get(), p.get());
    } else if (EC_POINT_oct2point(group_.get(), p.get(), e.b_.data(), e.b_.size(), ctx()) != 1) {
      throw MalformedElement("not a P-256 point");
    }
    return p;
  }
  Element from_point(const EC_POINT* p) const {
    Element e;
    if (EC_POINT_is_at_infinity(group_.get(), p)) return e;
    EC_POINT_point2oct(group_.get(), p, POINT_CONVERSION_COMPRESSED, e.b_.data(), e.b_.size(), ctx());
    return e;
  }

  std::shared_ptr<EC_GROUP> group_;
  std::array<std::uint8_t, 32> order_bytes_{};
  Element generator_;
};

static_assert(PrimeOrderGroup<P256Group>);

}  // namespace qpdht::algebra
