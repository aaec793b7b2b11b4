#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <unordered_map>

#include "qpdht/algebra/exp_counter.hpp"
#include "qpdht/algebra/group.hpp"

namespace qpdht::algebra {

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
    e >>= 1;
  }
  return r;
}

// Deterministic for all 64-bit inputs with these bases.
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t sp : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % sp == 0) return n == sp;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

}  // namespace detail

// Order-q subgroup of Z_p^* for word-sized p. Test double only: the sizes
// give no security, and the toy preset ships a discrete-log table.
class SchnorrGroup {
 public:
  class Element {
   public:
    std::uint64_t value() const noexcept { return v_; }
    friend bool operator==(const Element&, const Element&) = default;
    friend auto operator<=>(const Element&, const Element&) = default;

   private:
    friend class SchnorrGroup;
    explicit Element(std::uint64_t v) : v_(v) {}
    std::uint64_t v_;
  };

  class Scalar {
   public:
    Scalar() = default;
    std::uint64_t value() const noexcept { return v_; }
    friend bool operator==(const Scalar&, const Scalar&) = default;
    friend auto operator<=>(const Scalar&, const Scalar&) = default;

   private:
    friend class SchnorrGroup;
    explicit Scalar(std::uint64_t v) : v_(v) {}
    std::uint64_t v_ = 0;
  };

  SchnorrGroup(std::string name, std::uint64_t p, std::uint64_t q, std::uint64_t g, bool with_dlog_table)
      : name_(std::move(name)), p_(p), q_(q), g_(g) {
    if (p >= (1ULL << 63)) throw InvalidArgument("modulus too large for word arithmetic");
    if (!detail::is_prime_u64(p) || !detail::is_prime_u64(q)) throw InvalidArgument("p and q must be prime");
    if ((p - 1) % q != 0) throw InvalidArgument("q must divide p-1");
    cofactor_ = (p - 1) / q;
    if (g <= 1 || g >= p || detail::powmod(g, q, p) != 1) throw InvalidArgument("g must have order q");
    if (with_dlog_table) {
      if (q > (1u << 20)) throw InvalidArgument("discrete-log table only for small q");
      auto table = std::make_shared<std::unordered_map<std::uint64_t, std::uint64_t>>();
      std::uint64_t x = 1;
      for (std::uint64_t i = 0; i < q; ++i) {
        table->emplace(x, i);
        x = detail::mulmod(x, g, p);
      }
      dlog_ = std::move(table);
    }
  }

  // q=101 inside Z_607^*, generator 2^6. Comes with a discrete-log oracle.
  static SchnorrGroup toy() { return SchnorrGroup("toy101", 607, 101, 64, true); }
  // Safe prime p = 2q+1 just under 2^63; generator 4 (a square).
  static SchnorrGroup sim64() {
    return SchnorrGroup("sim64", 9223372036854771239ULL, 4611686018427385619ULL, 4, false);
  }

  GroupParams params() const {
    GroupParams gp;
    gp.name = name_;
    gp.descriptor = "Z_p^* p=" + std::to_string(p_) + " g=" + std::to_string(g_);
    gp.order_hex = hex64(q_);
    gp.kappa = 0;
    gp.mode = GroupMode::testdouble;
    return gp;
  }
  std::uint64_t p() const noexcept { return p_; }
  std::uint64_t q() const noexcept { return q_; }
  bool has_dlog_oracle() const noexcept { return static_cast<bool>(dlog_); }

  std::size_t element_size() const noexcept { return 8; }
  std::size_t scalar_size() const noexcept { return 8; }

  Element generator() const { return Element(g_); }
  Element identity() const { return Element(1); }

  Element exp(const Element& b, const Scalar& e) const {
    count_exponentiation();
    return Element(detail::powmod(b.v_, e.v_, p_));
  }
  Element mul(const Element& a, const Element& b) const { return Element(detail::mulmod(a.v_, b.v_, p_)); }
  Element inverse(const Element& a) const {
    // a^{q-1} = a^{-1} inside the order-q subgroup
    return Element(detail::powmod(a.v_, q_ - 1, p_));
  }
  Element div(const Element& a, const Element& b) const { return mul(a, inverse(b)); }
  bool is_identity(const Element& a) const { return a.v_ == 1; }

  bool is_member(std::uint64_t v) const { return v >= 1 && v < p_ && detail::powmod(v, q_, p_) == 1; }

  Bytes encode(const Element& e) const { return u64_bytes(e.v_); }
  Element decode(ByteView v) const {
    if (v.size() != 8) throw MalformedElement("group element must be 8 bytes");
    auto x = ByteReader(v).u64();
    if (!is_member(x)) throw MalformedElement("value is not in the order-q subgroup");
    return Element(x);
  }
  // Test hook: wraps a raw residue, rejecting non-members.
  Element element_from_u64(std::uint64_t x) const {
    if (!is_member(x)) throw MalformedElement("value is not in the order-q subgroup");
    return Element(x);
  }

  Element hash_to_group(ByteView data) const {
    for (std::uint32_t ctr = 0;; ++ctr) {
      auto d = Sha256().update(as_view("qpdht/h2g/v1")).update_var(data).update_u32(ctr).finish();
      std::uint64_t x = ByteReader(ByteView(d.data(), 8)).u64() % p_;
      if (x == 0) continue;
      auto y = detail::powmod(x, cofactor_, p_);
      if (y != 1) return Element(y);
    }
  }
  Element random_element(Drbg& rng) const {
    for (;;) {
      auto x = rng.uniform(p_ - 1) + 1;
      auto y = detail::powmod(x, cofactor_, p_);
      if (y != 1) return Element(y);
    }
  }

  std::optional<Scalar> dlog(const Element& e) const {
    if (!dlog_) return std::nullopt;
    auto it = dlog_->find(e.v_);
    if (it == dlog_->end()) return std::nullopt;
    return Scalar(it->second);
  }

  Scalar scalar(std::uint64_t v) const { return Scalar(v % q_); }
  Scalar random_scalar(Drbg& rng) const { return Scalar(rng.uniform(q_)); }
  Scalar random_nonzero_scalar(Drbg& rng) const { return Scalar(rng.uniform(q_ - 1) + 1); }
  Scalar add(const Scalar& a, const Scalar& b) const { return Scalar((a.v_ + b.v_) % q_); }
  Scalar sub(const Scalar& a, const Scalar& b) const { return Scalar((a.v_ + q_ - b.v_) % q_); }
  Scalar mul(const Scalar& a, const Scalar& b) const { return Scalar(detail::mulmod(a.v_, b.v_, q_)); }
  Scalar neg(const Scalar& a) const { return Scalar((q_ - a.v_) % q_); }
  Scalar inverse(const Scalar& a) const {
    if (a.v_ == 0) throw InvalidArgument("zero has no inverse");
    return Scalar(detail::powmod(a.v_, q_ - 2, q_));
  }
  bool is_zero(const Scalar& a) const { return a.v_ == 0; }
  Bytes encode(const Scalar& s) const { return u64_bytes(s.v_); }
  Scalar decode_scalar(ByteView v) const {
    if (v.size() != 8) throw DecodeError("scalar must be 8 bytes");
    auto x = ByteReader(v).u64();
    if (x >= q_) throw DecodeError("scalar out of range");
    return Scalar(x);
  }
  Scalar scalar_from_hash(ByteView data) const {
    auto d = sha256(data);
    unsigned __int128 x = 0;
    for (int i = 0; i < 16; ++i) x = (x << 8) | d[i];
    return Scalar(static_cast<std::uint64_t>(x % q_));
  }

 private:
  static Bytes u64_bytes(std::uint64_t v) {
    ByteWriter w;
    w.u64(v);
    return w.take();
  }
  static std::string hex64(std::uint64_t v) {
    ByteWriter w;
    w.u64(v);
    return to_hex(w.bytes());
  }

  std::string name_;
  std::uint64_t p_, q_, g_, cofactor_ = 0;
  std::shared_ptr<const std::unordered_map<std::uint64_t, std::uint64_t>> dlog_;
};

static_assert(PrimeOrderGroup<SchnorrGroup>);

}  // namespace qpdht::algebra
