#include <gtest/gtest.h>

#include "qpdht/algebra/schnorr_group.hpp"
#include "qpdht/threshold/dkg.hpp"
#include "qpdht/threshold/signature.hpp"

using namespace qpdht;
using namespace qpdht::algebra;
using namespace qpdht::threshold;

using Toy = SchnorrGroup;

namespace {

// Independent oracle: shares from the DKG must lie on one degree-t
// polynomial whose constant term is log_g(PK). Checked by brute force in the
// toy field: recover f(0) from t+1 shares via explicit linear solve.
std::uint64_t toy_interpolate_at_zero(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pts) {
  auto inv = [](std::uint64_t a) {
    for (std::uint64_t x = 1; x < 101; ++x)
      if (a * x % 101 == 1) return x;
    return std::uint64_t{0};
  };
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::uint64_t num = 1, den = 1;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      num = num * pts[j].first % 101;
      den = den * ((pts[j].first + 101 - pts[i].first) % 101) % 101;
    }
    acc = (acc + pts[i].second * num % 101 * inv(den)) % 101;
  }
  return acc;
}

}  // namespace

TEST(Dkg, FourParticipantsAnyTwoSharesGiveKey) {
  auto g = Toy::toy();
  Drbg rng(1);
  auto out = dkg_run(g, 4, 1, rng);
  auto sk = g.dlog(out.pk)->value();
  for (std::uint32_t a = 1; a <= 4; ++a)
    for (std::uint32_t b = a + 1; b <= 4; ++b)
      EXPECT_EQ(toy_interpolate_at_zero({{a, out.sk_shares[a - 1].value()}, {b, out.sk_shares[b - 1].value()}}), sk);
  for (std::uint32_t j = 1; j <= 4; ++j) EXPECT_EQ(out.pk_shares[j - 1], g.exp(g.generator(), out.sk_shares[j - 1]));
  // One share alone: the top coefficient is nonzero, so treating it as a
  // constant polynomial never yields sk.
  for (std::uint32_t a = 1; a <= 4; ++a) EXPECT_NE(out.sk_shares[a - 1].value(), sk);
}

TEST(Dkg, SingleParty) {
  auto g = Toy::toy();
  Drbg rng(2);
  auto out = dkg_run(g, 1, 0, rng);
  EXPECT_EQ(out.pk, g.exp(g.generator(), out.sk_shares[0]));
  EXPECT_EQ(out.pk_shares[0], out.pk);
}

TEST(Dkg, InconsistentDealerIsExcluded) {
  auto g = Toy::toy();
  Drbg rng(3);
  DkgFault f;
  f.participant = 2;
  auto out = dkg_run(g, 4, 1, rng, {f});
  EXPECT_EQ(out.disqualified, std::vector<std::uint32_t>{2});
  EXPECT_EQ(out.qual, (std::vector<std::uint32_t>{1, 3, 4}));
  auto sk = g.dlog(out.pk)->value();
  EXPECT_EQ(toy_interpolate_at_zero({{1, out.sk_shares[0].value()}, {3, out.sk_shares[2].value()}}), sk);
}

TEST(Dkg, CorrectRevealKeepsDealer) {
  auto g = Toy::toy();
  Drbg rng(4);
  DkgFault f;
  f.participant = 3;
  f.victims = {1};
  f.reveal_correct = true;
  auto out = dkg_run(g, 4, 1, rng, {f});
  EXPECT_TRUE(out.disqualified.empty());
  DkgFault fc;
  fc.participant = 1;
  fc.kind = DkgFault::Kind::false_complaint;
  auto out2 = dkg_run(g, 4, 1, rng, {fc});
  EXPECT_TRUE(out2.disqualified.empty());
  EXPECT_EQ(out2.qual.size(), 4u);
}

TEST(Dkg, TooManyCulpritsAborts) {
  auto g = Toy::toy();
  Drbg rng(5);
  DkgFault a, b;
  a.participant = 1;
  b.participant = 4;
  try {
    dkg_run(g, 4, 1, rng, {a, b});
    FAIL() << "expected abort";
  } catch (const DkgAborted& e) {
    EXPECT_EQ(e.culprits(), (std::vector<std::uint32_t>{1, 4}));
  }
  EXPECT_THROW(dkg_run(g, 3, 1, rng), InvalidArgument);
}

TEST(Dkg, DeterministicForSeed) {
  auto g = Toy::sim64();
  Drbg a(9), b(9);
  auto x = dkg_run(g, 7, 2, a), y = dkg_run(g, 7, 2, b);
  EXPECT_EQ(x.pk, y.pk);
  EXPECT_EQ(x.prf_key, y.prf_key);
}

class Signing : public ::testing::Test {
 protected:
  Toy g = Toy::sim64();
  SimulatedPairing<Toy> e{g};
  Drbg rng{10};
  DkgOutput<Toy> key = dkg_run(g, 7, 2, rng, {}, &e);
};

TEST_F(Signing, ShareRoundTripAndCrossCheck) {
  Bytes m = to_bytes("p|addr|ts");
  for (std::uint32_t i = 1; i <= 7; ++i) {
    auto s = sign_share(g, i, key.sk_shares[i - 1], m);
    EXPECT_TRUE(verify_share(e, key.pk_shares[i - 1], m, s));
    EXPECT_FALSE(verify_share(e, key.pk_shares[i % 7], m, s));
    EXPECT_NE(s, sign_share(g, i, key.sk_shares[i - 1], as_view("other")));
  }
}

TEST_F(Signing, CombineIsSubsetIndependent) {
  Bytes m = to_bytes("message");
  std::vector<SignatureShare<Toy>> all;
  for (std::uint32_t i = 1; i <= 7; ++i) all.push_back(sign_share(g, i, key.sk_shares[i - 1], m));
  auto ref = combine(g, all, 2, m);
  EXPECT_TRUE(verify(e, key.pk, m, ref.sigma));
  std::vector<SignatureShare<Toy>> other{all[6], all[3], all[4]};
  EXPECT_EQ(combine(g, other, 2, m).sigma, ref.sigma);
  EXPECT_THROW(combine(g, std::vector<SignatureShare<Toy>>{all[0], all[1]}, 2, m), InsufficientShares);
  EXPECT_THROW(combine(g, std::vector<SignatureShare<Toy>>{all[0], all[0], all[1]}, 2, m), InsufficientShares);
  Bytes flipped = m;
  flipped[0] ^= 1;
  EXPECT_FALSE(verify(e, key.pk, flipped, ref.sigma));
  auto key2 = dkg_run(g, 4, 1, rng, {}, &e);
  EXPECT_FALSE(verify(e, key2.pk, m, ref.sigma));
}

TEST_F(Signing, ShareEncodingRoundTrip) {
  auto s = sign_share(g, 5, key.sk_shares[4], as_view("x"));
  auto bytes = encode_share(g, s);
  ByteReader r(bytes);
  EXPECT_EQ(decode_share(g, r), s);
  ThresholdSignature<Toy> sig{to_bytes("abc"), s.sigma};
  auto sb = encode_signature(g, sig);
  ByteReader r2(sb);
  EXPECT_EQ(decode_signature(g, r2), sig);
}
