// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cpsec/error.hpp"
#include "cpsec/mscrypto.hpp"
#include "cpsec/rng.hpp"
#include "oracles.hpp"

using namespace cpsec;
using namespace cpsec::mscrypto;

namespace {

const SystemParams& P() { return SystemParams::standard(); }

Bytes seed_of(std::uint64_t n) {
  DetRng rng(n);
  return rng.bytes(32);
}

KeyPair key(std::uint64_t n) { return keygen(P(), seed_of(n)); }

SecretKey small_key(std::uint64_t v) { return SecretKey(Scalar::from_u64(v)); }

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected cpsec::Error";
  return ErrorCode::DecodeError;
}

}  // namespace

TEST(SystemParams, GroupOrderIsPrime) { EXPECT_TRUE(oracle::is_prime(group_order())); }

TEST(SystemParams, TagsDistinctAndRoundTrip) {
  const auto& p = P();
  EXPECT_NE(p.dst_sig, p.dst_pop);
  EXPECT_NE(p.dst_sig, p.dst_id);
  EXPECT_NE(p.dst_pop, p.dst_id);
  auto bytes = p.to_bytes();
  Reader r(bytes);
  auto back = SystemParams::decode(r);
  r.expect_end();
  EXPECT_EQ(back.to_bytes(), bytes);
}

TEST(SystemParams, RejectsCollidingTags) {
  auto p = P();
  p.dst_pop = p.dst_sig;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidParams);
  auto bytes = p.to_bytes();
  Reader r(bytes);
  EXPECT_EQ(code_of([&] { SystemParams::decode(r); }), ErrorCode::InvalidParams);
}

TEST(Scalar, CanonicalRangeAndArithmetic) {
  EXPECT_FALSE(Scalar::from_canonical(group_order()).has_value());
  auto q_minus_1 = Scalar::from_u64(0) - Scalar::from_u64(1);
  auto bytes = q_minus_1.to_bytes();
  ASSERT_TRUE(Scalar::from_canonical(bytes).has_value());
  EXPECT_TRUE((q_minus_1 + Scalar::from_u64(1)).is_zero());
  EXPECT_EQ(Scalar::from_u64(5) * Scalar::from_u64(7), Scalar::from_u64(35));
  EXPECT_TRUE(Scalar::reduce(group_order()).is_zero());
}

TEST(Keygen, PublicKeyMatchesDoubleAndAddOracle) {
  for (std::uint64_t n = 0; n < 8; ++n) {
    auto kp = key(n);
    auto expected = oracle::g2_times(kp.sk.export_bytes());
    EXPECT_EQ(kp.pk.point, expected);
    EXPECT_TRUE(verify_possession(kp.pk, kp.pop, P()));
  }
}

TEST(Keygen, DeterministicAndSeedSensitive) {
  auto a = key(1), b = key(1), c = key(2);
  EXPECT_EQ(a.sk.export_bytes(), b.sk.export_bytes());
  EXPECT_EQ(a.pk.to_bytes(), b.pk.to_bytes());
  EXPECT_EQ(a.pop, b.pop);
  EXPECT_NE(a.pk, c.pk);
}

TEST(Keygen, RejectsShortSeed) {
  Bytes seed(31, 1);
  EXPECT_EQ(code_of([&] { keygen(P(), seed); }), ErrorCode::InvalidParams);
}

TEST(Sign, RoundTripAndWrongMessageOrKey) {
  auto kp = key(3), other = key(4);
  auto msg = to_bytes("temperature=42");
  auto sig = sign(kp.sk, msg, P());
  EXPECT_TRUE(verify(kp.pk, msg, sig, P()));
  EXPECT_FALSE(verify(kp.pk, to_bytes("temperature=43"), sig, P()));
  EXPECT_FALSE(verify(other.pk, msg, sig, P()));
  EXPECT_FALSE(verify(kp.pk, msg, sign(other.sk, msg, P()), P()));
}

TEST(Sign, KnownScalarMatchesOracle) {
  auto msg = to_bytes("oracle");
  for (std::uint64_t a : {1ull, 2ull, 12345ull, 0xfffffffffull}) {
    auto sig = sign(small_key(a), msg, P());
    auto h = G1::hash_to(msg, P().dst_sig);
    EXPECT_EQ(sig.point, oracle::g1_times(h, oracle::be_from_u64(a)));
  }
}

TEST(Verify, IdentityKeyIsFalseNotError) {
  auto msg = to_bytes("m");
  auto sig = sign(small_key(9), msg, P());
  EXPECT_FALSE(verify(PublicKey{G2()}, msg, sig, P()));
}

TEST(Verify, EveryByteFlipOfSignatureFails) {
  auto kp = key(5);
  auto msg = to_bytes("flip me");
  auto bytes = sign(kp.sk, msg, P()).to_bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    for (std::uint8_t mask : {0x01, 0x80, 0xff}) {
      auto tampered = bytes;
      tampered[i] ^= mask;
      auto pt = G1::decompress(tampered);
      if (!pt) continue;  // rejected at decode
      EXPECT_FALSE(verify(kp.pk, msg, Signature{*pt}, P())) << "byte " << i;
    }
  }
}

TEST(Aggregate, SignaturesSingleSumAndOrder) {
  auto msg = to_bytes("same message");
  EXPECT_EQ(code_of([] { aggregate_signatures({}); }), ErrorCode::EmptyAggregate);

  auto sa = sign(small_key(11), msg, P());
  const Signature one[] = {sa};
  EXPECT_EQ(aggregate_signatures(one), sa);

  auto a = key(6), b = key(7), c = key(8);
  std::vector<Signature> sigs = {sign(a.sk, msg, P()), sign(b.sk, msg, P()), sign(c.sk, msg, P())};
  auto agg = aggregate_signatures(sigs);
  std::vector<oracle::Be32> terms = {a.sk.export_bytes(), b.sk.export_bytes(), c.sk.export_bytes()};
  auto h = G1::hash_to(msg, P().dst_sig);
  EXPECT_EQ(agg.point, oracle::g1_times(h, oracle::scalar_sum(terms)));

  std::reverse(sigs.begin(), sigs.end());
  EXPECT_EQ(aggregate_signatures(sigs), agg);
}

TEST(Aggregate, PublicKeysSumAndRogueKey) {
  auto a = key(9), b = key(10);
  const std::pair<PublicKey, ProofOfPossession> one[] = {{a.pk, a.pop}};
  EXPECT_EQ(aggregate_public_keys(one, P()), a.pk);

  const std::pair<PublicKey, ProofOfPossession> two[] = {{a.pk, a.pop}, {b.pk, b.pop}};
  std::vector<oracle::Be32> terms = {a.sk.export_bytes(), b.sk.export_bytes()};
  EXPECT_EQ(aggregate_public_keys(two, P()).point, oracle::g2_times(oracle::scalar_sum(terms)));

  // Rogue key: pk' = target - pk_honest makes the naive sum equal target,
  // a key the attacker controls, but no valid PoP exists for pk'.
  auto target = key(11);
  PublicKey rogue{target.pk.point - a.pk.point};
  ProofOfPossession forged = prove_possession(target.sk, rogue, P());
  const std::pair<PublicKey, ProofOfPossession> attack[] = {{a.pk, a.pop}, {rogue, forged}};
  try {
    aggregate_public_keys(attack, P());
    FAIL() << "rogue key accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RogueKeyRejected);
    EXPECT_EQ(e.value(), 1);
  }
}

TEST(Multisig, ThreeOfThreeOmittedShareAndEmpty) {
  auto msg = to_bytes("cosign");
  std::vector<KeyPair> keys = {key(20), key(21), key(22)};
  std::vector<PublicKey> roster;
  std::vector<Signature> sigs;
  for (auto& k : keys) {
    roster.push_back(k.pk);
    sigs.push_back(sign(k.sk, msg, P()));
  }
  MultiSignature ms{aggregate_signatures(sigs), SignerBitmap::all(3)};
  EXPECT_TRUE(verify_multisig(roster, ms, msg, P()));

  // Signer 2 claimed but absent.
  MultiSignature partial{aggregate_signatures(std::span(sigs).first(2)), SignerBitmap::all(3)};
  EXPECT_FALSE(verify_multisig(roster, partial, msg, P()));

  MultiSignature none{sigs[0], SignerBitmap(3)};
  EXPECT_FALSE(verify_multisig(roster, none, msg, P()));

  MultiSignature wrong_len{ms.agg_sig, SignerBitmap::all(2)};
  EXPECT_EQ(code_of([&] { verify_multisig(roster, wrong_len, msg, P()); }),
            ErrorCode::BitmapMismatch);
}

TEST(Multisig, HomomorphismPropertyUpTo16) {
  DetRng rng(77);
  for (std::size_t k = 1; k <= 16; ++k) {
    auto msg = rng.bytes(1 + rng.uniform(0, 40));
    std::vector<PublicKey> roster;
    std::vector<Signature> sigs;
    std::vector<oracle::Be32> scalars;
    for (std::size_t i = 0; i < k; ++i) {
      auto kp = keygen(P(), rng.bytes(32));
      roster.push_back(kp.pk);
      sigs.push_back(sign(kp.sk, msg, P()));
      scalars.push_back(kp.sk.export_bytes());
    }
    MultiSignature ms{aggregate_signatures(sigs), SignerBitmap::all(k)};
    EXPECT_TRUE(verify_multisig(roster, ms, msg, P())) << "k=" << k;
    auto h = G1::hash_to(msg, P().dst_sig);
    EXPECT_EQ(ms.agg_sig.point, oracle::g1_times(h, oracle::scalar_sum(scalars))) << "k=" << k;
  }
}

TEST(Multisig, NonFrameabilityEachPosition) {
  DetRng rng(78);
  for (std::size_t k = 1; k <= 8; ++k) {
    auto msg = rng.bytes(16);
    std::vector<PublicKey> roster;
    std::vector<Signature> sigs;
    for (std::size_t i = 0; i < k; ++i) {
      auto kp = keygen(P(), rng.bytes(32));
      roster.push_back(kp.pk);
      sigs.push_back(sign(kp.sk, msg, P()));
    }
    for (std::size_t omit = 0; omit < k; ++omit) {
      std::vector<Signature> rest;
      for (std::size_t i = 0; i < k; ++i)
        if (i != omit) rest.push_back(sigs[i]);
      Signature agg = rest.empty() ? Signature{G1()} : aggregate_signatures(rest);
      MultiSignature ms{agg, SignerBitmap::all(k)};
      EXPECT_FALSE(verify_multisig(roster, ms, msg, P())) << "k=" << k << " omit=" << omit;
    }
  }
}

TEST(DomainSeparation, SignatureNeverVerifiesAsPossession) {
  DetRng rng(79);
  for (int i = 0; i < 20; ++i) {
    auto kp = keygen(P(), rng.bytes(32));
    auto sig = sign(kp.sk, kp.pk.to_bytes(), P());
    EXPECT_TRUE(verify(kp.pk, kp.pk.to_bytes(), sig, P()));
    EXPECT_FALSE(verify_possession(kp.pk, ProofOfPossession{sig}, P()));
    EXPECT_FALSE(verify(kp.pk, kp.pk.to_bytes(), kp.pop.sig, P()));
  }
}

TEST(IdentityScalar, DeterministicDistinctAndInRange) {
  auto peer = key(30);
  auto a1 = hash_to_identity_scalar(to_bytes("sensor-01"), peer.sk, P());
  auto a2 = hash_to_identity_scalar(to_bytes("sensor-01"), peer.sk, P());
  auto b = hash_to_identity_scalar(to_bytes("sensor-02"), peer.sk, P());
  EXPECT_EQ(a1, a2);
  EXPECT_NE(a1, b);
  auto other_peer = key(31);
  EXPECT_NE(a1, hash_to_identity_scalar(to_bytes("sensor-01"), other_peer.sk, P()));

  DetRng rng(80);
  auto q = group_order();
  for (int i = 0; i < 10000; ++i) {
    auto id = rng.bytes(rng.uniform(0, 64));
    auto s = hash_to_identity_scalar(id, peer.sk, P()).to_bytes();
    ASSERT_TRUE(std::lexicographical_compare(s.begin(), s.end(), q.begin(), q.end()));
    ASSERT_NE(s, oracle::Be32{});
  }
}

TEST(CombineKeys, DegenerateCases) {
  auto x = small_key(5);
  EXPECT_EQ(code_of([&] { combine_keys(x, Scalar(), P()); }), ErrorCode::DegenerateKey);
  auto d = Scalar() - x.scalar();  // q - x
  EXPECT_EQ(code_of([&] { combine_keys(x, d, P()); }), ErrorCode::DegenerateKey);
}

TEST(CombineKeys, TinyScalarOracle) {
  auto combined = combine_keys(small_key(5), Scalar::from_u64(7), P());
  EXPECT_EQ(combined.sk.export_bytes(), oracle::be_from_u64(12));
  EXPECT_EQ(combined.pk.point, oracle::g2_times(oracle::be_from_u64(12)));
}

TEST(CombineKeys, SignUnderCombinedVerifiesUnderSumOfKeys) {
  DetRng rng(81);
  for (int i = 0; i < 10; ++i) {
    auto x = keygen(P(), rng.bytes(32));
    auto d = Scalar::reduce(rng.bytes(48));
    auto combined = combine_keys(x.sk, d, P());
    PublicKey pk_sum{x.pk.point + P().g2 * d};
    auto msg = rng.bytes(24);
    EXPECT_TRUE(verify(pk_sum, msg, sign(combined.sk, msg, P()), P()));
    EXPECT_EQ(combined.pk, pk_sum);
  }
}

TEST(Encoding, StrictDecoding) {
  auto kp = key(40);
  auto pk_bytes = kp.pk.to_bytes();
  Reader r(pk_bytes);
  EXPECT_EQ(PublicKey::decode(r), kp.pk);
  r.expect_end();

  // Bitmap padding bits must be zero.
  Writer w;
  w.u16(3);
  w.u8(0b1000'0111);
  Reader rb(w.data());
  EXPECT_EQ(code_of([&] { SignerBitmap::decode(rb); }), ErrorCode::DecodeError);

  SignerBitmap bm(10);
  bm.set(0);
  bm.set(9);
  Writer wb;
  bm.encode(wb);
  Reader rr(wb.data());
  EXPECT_EQ(SignerBitmap::decode(rr), bm);
  EXPECT_EQ(bm.count(), 2u);
}

TEST(SigCache, MemoizesBothOutcomes) {
  SigCache cache;
  auto kp = key(41);
  auto msg = to_bytes("cached");
  auto sig = sign(kp.sk, msg, P());
  EXPECT_TRUE(verify(kp.pk, msg, sig, P(), &cache));
  EXPECT_TRUE(verify(kp.pk, msg, sig, P(), &cache));
  EXPECT_FALSE(verify(kp.pk, to_bytes("other"), sig, P(), &cache));
  EXPECT_FALSE(verify(kp.pk, to_bytes("other"), sig, P(), &cache));
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_EQ(cache.hits(), 2u);
}

// Frozen vectors: seed -> sk, pk, pop, sig("cpsec test vector").
TEST(Vectors, CheckedInHexVectors) {
  std::ifstream in("vectors/mscrypto_vectors.txt");
  ASSERT_TRUE(in) << "vectors/mscrypto_vectors.txt missing";
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string seed, sk, pk, pop, sig;
    fields >> seed >> sk >> pk >> pop >> sig;
    auto kp = keygen(P(), from_hex(seed));
    EXPECT_EQ(to_hex(kp.sk.export_bytes()), sk);
    EXPECT_EQ(to_hex(kp.pk.to_bytes()), pk);
    Writer w;
    kp.pop.encode(w);
    EXPECT_EQ(to_hex(w.data()), pop);
    EXPECT_EQ(to_hex(sign(kp.sk, as_bytes("cpsec test vector"), P()).to_bytes()), sig);
    // Independent check of the frozen pk.
    EXPECT_EQ(kp.pk.point, oracle::g2_times(kp.sk.export_bytes()));
    ++checked;
  }
  EXPECT_GE(checked, 3);
}
