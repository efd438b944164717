// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "cpsec/codec.hpp"
#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/rng.hpp"

using namespace cpsec;

TEST(Hex, RoundTripAndRejects) {
  Bytes b = {0x00, 0x7f, 0x80, 0xff};
  EXPECT_EQ(to_hex(b), "007f80ff");
  EXPECT_EQ(from_hex("007F80ff"), b);
  EXPECT_THROW(from_hex("abc"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
}

// Published known-answer vectors (FIPS 180-2, RFC 4231, RFC 5869).
TEST(Hash, Sha256KnownAnswer) {
  EXPECT_EQ(to_hex(sha256(as_bytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, HmacKnownAnswer) {
  Bytes key(20, 0x0b);
  EXPECT_EQ(to_hex(hmac_sha256(key, as_bytes("Hi There"))),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
}

TEST(Hash, HkdfKnownAnswer) {
  Bytes ikm(22, 0x0b);
  auto salt = from_hex("000102030405060708090a0b0c");
  auto info = from_hex("f0f1f2f3f4f5f6f7f8f9");
  EXPECT_EQ(to_hex(hkdf_sha256(ikm, salt, info, 42)),
            "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf"
            "34007208d5b887185865");
}

TEST(Hash, HasherDomainsSeparate) {
  auto a = Hasher("a").update(as_bytes("bc")).finish();
  auto b = Hasher("ab").update(as_bytes("c")).finish();
  EXPECT_NE(a, b);
  auto a2 = Hasher("a").update(as_bytes("b")).update(as_bytes("c")).finish();
  EXPECT_EQ(a, a2);
}

TEST(Aead, SealOpenAndTamper) {
  Bytes key(kAeadKeySize, 7);
  auto ad = to_bytes("header");
  auto ct = aead_seal(key, as_bytes("secret share"), ad);
  EXPECT_EQ(ct.size(), 12 + kAeadTagSize);
  auto pt = aead_open(key, ct, ad);
  ASSERT_TRUE(pt.has_value());
  EXPECT_EQ(*pt, to_bytes("secret share"));
  for (std::size_t i = 0; i < ct.size(); ++i) {
    auto bad = ct;
    bad[i] ^= 1;
    EXPECT_FALSE(aead_open(key, bad, ad).has_value());
  }
  EXPECT_FALSE(aead_open(key, ct, as_bytes("other")).has_value());
}

TEST(Codec, RoundTrip) {
  Writer w;
  w.u8(1);
  w.u16(0x0203);
  w.u32(0x04050607);
  w.u64(0x08090a0b0c0d0e0full);
  w.boolean(true);
  w.str("hi");
  EXPECT_EQ(to_hex(w.data()),
            "01" "0203" "04050607" "08090a0b0c0d0e0f" "01" "00000002" "6869");
  Reader r(w.data());
  EXPECT_EQ(r.u8(), 1);
  EXPECT_EQ(r.u16(), 0x0203);
  EXPECT_EQ(r.u32(), 0x04050607u);
  EXPECT_EQ(r.u64(), 0x08090a0b0c0d0e0full);
  EXPECT_TRUE(r.boolean());
  EXPECT_EQ(r.str(), "hi");
  EXPECT_NO_THROW(r.expect_end());
}

TEST(Codec, StrictRejections) {
  Bytes truncated = {0x00, 0x00, 0x00, 0x05, 'a'};
  Reader r1(truncated);
  EXPECT_THROW(r1.bytes(), Error);

  Bytes bad_bool = {2};
  Reader r2(bad_bool);
  EXPECT_THROW(r2.boolean(), Error);

  Bytes trailing = {1, 2};
  Reader r3(trailing);
  r3.u8();
  EXPECT_THROW(r3.expect_end(), Error);

  Bytes huge_count = {0xff, 0xff, 0xff, 0xff};
  Reader r4(huge_count);
  EXPECT_THROW(r4.count(), Error);

  Bytes long_str = {0, 0, 0, 3, 'a', 'b', 'c'};
  Reader r5(long_str);
  EXPECT_THROW(r5.str(2), Error);
}

TEST(Error, RendersCodeAndValue) {
  Error e(ErrorCode::ThresholdUnmet, 2, "need 3");
  EXPECT_EQ(std::string(e.what()), "ThresholdUnmet(2): need 3");
  EXPECT_EQ(e.code(), ErrorCode::ThresholdUnmet);
  EXPECT_EQ(e.value(), 2);
  Error plain(ErrorCode::NotFound, "k");
  EXPECT_FALSE(plain.value().has_value());
}

TEST(Rng, DeterministicAndDerivedStreamsDiffer) {
  DetRng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  auto x = DetRng::derive(5, "net");
  auto y = DetRng::derive(5, "bench");
  EXPECT_NE(x.next(), y.next());
}

TEST(Rng, UniformBoundsAndCoverage) {
  DetRng rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = rng.uniform(40, 47);
    ASSERT_GE(v, 40u);
    ASSERT_LE(v, 47u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_EQ(rng.uniform(3, 3), 3u);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  DetRng rng(10);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}
