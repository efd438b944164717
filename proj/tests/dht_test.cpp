// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cpsec/dhtstore.hpp"
#include "cpsec/error.hpp"

using namespace cpsec;
using namespace cpsec::dht;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidParams;
}

NodeId id_from_hex(std::string_view hex) {
  auto b = from_hex(hex);
  NodeId id{};
  std::copy(b.begin(), b.end(), id.end() - static_cast<std::ptrdiff_t>(b.size()));
  return id;
}

// Brute force: sort every live id by XOR distance, computed bit by bit.
std::vector<NodeId> k_closest_oracle(const DhtNetwork& net, const NodeId& target, std::size_t k) {
  std::vector<NodeId> live;
  for (std::uint32_t i = 0; i < net.size(); ++i)
    if (!net.is_down(i)) live.push_back(net.id(i));
  auto dist_bits = [&](const NodeId& x) {
    std::vector<bool> bits;
    for (std::size_t i = 0; i < kIdBytes; ++i)
      for (int b = 7; b >= 0; --b) bits.push_back(((x[i] ^ target[i]) >> b) & 1);
    return bits;
  };
  std::sort(live.begin(), live.end(),
            [&](const NodeId& a, const NodeId& b) { return dist_bits(a) < dist_bits(b); });
  live.resize(std::min(k, live.size()));
  return live;
}

Digest openssl_sha256(ByteView data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

TEST(Distance, XorMetric) {
  auto a = id_from_hex("01");
  auto b = id_from_hex("03");
  EXPECT_EQ(distance(a, b), id_from_hex("02"));
  EXPECT_EQ(distance(a, a), NodeId{});
  DetRng rng(1);
  for (int i = 0; i < 50; ++i) {
    NodeId x{}, y{};
    auto bx = rng.bytes(kIdBytes), by = rng.bytes(kIdBytes);
    std::copy(bx.begin(), bx.end(), x.begin());
    std::copy(by.begin(), by.end(), y.begin());
    EXPECT_EQ(distance(x, y), distance(y, x));
  }
}

TEST(Distance, BucketIndex) {
  NodeId zero{};
  EXPECT_EQ(bucket_index(zero, zero), -1);
  EXPECT_EQ(bucket_index(zero, id_from_hex("01")), 0);
  EXPECT_EQ(bucket_index(zero, id_from_hex("02")), 1);
  EXPECT_EQ(bucket_index(zero, id_from_hex("03")), 1);
  EXPECT_EQ(bucket_index(zero, id_from_hex("0100")), 8);
  NodeId top{};
  top[0] = 0x80;
  EXPECT_EQ(bucket_index(zero, top), 159);
}

TEST(RoutingTable, LeastRecentlySeenIsEvictionCandidate) {
  RoutingTable t(NodeId{}, 2);
  // 4..7 all land in bucket 2.
  EXPECT_TRUE(t.observe({id_from_hex("04"), 4, 1}).inserted);
  EXPECT_TRUE(t.observe({id_from_hex("05"), 5, 2}).inserted);
  t.observe({id_from_hex("04"), 4, 3});
  EXPECT_EQ(t.bucket(2).front().node, 5u);
  auto r = t.observe({id_from_hex("06"), 6, 4});
  EXPECT_FALSE(r.inserted);
  ASSERT_TRUE(r.candidate);
  EXPECT_EQ(r.candidate->node, 5u);
  t.keep_head(2, 5);
  EXPECT_EQ(t.bucket(2).front().node, 4u);
  EXPECT_FALSE(t.contains(id_from_hex("06")));
  t.evict_head(2, {id_from_hex("06"), 6, 6});
  EXPECT_FALSE(t.contains(id_from_hex("04")));
  EXPECT_TRUE(t.contains(id_from_hex("06")));
  EXPECT_EQ(t.size(), 2u);
  t.observe({NodeId{}, 0, 7});
  EXPECT_EQ(t.size(), 2u);
}

TEST(RoutingTable, BucketsHoldOnlyTheirRange) {
  auto net = DhtNetwork::build({}, 64, 3);
  for (std::uint32_t n = 0; n < net.size(); ++n) {
    const auto& t = net.table(n);
    std::set<NodeId> seen;
    for (int i = 0; i < static_cast<int>(kIdBits); ++i) {
      EXPECT_LE(t.bucket(i).size(), t.k());
      for (const auto& c : t.bucket(i)) {
        EXPECT_EQ(bucket_index(t.self(), c.id), i);
        EXPECT_TRUE(seen.insert(c.id).second);
      }
    }
  }
}

TEST(Join, TwoNodes) {
  DhtNetwork net({}, 1);
  net.spawn();
  net.spawn();
  net.join(1, 0);
  EXPECT_TRUE(net.table(0).contains(net.id(1)));
  EXPECT_TRUE(net.table(1).contains(net.id(0)));
}

TEST(Join, DeadBootstrap) {
  DhtNetwork net({}, 1);
  net.spawn();
  net.spawn();
  net.crash(0);
  EXPECT_EQ(code_of([&] { net.join(1, 0); }), ErrorCode::BootstrapUnreachable);
  EXPECT_EQ(code_of([&] { net.join(1, 7); }), ErrorCode::BootstrapUnreachable);
}

TEST(Join, NewcomerDiscoverableFromAll) {
  auto net = DhtNetwork::build({}, 64, 5);
  auto fresh = net.spawn();
  net.join(fresh, 17);
  for (std::uint32_t from = 0; from < 64; ++from) {
    auto r = net.lookup(from, net.id(fresh));
    ASSERT_FALSE(r.closest.empty());
    EXPECT_EQ(r.closest.front(), net.id(fresh)) << from;
  }
}

TEST(Lookup, SelfFirst) {
  auto net = DhtNetwork::build({}, 16, 2);
  auto r = net.lookup(4, net.id(4));
  EXPECT_EQ(r.closest.front(), net.id(4));
}

TEST(Lookup, EmptyAndSingleton) {
  DhtNetwork net({}, 1);
  net.spawn();
  auto r = net.lookup(0, NodeId{});
  EXPECT_EQ(r.closest.size(), 1u);
  EXPECT_EQ(r.hops, 0u);
}

TEST(Lookup, MatchesBruteForceUpTo128) {
  for (std::size_t n : {8u, 32u, 64u, 100u, 128u}) {
    auto net = DhtNetwork::build({}, n, n);
    DetRng rng(n);
    for (int q = 0; q < 60; ++q) {
      NodeId target{};
      auto b = rng.bytes(kIdBytes);
      std::copy(b.begin(), b.end(), target.begin());
      auto from = static_cast<std::uint32_t>(rng.uniform(0, n - 1));
      auto r = net.lookup(from, target);
      ASSERT_EQ(r.closest, k_closest_oracle(net, target, 4)) << "n=" << n << " q=" << q;
    }
  }
}

TEST(Lookup, AllPairsAt64) {
  auto net = DhtNetwork::build({}, 64, 9);
  for (std::uint32_t a = 0; a < 64; ++a)
    for (std::uint32_t b = 0; b < 64; ++b)
      ASSERT_EQ(net.lookup(a, net.id(b)).closest.front(), net.id(b));
}

TEST(Lookup, HopBoundAcrossSeeds) {
  const auto bound = static_cast<std::size_t>(std::ceil(std::log2(64.0))) + 2;
  std::size_t worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto net = DhtNetwork::build({}, 64, seed);
    DetRng rng(seed);
    auto b = rng.bytes(kIdBytes);
    NodeId target{};
    std::copy(b.begin(), b.end(), target.begin());
    auto r = net.lookup(static_cast<std::uint32_t>(rng.uniform(0, 63)), target);
    worst = std::max(worst, r.hops);
  }
  EXPECT_LE(worst, bound);
}

TEST(Lookup, SkipsCrashedNodes) {
  auto net = DhtNetwork::build({}, 64, 12);
  DetRng rng(4);
  for (int i = 0; i < 10; ++i) net.crash(static_cast<std::uint32_t>(rng.uniform(1, 63)));
  std::size_t exact = 0;
  for (int q = 0; q < 100; ++q) {
    NodeId target{};
    auto b = rng.bytes(kIdBytes);
    std::copy(b.begin(), b.end(), target.begin());
    auto r = net.lookup(0, target);
    ASSERT_EQ(r.closest.size(), 4u);
    for (const auto& id : r.closest) EXPECT_FALSE(net.is_down(*net.index_of(id)));
    if (r.closest == k_closest_oracle(net, target, 4)) ++exact;
  }
  // Stale contacts can hide a live node from every table that had room for
  // it; Kademlia only promises the live-only property under churn.
  EXPECT_GE(exact, 90u);
}

class Store : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { net_ = new DhtNetwork(DhtNetwork::build({}, 64, 7)); }
  static void TearDownTestSuite() { delete net_; }
  static inline DhtNetwork* net_ = nullptr;
};

TEST_F(Store, RoundTripThousandPayloads) {
  DhtNetwork net = *net_;
  DetRng rng(99);
  for (int i = 0; i < 1000; ++i) {
    auto payload = rng.bytes(static_cast<std::size_t>(rng.uniform(0, 2048)));
    auto from = static_cast<std::uint32_t>(rng.uniform(0, 63));
    auto put = net.put(from, payload);
    ASSERT_EQ(put.address.digest, openssl_sha256(payload));
    ASSERT_EQ(put.holders.size(), 4u);
    auto back = net.get(static_cast<std::uint32_t>(rng.uniform(0, 63)), put.address);
    ASSERT_EQ(back.payload, payload) << i;
  }
}

TEST_F(Store, SamePayloadSameAddressNoExtraReplicas) {
  DhtNetwork net = *net_;
  auto payload = to_bytes("reading:21.5C");
  auto a = net.put(3, payload);
  auto b = net.put(40, payload);
  EXPECT_EQ(a.address, b.address);
  EXPECT_EQ(a.address.hex(), to_hex(openssl_sha256(payload)));
  EXPECT_EQ(net.holders(a.address).size(), 4u);
  std::set<std::uint32_t> ha(a.holders.begin(), a.holders.end());
  std::set<std::uint32_t> hb(b.holders.begin(), b.holders.end());
  EXPECT_EQ(ha, hb);
  // Holders are the k closest ids to the address key.
  std::set<NodeId> expect;
  for (const auto& id : k_closest_oracle(net, key_of(a.address), 4)) expect.insert(id);
  std::set<NodeId> got;
  for (auto h : ha) got.insert(net.id(h));
  EXPECT_EQ(got, expect);
}

TEST_F(Store, NeverStoredIsNotFound) {
  DhtNetwork net = *net_;
  auto addr = ContentAddress::of(to_bytes("absent"));
  EXPECT_EQ(code_of([&] { net.get(0, addr); }), ErrorCode::NotFound);
}

TEST_F(Store, PayloadLimit) {
  DhtNetwork net = *net_;
  Bytes max(net.config().max_payload, 0x5a);
  EXPECT_NO_THROW(net.put(1, max));
  max.push_back(0);
  EXPECT_EQ(code_of([&] { net.put(1, max); }), ErrorCode::PayloadTooLarge);
}

TEST_F(Store, SurvivesCrashOfHalfTheHolders) {
  DetRng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    DhtNetwork net = *net_;
    auto payload = rng.bytes(256);
    auto put = net.put(static_cast<std::uint32_t>(rng.uniform(0, 63)), payload);
    auto holders = put.holders;
    ASSERT_EQ(holders.size(), 4u);
    rng.shuffle(std::span(holders));
    net.crash(holders[0]);
    net.crash(holders[1]);
    std::uint32_t from = 0;
    while (net.is_down(from)) ++from;
    EXPECT_EQ(net.get(from, put.address).payload, payload) << trial;
  }
}

TEST_F(Store, CorruptReplicasNeverReturned) {
  DetRng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    DhtNetwork net = *net_;
    auto payload = rng.bytes(128);
    auto put = net.put(0, payload);
    auto holders = put.holders;
    rng.shuffle(std::span(holders));
    for (std::size_t i = 0; i + 1 < holders.size(); ++i) {
      auto bad = payload;
      bad[rng.uniform(0, bad.size() - 1)] ^= 0x01;
      net.tamper(holders[i], put.address, bad);
    }
    auto got = net.get(static_cast<std::uint32_t>(rng.uniform(0, 63)), put.address);
    EXPECT_EQ(got.payload, payload);
    EXPECT_EQ(got.holder, holders.back());
    EXPECT_EQ(openssl_sha256(got.payload), put.address.digest);

    net.tamper(holders.back(), put.address, to_bytes("forged"));
    EXPECT_EQ(code_of([&] { net.get(0, put.address); }), ErrorCode::IntegrityFailure);
  }
}

TEST_F(Store, ExportImport) {
  DhtNetwork net = *net_;
  auto a = net.put(2, to_bytes("alpha"));
  auto blob = net.export_store();
  auto fresh = DhtNetwork::build({}, 64, 7);
  EXPECT_EQ(code_of([&] { fresh.get(0, a.address); }), ErrorCode::NotFound);
  fresh.import_store(blob);
  EXPECT_EQ(fresh.get(0, a.address).payload, to_bytes("alpha"));
  EXPECT_EQ(fresh.export_store(), blob);
  auto other = DhtNetwork::build({}, 64, 8);
  EXPECT_EQ(code_of([&] { other.import_store(blob); }), ErrorCode::DecodeError);
}

TEST(DhtNetwork, DeterministicBuild) {
  auto a = DhtNetwork::build({}, 32, 4);
  auto b = DhtNetwork::build({}, 32, 4);
  for (std::uint32_t i = 0; i < 32; ++i) {
    EXPECT_EQ(a.id(i), b.id(i));
    EXPECT_EQ(a.table(i).closest(NodeId{}, 32).size(), b.table(i).closest(NodeId{}, 32).size());
  }
  EXPECT_EQ(a.now(), b.now());
  DhtConfig bad;
  bad.k = 0;
  EXPECT_EQ(code_of([&] { DhtNetwork(bad, 1); }), ErrorCode::ConfigInvalid);
}

}  // namespace
