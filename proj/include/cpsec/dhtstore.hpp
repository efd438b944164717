// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Kademlia-style content-addressed store. Every node owns its routing table
// and replica map; nodes interact only through request/response RPCs that
// DhtNetwork routes, charges in ticks and drops when the callee is down.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "cpsec/bytes.hpp"
#include "cpsec/content_address.hpp"
#include "cpsec/rng.hpp"

namespace cpsec::dht {

constexpr std::size_t kIdBytes = 20;
constexpr std::size_t kIdBits = kIdBytes * 8;

using NodeId = std::array<std::uint8_t, kIdBytes>;

NodeId distance(const NodeId& a, const NodeId& b);
// Bit length of distance(a, b) minus one; -1 when a == b. Bucket i holds ids
// at distance in [2^i, 2^(i+1)).
int bucket_index(const NodeId& self, const NodeId& other);
// Lookup key for a stored payload: the leading 160 bits of its address.
NodeId key_of(const ContentAddress& addr);
bool closer(const NodeId& target, const NodeId& a, const NodeId& b);

struct Contact {
  NodeId id{};
  std::uint32_t node = 0;
  std::uint64_t last_seen = 0;
};

class RoutingTable {
 public:
  RoutingTable(NodeId self, std::size_t k);

  const NodeId& self() const { return self_; }
  std::size_t k() const { return k_; }

  // Outcome of observing a contact. A full bucket yields its least recently
  // seen entry as the eviction candidate; the caller pings it and resolves
  // with keep_head() or evict_head().
  struct Observed {
    bool inserted = false;
    std::optional<Contact> candidate;
  };
  Observed observe(const Contact& c);
  void keep_head(int bucket, std::uint64_t now);
  void evict_head(int bucket, const Contact& replacement);
  void remove(const NodeId& id);

  bool contains(const NodeId& id) const;
  std::vector<Contact> closest(const NodeId& target, std::size_t count) const;
  const std::deque<Contact>& bucket(int i) const { return buckets_[static_cast<std::size_t>(i)]; }
  std::size_t size() const;

 private:
  NodeId self_;
  std::size_t k_;
  std::array<std::deque<Contact>, kIdBits> buckets_;
};

struct DhtConfig {
  std::size_t k = 4;
  std::size_t alpha = 2;
  std::size_t max_payload = 1u << 20;
  // One-way RPC latency band in ticks; a call to a down node costs the
  // timeout instead.
  std::uint64_t min_latency = 1;
  std::uint64_t max_latency = 4;
  std::uint64_t rpc_timeout = 20;

  // Throws Error(ConfigInvalid).
  void validate() const;
};

struct LookupResult {
  std::vector<NodeId> closest;
  std::size_t hops = 0;
  std::size_t rpcs = 0;
  std::uint64_t ticks = 0;
};

struct GetResult {
  Bytes payload;
  std::uint32_t holder = 0;
  std::size_t discarded = 0;
  std::uint64_t ticks = 0;
};

struct PutResult {
  ContentAddress address;
  std::vector<std::uint32_t> holders;
  std::uint64_t ticks = 0;
};

class DhtNetwork {
 public:
  DhtNetwork(DhtConfig cfg, std::uint64_t seed);

  // `n` nodes with ids drawn from the seed, each joining through node 0.
  static DhtNetwork build(DhtConfig cfg, std::size_t n, std::uint64_t seed);

  const DhtConfig& config() const { return cfg_; }
  std::uint64_t now() const { return now_; }
  std::size_t size() const { return nodes_.size(); }

  // New node with a fresh seeded id; returns its index.
  std::uint32_t spawn();
  std::uint32_t spawn(const NodeId& id);
  // Throws BootstrapUnreachable when the bootstrap node is down or unknown.
  void join(std::uint32_t node, std::uint32_t bootstrap);

  LookupResult lookup(std::uint32_t from, const NodeId& target);
  // Throws PayloadTooLarge.
  PutResult put(std::uint32_t from, ByteView payload);
  // Throws NotFound, or IntegrityFailure when only tampered replicas exist.
  GetResult get(std::uint32_t from, const ContentAddress& addr);

  void crash(std::uint32_t node);
  void recover(std::uint32_t node);
  bool is_down(std::uint32_t node) const { return nodes_.at(node).down; }

  const NodeId& id(std::uint32_t node) const { return nodes_.at(node).table.self(); }
  std::optional<std::uint32_t> index_of(const NodeId& id) const;
  const RoutingTable& table(std::uint32_t node) const { return nodes_.at(node).table; }
  std::vector<std::uint32_t> holders(const ContentAddress& addr) const;
  // Overwrites a stored replica in place; for fault injection.
  void tamper(std::uint32_t node, const ContentAddress& addr, Bytes bytes);

  // Replica maps of every node, so a CLI session can persist the store.
  Bytes export_store() const;
  void import_store(ByteView data);

 private:
  struct Node {
    RoutingTable table;
    std::map<ContentAddress, Bytes> store;
    bool down = false;
  };

  // Round trip to `callee`; false (after the timeout) when it is down. A
  // live callee records the caller in its routing table.
  bool call(std::uint32_t caller, std::uint32_t callee, std::uint64_t& cost);
  void observe(std::uint32_t node, std::uint32_t peer);
  std::vector<Contact> find_node(std::uint32_t callee, const NodeId& target) const;

  template <class Visit>
  LookupResult iterate(std::uint32_t from, const NodeId& target, Visit&& visit);

  DhtConfig cfg_;
  DetRng rng_;
  std::uint64_t now_ = 0;
  std::vector<Node> nodes_;
  std::map<NodeId, std::uint32_t> by_id_;
};

}  // namespace cpsec::dht
