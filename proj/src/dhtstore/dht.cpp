// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <set>

#include "cpsec/codec.hpp"
#include "cpsec/dhtstore.hpp"
#include "cpsec/error.hpp"

namespace cpsec::dht {

NodeId distance(const NodeId& a, const NodeId& b) {
  NodeId d{};
  for (std::size_t i = 0; i < kIdBytes; ++i) d[i] = a[i] ^ b[i];
  return d;
}

int bucket_index(const NodeId& self, const NodeId& other) {
  for (std::size_t i = 0; i < kIdBytes; ++i) {
    auto x = static_cast<unsigned>(self[i] ^ other[i]);
    if (x != 0) return static_cast<int>((kIdBytes - 1 - i) * 8) + std::bit_width(x) - 1;
  }
  return -1;
}

NodeId key_of(const ContentAddress& addr) {
  NodeId id{};
  std::copy_n(addr.digest.begin(), kIdBytes, id.begin());
  return id;
}

bool closer(const NodeId& target, const NodeId& a, const NodeId& b) {
  return distance(a, target) < distance(b, target);
}

RoutingTable::RoutingTable(NodeId self, std::size_t k) : self_(self), k_(k) {}

RoutingTable::Observed RoutingTable::observe(const Contact& c) {
  int i = bucket_index(self_, c.id);
  if (i < 0) return {};
  auto& b = buckets_[static_cast<std::size_t>(i)];
  auto it = std::find_if(b.begin(), b.end(), [&](const Contact& e) { return e.id == c.id; });
  if (it != b.end()) {
    b.erase(it);
    b.push_back(c);
    return {};
  }
  if (b.size() < k_) {
    b.push_back(c);
    return {true, std::nullopt};
  }
  return {false, b.front()};
}

void RoutingTable::keep_head(int bucket, std::uint64_t now) {
  auto& b = buckets_[static_cast<std::size_t>(bucket)];
  auto head = b.front();
  head.last_seen = now;
  b.pop_front();
  b.push_back(head);
}

void RoutingTable::evict_head(int bucket, const Contact& replacement) {
  auto& b = buckets_[static_cast<std::size_t>(bucket)];
  b.pop_front();
  b.push_back(replacement);
}

void RoutingTable::remove(const NodeId& id) {
  int i = bucket_index(self_, id);
  if (i < 0) return;
  auto& b = buckets_[static_cast<std::size_t>(i)];
  std::erase_if(b, [&](const Contact& e) { return e.id == id; });
}

bool RoutingTable::contains(const NodeId& id) const {
  int i = bucket_index(self_, id);
  if (i < 0) return false;
  const auto& b = buckets_[static_cast<std::size_t>(i)];
  return std::any_of(b.begin(), b.end(), [&](const Contact& e) { return e.id == id; });
}

std::vector<Contact> RoutingTable::closest(const NodeId& target, std::size_t count) const {
  std::vector<Contact> all;
  for (const auto& b : buckets_) all.insert(all.end(), b.begin(), b.end());
  auto by_distance = [&](const Contact& x, const Contact& y) { return closer(target, x.id, y.id); };
  if (all.size() > count) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(),
                      by_distance);
    all.resize(count);
  } else {
    std::sort(all.begin(), all.end(), by_distance);
  }
  return all;
}

std::size_t RoutingTable::size() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.size();
  return n;
}

void DhtConfig::validate() const {
  if (k == 0) throw Error(ErrorCode::ConfigInvalid, "dht.k must be positive");
  if (alpha == 0) throw Error(ErrorCode::ConfigInvalid, "dht.alpha must be positive");
  if (max_payload == 0) throw Error(ErrorCode::ConfigInvalid, "dht.max_payload must be positive");
  if (min_latency > max_latency)
    throw Error(ErrorCode::ConfigInvalid, "dht latency band is empty");
}

DhtNetwork::DhtNetwork(DhtConfig cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(DetRng::derive(seed, "dht")) {
  cfg_.validate();
}

DhtNetwork DhtNetwork::build(DhtConfig cfg, std::size_t n, std::uint64_t seed) {
  DhtNetwork net(cfg, seed);
  for (std::size_t i = 0; i < n; ++i) net.spawn();
  for (std::uint32_t i = 1; i < n; ++i) net.join(i, 0);
  return net;
}

std::uint32_t DhtNetwork::spawn() {
  NodeId id{};
  do {
    auto b = rng_.bytes(kIdBytes);
    std::copy(b.begin(), b.end(), id.begin());
  } while (by_id_.contains(id));
  return spawn(id);
}

std::uint32_t DhtNetwork::spawn(const NodeId& id) {
  if (by_id_.contains(id)) throw Error(ErrorCode::InvalidParams, "duplicate node id");
  auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{RoutingTable(id, cfg_.k), {}, false});
  by_id_.emplace(id, index);
  return index;
}

std::optional<std::uint32_t> DhtNetwork::index_of(const NodeId& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

void DhtNetwork::crash(std::uint32_t node) { nodes_.at(node).down = true; }
void DhtNetwork::recover(std::uint32_t node) { nodes_.at(node).down = false; }

bool DhtNetwork::call(std::uint32_t caller, std::uint32_t callee, std::uint64_t& cost) {
  if (nodes_[callee].down) {
    cost = cfg_.rpc_timeout;
    return false;
  }
  cost = rng_.uniform(cfg_.min_latency, cfg_.max_latency) +
         rng_.uniform(cfg_.min_latency, cfg_.max_latency);
  observe(callee, caller);
  return true;
}

void DhtNetwork::observe(std::uint32_t node, std::uint32_t peer) {
  auto& table = nodes_[node].table;
  Contact c{nodes_[peer].table.self(), peer, now_};
  auto r = table.observe(c);
  if (!r.candidate) return;
  int b = bucket_index(table.self(), c.id);
  if (nodes_[r.candidate->node].down) table.evict_head(b, c);
  else table.keep_head(b, now_);
}

std::vector<Contact> DhtNetwork::find_node(std::uint32_t callee, const NodeId& target) const {
  return nodes_[callee].table.closest(target, cfg_.k);
}

// Iterative lookup. Each round queries up to alpha of the closest unqueried
// candidates; after a round that brings nothing closer, the next round
// queries every unqueried member of the current k closest. `visit` sees each
// live node reached, self first, and may end the lookup by returning true.
template <class Visit>
LookupResult DhtNetwork::iterate(std::uint32_t from, const NodeId& target, Visit&& visit) {
  if (from >= nodes_.size() || nodes_[from].down)
    throw Error(ErrorCode::InvalidParams, "lookup from a down or unknown node");
  LookupResult res;
  auto by_distance = [&](const Contact& x, const Contact& y) { return closer(target, x.id, y.id); };
  std::vector<Contact> shortlist = nodes_[from].table.closest(target, cfg_.k);
  shortlist.push_back({id(from), from, now_});
  std::sort(shortlist.begin(), shortlist.end(), by_distance);
  std::set<NodeId> queried{id(from)};
  std::set<NodeId> failed;
  bool done = visit(from);

  bool improved = true;
  while (!done) {
    std::vector<Contact> batch;
    std::size_t width = improved ? cfg_.alpha : cfg_.k;
    for (std::size_t i = 0; i < shortlist.size() && i < cfg_.k && batch.size() < width; ++i)
      if (!queried.contains(shortlist[i].id)) batch.push_back(shortlist[i]);
    if (batch.empty()) break;
    ++res.hops;
    auto best = shortlist.front().id;
    std::uint64_t round = 0;
    for (const auto& c : batch) {
      queried.insert(c.id);
      ++res.rpcs;
      std::uint64_t cost = 0;
      bool ok = call(from, c.node, cost);
      round = std::max(round, cost);
      if (!ok) {
        failed.insert(c.id);
        nodes_[from].table.remove(c.id);
        continue;
      }
      observe(from, c.node);
      if (visit(c.node)) {
        done = true;
        break;
      }
      for (const auto& found : find_node(c.node, target)) {
        if (failed.contains(found.id)) continue;
        if (std::none_of(shortlist.begin(), shortlist.end(),
                         [&](const Contact& e) { return e.id == found.id; }))
          shortlist.push_back(found);
      }
    }
    std::erase_if(shortlist, [&](const Contact& e) { return failed.contains(e.id); });
    std::sort(shortlist.begin(), shortlist.end(), by_distance);
    now_ += round;
    res.ticks += round;
    improved = !shortlist.empty() && closer(target, shortlist.front().id, best);
  }
  for (std::size_t i = 0; i < shortlist.size() && res.closest.size() < cfg_.k; ++i)
    res.closest.push_back(shortlist[i].id);
  return res;
}

void DhtNetwork::join(std::uint32_t node, std::uint32_t bootstrap) {
  if (node >= nodes_.size()) throw Error(ErrorCode::InvalidParams, "unknown node");
  if (bootstrap >= nodes_.size() || bootstrap == node)
    throw Error(ErrorCode::BootstrapUnreachable, "unknown bootstrap");
  std::uint64_t cost = 0;
  bool ok = call(node, bootstrap, cost);
  now_ += cost;
  if (!ok) throw Error(ErrorCode::BootstrapUnreachable, static_cast<std::int64_t>(bootstrap));
  observe(node, bootstrap);
  const auto self = id(node);
  lookup(node, self);

  // Refresh every bucket farther out than the closest neighbour.
  auto near = nodes_[node].table.closest(self, 1);
  int from = near.empty() ? 0 : bucket_index(self, near.front().id) + 1;
  for (int b = from; b < static_cast<int>(kIdBits); ++b) {
    NodeId target = self;
    auto random = rng_.bytes(kIdBytes);
    for (int bit = 0; bit < b; ++bit) {
      auto byte = kIdBytes - 1 - static_cast<std::size_t>(bit / 8);
      auto mask = static_cast<std::uint8_t>(1u << (bit % 8));
      target[byte] = static_cast<std::uint8_t>((target[byte] & ~mask) | (random[byte] & mask));
    }
    auto byte = kIdBytes - 1 - static_cast<std::size_t>(b / 8);
    target[byte] ^= static_cast<std::uint8_t>(1u << (b % 8));
    lookup(node, target);
  }
}

LookupResult DhtNetwork::lookup(std::uint32_t from, const NodeId& target) {
  return iterate(from, target, [](std::uint32_t) { return false; });
}

PutResult DhtNetwork::put(std::uint32_t from, ByteView payload) {
  if (payload.size() > cfg_.max_payload)
    throw Error(ErrorCode::PayloadTooLarge, static_cast<std::int64_t>(payload.size()));
  PutResult res;
  res.address = ContentAddress::of(payload);
  auto found = lookup(from, key_of(res.address));
  res.ticks = found.ticks;
  std::uint64_t round = 0;
  for (const auto& target : found.closest) {
    auto node = by_id_.at(target);
    std::uint64_t cost = 0;
    if (node != from && !call(from, node, cost)) {
      round = std::max(round, cost);
      continue;
    }
    round = std::max(round, cost);
    nodes_[node].store[res.address] = Bytes(payload.begin(), payload.end());
    res.holders.push_back(node);
  }
  now_ += round;
  res.ticks += round;
  return res;
}

GetResult DhtNetwork::get(std::uint32_t from, const ContentAddress& addr) {
  GetResult res;
  bool hit = false;
  auto found = iterate(from, key_of(addr), [&](std::uint32_t node) {
    const auto& store = nodes_[node].store;
    auto it = store.find(addr);
    if (it == store.end()) return false;
    if (!addr.matches(it->second)) {
      ++res.discarded;
      return false;
    }
    res.payload = it->second;
    res.holder = node;
    hit = true;
    return true;
  });
  res.ticks = found.ticks;
  if (hit) return res;
  if (res.discarded > 0)
    throw Error(ErrorCode::IntegrityFailure, static_cast<std::int64_t>(res.discarded));
  throw Error(ErrorCode::NotFound, addr.hex());
}

std::vector<std::uint32_t> DhtNetwork::holders(const ContentAddress& addr) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].store.contains(addr)) out.push_back(i);
  return out;
}

void DhtNetwork::tamper(std::uint32_t node, const ContentAddress& addr, Bytes bytes) {
  auto& store = nodes_.at(node).store;
  auto it = store.find(addr);
  if (it == store.end()) throw Error(ErrorCode::NotFound, addr.hex());
  it->second = std::move(bytes);
}

Bytes DhtNetwork::export_store() const {
  Writer w;
  w.fixed(as_bytes("CPSECDHT"));
  w.u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    w.fixed(n.table.self());
    w.u32(static_cast<std::uint32_t>(n.store.size()));
    for (const auto& [addr, bytes] : n.store) {
      addr.encode(w);
      w.bytes(bytes);
    }
  }
  return std::move(w).take();
}

void DhtNetwork::import_store(ByteView data) {
  Reader r(data);
  auto magic = r.fixed(8);
  if (!std::equal(magic.begin(), magic.end(), as_bytes("CPSECDHT").begin()))
    throw Error(ErrorCode::DecodeError, "not a DHT store file");
  if (r.u32() != nodes_.size()) throw Error(ErrorCode::DecodeError, "node count mismatch");
  std::vector<std::map<ContentAddress, Bytes>> stores(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (r.array<kIdBytes>() != id(static_cast<std::uint32_t>(i)))
      throw Error(ErrorCode::DecodeError, "node id mismatch");
    auto count = r.count(36);
    for (std::uint32_t j = 0; j < count; ++j) {
      auto addr = ContentAddress::decode(r);
      stores[i][addr] = r.bytes(cfg_.max_payload);
    }
  }
  r.expect_end();
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].store = std::move(stores[i]);
}

}  // namespace cpsec::dht
