// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/ordering.hpp"

namespace cpsec::ordering {

std::string_view mode_name(Mode m) { return m == Mode::Pbft ? "PBFT" : "CFT"; }

Mode parse_mode(std::string_view name) {
  if (name == "PBFT" || name == "pbft") return Mode::Pbft;
  if (name == "CFT" || name == "cft") return Mode::Cft;
  throw Error(ErrorCode::ConfigInvalid, "unknown consensus mode '" + std::string(name) + "'");
}

void ConsensusConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (n == 0) fail("n must be positive");
  if (mode == Mode::Pbft && n < 3 * f + 1)
    fail("PBFT needs n >= 3f+1 (n=" + std::to_string(n) + ", f=" + std::to_string(f) + ")");
  if (mode == Mode::Cft && n < 2 * f + 1)
    fail("CFT needs n >= 2f+1 (n=" + std::to_string(n) + ", f=" + std::to_string(f) + ")");
  if (batch_size == 0) fail("batch_size must be positive");
  if (view_timeout == 0) fail("view_timeout must be positive");
  if (leader >= n) fail("leader index out of range");
  if (queue_capacity == 0) fail("queue_capacity must be positive");
}

std::size_t ConsensusConfig::quorum() const {
  if (mode == Mode::Cft) return n / 2 + 1;
  return (n + f + 2) / 2;
}

std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::Crash: return "crash";
    case FaultKind::Equivocate: return "equivocate";
    case FaultKind::Withhold: return "withhold";
    case FaultKind::CorruptPayload: return "corrupt";
  }
  return "?";
}

FaultKind parse_fault(std::string_view name) {
  for (auto k : {FaultKind::Crash, FaultKind::Equivocate, FaultKind::Withhold,
                 FaultKind::CorruptPayload})
    if (fault_name(k) == name) return k;
  throw Error(ErrorCode::ConfigInvalid, "unknown fault kind '" + std::string(name) + "'");
}

void validate_faults(const ConsensusConfig& cfg, std::span<const FaultSpec> faults) {
  std::set<std::uint32_t> seen;
  for (const auto& f : faults) {
    if (f.node >= cfg.n)
      throw Error(ErrorCode::ConfigInvalid, "fault names node " + std::to_string(f.node));
    if (!seen.insert(f.node).second)
      throw Error(ErrorCode::ConfigInvalid, "two faults for node " + std::to_string(f.node));
    if (cfg.mode == Mode::Cft && f.byzantine())
      throw Error(ErrorCode::ConfigInvalid, "byzantine faults apply to PBFT only");
  }
}

Bytes Batch::encode() const {
  Writer w;
  w.u64(height);
  w.u32(proposer);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (const auto& tx : txs) tx.encode(w);
  return std::move(w).take();
}

Batch Batch::decode(ByteView bytes) {
  Reader r(bytes);
  Batch b;
  b.height = r.u64();
  b.proposer = r.u32();
  auto n = r.count(64);
  for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(ledger::Transaction::decode(r));
  r.expect_end();
  return b;
}

std::size_t OsnQueue::submit(const ledger::Transaction& envelope, std::uint64_t now) {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].tx.tx_id == envelope.tx_id) return i;
  if (entries_.size() >= capacity_)
    throw Error(ErrorCode::QueueFull, static_cast<std::int64_t>(capacity_));
  entries_.push_back({envelope, now});
  return entries_.size() - 1;
}

std::optional<std::vector<ledger::Transaction>> OsnQueue::cut_batch(const ConsensusConfig& cfg,
                                                                    std::uint64_t now) {
  if (entries_.empty()) return std::nullopt;
  if (entries_.size() < cfg.batch_size && now < entries_.front().arrived + cfg.batch_timeout)
    return std::nullopt;
  auto take = std::min(entries_.size(), cfg.batch_size);
  std::vector<ledger::Transaction> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(std::move(entries_[i].tx));
  entries_.erase(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

std::optional<std::uint64_t> OsnQueue::next_deadline(const ConsensusConfig& cfg) const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().arrived + cfg.batch_timeout;
}

std::string_view msg_name(MsgType t) {
  switch (t) {
    case MsgType::PrePrepare: return "pre-prepare";
    case MsgType::Prepare: return "prepare";
    case MsgType::Commit: return "commit";
    case MsgType::ViewChange: return "view-change";
    case MsgType::NewView: return "new-view";
    case MsgType::Append: return "append";
    case MsgType::AppendAck: return "append-ack";
    case MsgType::VoteRequest: return "vote-request";
    case MsgType::Vote: return "vote";
    case MsgType::Decide: return "decide";
    case MsgType::Gossip: return "gossip";
    case MsgType::Timer: return "timer";
  }
  return "?";
}

SimNetwork::SimNetwork(std::size_t nodes, LinkProfile link, std::uint64_t seed)
    : nodes_(nodes),
      link_(link),
      rng_(DetRng::derive(seed, "network")),
      crash_tick_(nodes, UINT64_MAX),
      group_(nodes, 0) {
  if (nodes == 0 || link.min_latency > link.max_latency || link.drop < 0.0 || link.drop > 1.0)
    throw Error(ErrorCode::ConfigInvalid, "bad network profile");
}

void SimNetwork::send(Message m) {
  ++sent_;
  if (m.src >= nodes_ || m.dst >= nodes_) throw Error(ErrorCode::InvalidParams, "no such node");
  if (is_down(m.src) || !reachable(m.src, m.dst) || (m.src != m.dst && lost())) {
    ++dropped_;
    return;
  }
  auto latency = m.src == m.dst ? link_.min_latency
                                : rng_.uniform(link_.min_latency, link_.max_latency);
  queue_.emplace(std::pair{now_ + latency, seq_++}, std::move(m));
}

void SimNetwork::broadcast(const Message& m) {
  for (std::uint32_t i = 0; i < nodes_; ++i) {
    auto copy = m;
    copy.dst = i;
    send(std::move(copy));
  }
}

void SimNetwork::set_timer(std::uint32_t node, std::uint64_t delay, std::uint64_t height,
                           std::uint64_t view) {
  Message m;
  m.type = MsgType::Timer;
  m.src = m.dst = node;
  m.height = height;
  m.view = view;
  queue_.emplace(std::pair{now_ + delay, seq_++}, std::move(m));
}

std::optional<Message> SimNetwork::next() {
  while (!queue_.empty()) {
    auto it = queue_.begin();
    now_ = std::max(now_, it->first.first);
    auto m = std::move(it->second);
    queue_.erase(it);
    if (is_down(m.dst)) {
      if (m.type != MsgType::Timer) ++dropped_;
      continue;
    }
    if (m.type != MsgType::Timer) {
      ++delivered_;
      trace(now_, m.src, m.dst, m.type, m.digest);
    }
    return m;
  }
  return std::nullopt;
}

void SimNetwork::crash_at(std::uint32_t node, std::uint64_t tick) { crash_tick_.at(node) = tick; }

bool SimNetwork::is_down(std::uint32_t node) const { return crash_tick_.at(node) <= now_; }

void SimNetwork::partition(const std::vector<std::vector<std::uint32_t>>& groups) {
  // Nodes not listed stay in group 0.
  std::fill(group_.begin(), group_.end(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (auto n : groups[g]) group_.at(n) = static_cast<std::uint32_t>(g + 1);
}

void SimNetwork::heal() { std::fill(group_.begin(), group_.end(), 0); }

bool SimNetwork::reachable(std::uint32_t a, std::uint32_t b) const {
  return group_.at(a) == group_.at(b);
}

bool SimNetwork::lost() { return rng_.chance(link_.drop); }

void SimNetwork::trace(std::uint64_t tick, std::uint32_t src, std::uint32_t dst, MsgType type,
                       const Digest& digest) {
  if (!trace_) return;
  *trace_ << tick << ',' << src << ',' << dst << ',' << msg_name(type) << ','
          << to_hex(ByteView(digest).first(8)) << '\n';
}

Authenticator::Authenticator(std::size_t nodes, std::uint64_t seed) {
  auto rng = DetRng::derive(seed, "authenticator");
  for (std::size_t i = 0; i < nodes; ++i) keys_.push_back(rng.bytes(32));
}

Digest Authenticator::tag(std::uint32_t node, MsgType type, std::uint64_t height,
                          std::uint64_t view, const Digest& digest) const {
  Writer w;
  w.u8(static_cast<std::uint8_t>(type));
  w.u64(height);
  w.u64(view);
  w.fixed(digest);
  return hmac_sha256(keys_.at(node), w.data());
}

bool Authenticator::check(std::uint32_t node, MsgType type, std::uint64_t height,
                          std::uint64_t view, const Digest& digest, const Digest& t) const {
  return node < keys_.size() && tag(node, type, height, view, digest) == t;
}

std::string_view status_name(Status s) {
  switch (s) {
    case Status::Decided: return "decided";
    case Status::NoProgress: return "no-progress";
    case Status::NoQuorum: return "no-quorum";
  }
  return "?";
}

bool InstanceResult::agreement() const {
  const Decision* first = nullptr;
  for (const auto& d : decisions) {
    if (!d) continue;
    if (!first) first = &*d;
    else if (d->digest != first->digest) return false;
  }
  return true;
}

std::size_t InstanceResult::decided() const {
  return static_cast<std::size_t>(
      std::count_if(decisions.begin(), decisions.end(), [](const auto& d) { return d.has_value(); }));
}

void InstanceResult::expect_decided() const {
  if (status == Status::NoProgress)
    throw Error(ErrorCode::NoProgress, static_cast<std::int64_t>(view_changes),
                "view changes exhausted");
  if (status == Status::NoQuorum)
    throw Error(ErrorCode::NoQuorum, static_cast<std::int64_t>(decided()),
                "too few live nodes");
}

std::size_t GossipResult::informed() const {
  return static_cast<std::size_t>(std::count_if(informed_round.begin(), informed_round.end(),
                                                [](const auto& r) { return r.has_value(); }));
}

GossipResult gossip(std::uint32_t origin, std::size_t fanout, SimNetwork& net, const Digest& block,
                    std::size_t max_rounds) {
  auto n = net.nodes();
  GossipResult out;
  out.informed_round.assign(n, std::nullopt);
  if (origin >= n) throw Error(ErrorCode::InvalidParams, "origin out of range");
  out.informed_round[origin] = 0;
  auto pending = [&] {
    // Some uninformed, live peer shares a partition with an informed, live one.
    for (std::uint32_t q = 0; q < n; ++q) {
      if (out.informed_round[q] || net.is_down(q)) continue;
      for (std::uint32_t p = 0; p < n; ++p)
        if (out.informed_round[p] && !net.is_down(p) && net.reachable(p, q)) return true;
    }
    return false;
  };
  while (out.rounds < max_rounds && pending()) {
    ++out.rounds;
    std::vector<std::uint32_t> fresh;
    for (std::uint32_t p = 0; p < n; ++p) {
      if (!out.informed_round[p] || net.is_down(p)) continue;
      std::vector<std::uint32_t> targets;
      for (std::uint32_t q = 0; q < n; ++q)
        if (!out.informed_round[q] && q != p) targets.push_back(q);
      net.rng().shuffle(std::span(targets));
      targets.resize(std::min(targets.size(), fanout));
      for (auto q : targets) {
        ++out.messages;
        if (net.is_down(q) || !net.reachable(p, q) || net.lost()) continue;
        net.trace(out.rounds, p, q, MsgType::Gossip, block);
        fresh.push_back(q);
      }
    }
    for (auto q : fresh)
      if (!out.informed_round[q]) out.informed_round[q] = out.rounds;
  }
  return out;
}

std::size_t anti_entropy(ledger::Ledger& lagging, const ledger::Ledger& donor) {
  auto shared = std::min(lagging.height(), donor.height());
  for (std::uint64_t h = 0; h <= shared; ++h)
    if (lagging.blocks()[h].block_hash != donor.blocks()[h].block_hash)
      throw Error(ErrorCode::DivergentHistory, static_cast<std::int64_t>(h));
  std::size_t moved = 0;
  for (auto h = lagging.height() + 1; h <= donor.height(); ++h) {
    lagging.commit_block(donor.blocks()[h]);
    ++moved;
  }
  return moved;
}

}  // namespace cpsec::ordering
