// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/ordering.hpp"

namespace cpsec::ordering {

namespace {

Digest digest_of(ByteView payload) { return Hasher("cpsec.batch").update(payload).finish(); }

// Single-slot leader/follower replication. Term t is led by leader_of(t); a
// new leader first collects a majority of votes, each reporting the
// follower's accepted entry, and re-proposes the entry with the highest term
// (its own proposal if none), so a decided value survives leader changes.
class CftRun {
 public:
  CftRun(const ConsensusConfig& cfg, std::span<const Bytes> proposals, SimNetwork& net,
         std::span<const FaultSpec> faults, const Validator& validator, std::uint64_t height)
      : cfg_(cfg), net_(net), validator_(validator), height_(height), nodes_(cfg.n) {
    for (const auto& f : faults) net_.crash_at(f.node, f.at_tick);
    for (std::size_t i = 0; i < cfg.n; ++i)
      nodes_[i].proposal = std::make_shared<const Bytes>(proposals[i]);
  }

  InstanceResult run() {
    InstanceResult res;
    res.start_tick = net_.now();
    net_.purge();
    for (std::uint32_t i = 0; i < cfg_.n; ++i) arm(i, 0);
    auto l0 = cfg_.leader_of(0);
    if (!net_.is_down(l0)) propose(l0, 0, nodes_[l0].proposal);
    while (!all_live_decided()) {
      auto m = net_.next();
      if (!m) break;
      if (m->height != height_) continue;
      handle(*m);
    }
    res.end_tick = net_.now();
    res.decisions.resize(cfg_.n);
    std::size_t live = 0;
    for (std::uint32_t i = 0; i < cfg_.n; ++i) {
      res.decisions[i] = nodes_[i].decided;
      res.view_changes = std::max(res.view_changes, nodes_[i].term);
      if (!net_.is_down(i)) ++live;
    }
    if (all_live_decided()) res.status = Status::Decided;
    else res.status = live < cfg_.quorum() ? Status::NoQuorum : Status::NoProgress;
    return res;
  }

 private:
  struct Node {
    Payload proposal;
    std::uint64_t term = 0;
    std::optional<Certificate> accepted;
    std::map<std::uint64_t, std::map<std::uint32_t, std::optional<Certificate>>> votes;
    std::map<std::uint64_t, std::set<std::uint32_t>> acks;
    std::set<std::uint64_t> proposed;
    std::optional<Decision> decided;
    std::uint64_t deadline = 0;
  };

  void arm(std::uint32_t self, std::uint64_t term) {
    nodes_[self].deadline = net_.now() + cfg_.timeout_for(term);
    net_.set_timer(self, cfg_.timeout_for(term), height_, term);
  }

  bool all_live_decided() const {
    for (std::uint32_t i = 0; i < cfg_.n; ++i)
      if (!net_.is_down(i) && !nodes_[i].decided) return false;
    return true;
  }

  Message make(MsgType type, std::uint32_t src, std::uint64_t term, const Digest& d) const {
    Message m;
    m.type = type;
    m.src = src;
    m.height = height_;
    m.view = term;
    m.digest = d;
    return m;
  }

  void propose(std::uint32_t leader, std::uint64_t term, const Payload& payload) {
    if (!nodes_[leader].proposed.insert(term).second) return;
    auto m = make(MsgType::Append, leader, term, digest_of(*payload));
    m.payload = payload;
    net_.broadcast(m);
  }

  void handle(const Message& m) {
    auto self = m.dst;
    auto& node = nodes_[self];
    switch (m.type) {
      case MsgType::Append: {
        if (m.view < node.term || m.src != cfg_.leader_of(m.view)) return;
        if (!m.payload || digest_of(*m.payload) != m.digest) return;
        if (validator_ && !validator_(*m.payload)) return;
        node.term = m.view;
        node.accepted = Certificate{m.view, m.digest, m.payload, {}};
        arm(self, m.view);
        auto ack = make(MsgType::AppendAck, self, m.view, m.digest);
        ack.dst = m.src;
        net_.send(std::move(ack));
        break;
      }
      case MsgType::AppendAck: {
        if (self != cfg_.leader_of(m.view) || !node.accepted || node.accepted->view != m.view ||
            node.accepted->digest != m.digest)
          return;
        auto& acks = node.acks[m.view];
        acks.insert(m.src);
        if (acks.size() >= cfg_.quorum() && !node.decided) {
          node.decided = Decision{net_.now(), m.view, m.digest, node.accepted->payload};
          auto d = make(MsgType::Decide, self, m.view, m.digest);
          d.payload = node.accepted->payload;
          net_.broadcast(d);
        }
        break;
      }
      case MsgType::Decide: {
        if (node.decided || !m.payload || digest_of(*m.payload) != m.digest) return;
        node.decided = Decision{net_.now(), m.view, m.digest, m.payload};
        break;
      }
      case MsgType::VoteRequest: {
        if (m.view < node.term || m.src != cfg_.leader_of(m.view)) return;
        node.term = m.view;
        arm(self, m.view);
        auto v = make(MsgType::Vote, self, m.view, node.accepted ? node.accepted->digest : Digest{});
        v.cert = node.accepted;
        v.dst = m.src;
        net_.send(std::move(v));
        break;
      }
      case MsgType::Vote: {
        if (self != cfg_.leader_of(m.view) || node.term != m.view) return;
        auto& votes = node.votes[m.view];
        votes[m.src] = m.cert;
        if (votes.size() < cfg_.quorum()) return;
        std::optional<Certificate> best;
        for (const auto& [_, c] : votes)
          if (c && (!best || c->view > best->view)) best = c;
        propose(self, m.view, best ? best->payload : node.proposal);
        break;
      }
      case MsgType::Timer: {
        if (node.decided || m.view != node.term || net_.now() < node.deadline) return;
        if (m.view + 1 > cfg_.max_view_changes) return;
        node.term = m.view + 1;
        arm(self, node.term);
        if (cfg_.leader_of(node.term) == self)
          net_.broadcast(make(MsgType::VoteRequest, self, node.term, Digest{}));
        break;
      }
      default: break;
    }
  }

  const ConsensusConfig& cfg_;
  SimNetwork& net_;
  const Validator& validator_;
  std::uint64_t height_;
  std::vector<Node> nodes_;
};

}  // namespace

InstanceResult run_cft(const ConsensusConfig& cfg, std::span<const Bytes> proposals,
                       SimNetwork& net, std::span<const FaultSpec> faults,
                       const Validator& validator, std::uint64_t height) {
  cfg.validate();
  if (cfg.mode != Mode::Cft) throw Error(ErrorCode::ConfigInvalid, "run_cft needs mode CFT");
  validate_faults(cfg, faults);
  if (proposals.size() != cfg.n || net.nodes() != cfg.n)
    throw Error(ErrorCode::ConfigInvalid, "need one proposal and one network node per OSN");
  return CftRun(cfg, proposals, net, faults, validator, height).run();
}

}  // namespace cpsec::ordering
