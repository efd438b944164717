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

Payload share(Bytes b) { return std::make_shared<const Bytes>(std::move(b)); }

// What a byzantine leader hands to the second half of the replicas.
Payload fabricate(const Payload& p) {
  Bytes alt = p ? *p : Bytes{};
  if (alt.empty()) alt.push_back(1);
  else alt.back() ^= 0x01;
  return share(std::move(alt));
}

struct VoteKey {
  std::uint64_t view;
  Digest digest;
  auto operator<=>(const VoteKey&) const = default;
};

class PbftRun {
 public:
  PbftRun(const ConsensusConfig& cfg, std::span<const Bytes> proposals, SimNetwork& net,
          std::span<const FaultSpec> faults, const Validator& validator, std::uint64_t height,
          std::uint64_t auth_seed)
      : cfg_(cfg),
        net_(net),
        validator_(validator),
        height_(height),
        auth_(cfg.n, auth_seed),
        fault_(cfg.n),
        nodes_(cfg.n) {
    for (const auto& f : faults) {
      fault_[f.node] = f.kind;
      if (f.kind == FaultKind::Crash) net_.crash_at(f.node, f.at_tick);
    }
    for (std::size_t i = 0; i < cfg.n; ++i) nodes_[i].proposal = share(proposals[i]);
  }

  InstanceResult run() {
    InstanceResult res;
    res.start_tick = net_.now();
    net_.purge();
    for (std::uint32_t i = 0; i < cfg_.n; ++i) {
      if (byzantine(i)) continue;
      arm(i, 0);
    }
    lead_view(cfg_.leader_of(0), 0, std::nullopt, {});
    while (!all_honest_decided()) {
      auto m = net_.next();
      if (!m) break;
      if (m->height != height_) continue;
      handle(*m);
    }
    res.end_tick = net_.now();
    res.decisions.resize(cfg_.n);
    std::uint64_t top_view = 0;
    for (std::uint32_t i = 0; i < cfg_.n; ++i) {
      if (byzantine(i)) continue;
      top_view = std::max(top_view, nodes_[i].target);
      res.decisions[i] = nodes_[i].decided;
    }
    res.view_changes = top_view;
    res.status = all_honest_decided() ? Status::Decided : Status::NoProgress;
    return res;
  }

 private:
  struct Node {
    Payload proposal;
    std::uint64_t view = 0;    // installed view
    std::uint64_t target = 0;  // == view unless changing views
    bool changing = false;
    std::map<std::uint64_t, std::pair<Digest, Payload>> accepted;
    std::map<VoteKey, std::map<std::uint32_t, Digest>> prepares;
    std::map<VoteKey, std::set<std::uint32_t>> commits;
    std::set<std::uint64_t> prepared_in;
    std::set<std::uint64_t> committed_in;
    std::optional<Certificate> best;
    std::map<Digest, Payload> payloads;
    std::map<std::uint64_t, std::map<std::uint32_t, Message>> view_changes;
    std::set<std::uint64_t> led;
    std::optional<Decision> decided;
    std::uint64_t deadline = 0;
  };

  void arm(std::uint32_t self, std::uint64_t view) {
    nodes_[self].deadline = net_.now() + cfg_.timeout_for(view);
    net_.set_timer(self, cfg_.timeout_for(view), height_, view);
  }

  bool honest(std::uint32_t i) const { return !byzantine(i) && !net_.is_down(i); }
  bool byzantine(std::uint32_t i) const { return fault_[i] && *fault_[i] != FaultKind::Crash; }

  bool all_honest_decided() const {
    for (std::uint32_t i = 0; i < cfg_.n; ++i)
      if (honest(i) && !nodes_[i].decided) return false;
    return true;
  }

  bool acceptable(const Digest& d, const Payload& p) const {
    return p && digest_of(*p) == d && (!validator_ || validator_(*p));
  }

  Message make(MsgType type, std::uint32_t src, std::uint64_t view, const Digest& d) const {
    Message m;
    m.type = type;
    m.src = src;
    m.height = height_;
    m.view = view;
    m.digest = d;
    m.tag = auth_.tag(src, type, height_, view, d);
    return m;
  }

  // Sends a vote; byzantine nodes distort it according to their fault.
  void vote(MsgType type, std::uint32_t src, std::uint64_t view, const Digest& d) {
    if (!byzantine(src)) {
      net_.broadcast(make(type, src, view, d));
      return;
    }
    switch (*fault_[src]) {
      case FaultKind::Withhold: return;
      case FaultKind::CorruptPayload: {
        auto bad = d;
        bad[0] ^= 0xff;
        net_.broadcast(make(type, src, view, bad));
        return;
      }
      case FaultKind::Equivocate: {
        auto other = d;
        other[31] ^= 0x01;
        for (std::uint32_t i = 0; i < cfg_.n; ++i) {
          auto m = make(type, src, view, i < cfg_.n / 2 ? d : other);
          m.dst = i;
          net_.send(std::move(m));
        }
        return;
      }
      case FaultKind::Crash: return;
    }
  }

  // Leader of `view` proposes: a fresh pre-prepare in view 0, a new-view
  // carrying the view-change proofs afterwards.
  void lead_view(std::uint32_t leader, std::uint64_t view, const std::optional<Certificate>& locked,
                 std::vector<Message> proofs) {
    if (net_.is_down(leader)) return;
    auto& node = nodes_[leader];
    Payload payload = locked ? locked->payload : node.proposal;
    Digest d = locked ? locked->digest : digest_of(*payload);
    auto type = view == 0 ? MsgType::PrePrepare : MsgType::NewView;
    auto base = make(type, leader, view, d);
    base.payload = payload;
    base.proofs = std::move(proofs);
    if (!byzantine(leader)) {
      net_.broadcast(base);
      return;
    }
    switch (*fault_[leader]) {
      case FaultKind::Withhold: return;
      case FaultKind::CorruptPayload: {
        auto m = base;
        m.payload = fabricate(payload);  // digest still names the original
        net_.broadcast(m);
        return;
      }
      case FaultKind::Equivocate: {
        auto alt = fabricate(payload);
        for (std::uint32_t i = 0; i < cfg_.n; ++i) {
          auto m = base;
          if (i >= cfg_.n / 2) {
            m.payload = alt;
            m.digest = digest_of(*alt);
            m.tag = auth_.tag(leader, type, height_, view, m.digest);
          }
          m.dst = i;
          net_.send(std::move(m));
        }
        return;
      }
      case FaultKind::Crash: return;
    }
  }

  void handle(const Message& m) {
    auto self = m.dst;
    if (byzantine(self)) {
      handle_byzantine(m);
      return;
    }
    switch (m.type) {
      case MsgType::PrePrepare: on_pre_prepare(self, m); break;
      case MsgType::Prepare: on_prepare(self, m); break;
      case MsgType::Commit: on_commit(self, m); break;
      case MsgType::ViewChange: on_view_change(self, m); break;
      case MsgType::NewView: on_new_view(self, m); break;
      case MsgType::Timer: on_timer(self, m); break;
      default: break;
    }
  }

  // Byzantine replicas follow the protocol's message pattern with distorted
  // votes; withholding ones stay silent.
  void handle_byzantine(const Message& m) {
    auto self = m.dst;
    auto& node = nodes_[self];
    switch (m.type) {
      case MsgType::PrePrepare:
      case MsgType::NewView:
        if (m.src == cfg_.leader_of(m.view) && !node.accepted.contains(m.view)) {
          node.accepted[m.view] = {m.digest, m.payload};
          vote(MsgType::Prepare, self, m.view, m.digest);
          vote(MsgType::Commit, self, m.view, m.digest);
        }
        break;
      case MsgType::ViewChange: {
        auto& vcs = node.view_changes[m.view];
        vcs[m.src] = m;
        if (cfg_.leader_of(m.view) == self && vcs.size() >= cfg_.quorum() &&
            node.led.insert(m.view).second && *fault_[self] != FaultKind::Withhold) {
          std::vector<Message> proofs;
          for (const auto& [_, v] : vcs) proofs.push_back(v);
          lead_view(self, m.view, choose(proofs), proofs);
        }
        if (m.view > node.target && *fault_[self] != FaultKind::Withhold) {
          node.target = m.view;
          net_.broadcast(make(MsgType::ViewChange, self, m.view, Digest{}));
        }
        break;
      }
      default: break;
    }
  }

  void on_pre_prepare(std::uint32_t self, const Message& m) {
    auto& node = nodes_[self];
    if (node.changing || m.view != node.view || m.src != cfg_.leader_of(m.view)) return;
    if (!auth_.check(m.src, m.type, height_, m.view, m.digest, m.tag)) return;
    accept(self, m.view, m.digest, m.payload);
  }

  void accept(std::uint32_t self, std::uint64_t view, const Digest& d, const Payload& p) {
    auto& node = nodes_[self];
    if (node.accepted.contains(view) || !acceptable(d, p)) return;
    node.accepted[view] = {d, p};
    node.payloads[d] = p;
    vote(MsgType::Prepare, self, view, d);
    check_prepared(self, view, d);
    check_decided(self, view, d);
  }

  void on_prepare(std::uint32_t self, const Message& m) {
    if (!auth_.check(m.src, m.type, height_, m.view, m.digest, m.tag)) return;
    nodes_[self].prepares[{m.view, m.digest}][m.src] = m.tag;
    check_prepared(self, m.view, m.digest);
  }

  void check_prepared(std::uint32_t self, std::uint64_t view, const Digest& d) {
    auto& node = nodes_[self];
    auto acc = node.accepted.find(view);
    if (acc == node.accepted.end() || acc->second.first != d) return;
    if (node.changing || view != node.view || node.prepared_in.contains(view)) return;
    const auto& votes = node.prepares[{view, d}];
    if (votes.size() < cfg_.quorum()) return;
    node.prepared_in.insert(view);
    Certificate cert{view, d, acc->second.second, {}};
    for (const auto& [signer, tag] : votes) cert.prepares.push_back({signer, tag});
    if (!node.best || node.best->view < view) node.best = std::move(cert);
    if (node.committed_in.insert(view).second) vote(MsgType::Commit, self, view, d);
    check_decided(self, view, d);
  }

  void on_commit(std::uint32_t self, const Message& m) {
    if (!auth_.check(m.src, m.type, height_, m.view, m.digest, m.tag)) return;
    nodes_[self].commits[{m.view, m.digest}].insert(m.src);
    check_decided(self, m.view, m.digest);
  }

  void check_decided(std::uint32_t self, std::uint64_t view, const Digest& d) {
    auto& node = nodes_[self];
    if (node.decided || node.commits[{view, d}].size() < cfg_.quorum()) return;
    auto p = node.payloads.find(d);
    if (p == node.payloads.end()) return;
    node.decided = Decision{net_.now(), view, d, p->second};
  }

  void on_timer(std::uint32_t self, const Message& m) {
    auto& node = nodes_[self];
    if (node.decided || m.view != node.target || net_.now() < node.deadline) return;
    start_view_change(self, node.target + 1);
  }

  void start_view_change(std::uint32_t self, std::uint64_t view) {
    auto& node = nodes_[self];
    if (view <= node.target || view > cfg_.max_view_changes) return;
    node.changing = true;
    node.target = view;
    auto m = make(MsgType::ViewChange, self, view, node.best ? node.best->digest : Digest{});
    m.cert = node.best;
    net_.broadcast(m);
    if (!node.decided) arm(self, view);
  }

  bool valid_cert(const Certificate& c) const {
    if (!c.payload || digest_of(*c.payload) != c.digest) return false;
    std::set<std::uint32_t> signers;
    for (const auto& v : c.prepares)
      if (auth_.check(v.signer, MsgType::Prepare, height_, c.view, c.digest, v.tag))
        signers.insert(v.signer);
    return signers.size() >= cfg_.quorum();
  }

  bool valid_view_change(const Message& m) const {
    if (m.type != MsgType::ViewChange) return false;
    Digest d = m.cert ? m.cert->digest : Digest{};
    if (m.digest != d || !auth_.check(m.src, m.type, height_, m.view, d, m.tag)) return false;
    return !m.cert || (m.cert->view < m.view && valid_cert(*m.cert));
  }

  // Highest-view prepared certificate among the proofs.
  static std::optional<Certificate> choose(const std::vector<Message>& proofs) {
    std::optional<Certificate> best;
    for (const auto& p : proofs)
      if (p.cert && (!best || p.cert->view > best->view ||
                     (p.cert->view == best->view && p.cert->digest < best->digest)))
        best = p.cert;
    return best;
  }

  void on_view_change(std::uint32_t self, const Message& m) {
    if (!valid_view_change(m)) return;
    auto& node = nodes_[self];
    node.view_changes[m.view][m.src] = m;

    // Join once f+1 nodes are already past our target.
    if (m.view > node.target) {
      std::map<std::uint64_t, std::set<std::uint32_t>> ahead;
      for (const auto& [v, senders] : node.view_changes)
        if (v > node.target)
          for (const auto& [s, _] : senders) ahead[v].insert(s);
      std::set<std::uint32_t> distinct;
      for (const auto& [v, s] : ahead) distinct.insert(s.begin(), s.end());
      if (distinct.size() >= cfg_.f + 1 && !ahead.empty())
        start_view_change(self, ahead.begin()->first);
    }

    auto& vcs = node.view_changes[m.view];
    if (cfg_.leader_of(m.view) == self && vcs.size() >= cfg_.quorum() &&
        node.led.insert(m.view).second) {
      std::vector<Message> proofs;
      for (const auto& [_, v] : vcs) proofs.push_back(v);
      lead_view(self, m.view, choose(proofs), std::move(proofs));
    }
  }

  void on_new_view(std::uint32_t self, const Message& m) {
    auto& node = nodes_[self];
    if (m.src != cfg_.leader_of(m.view) || m.view <= node.view || m.view < node.target) return;
    if (!auth_.check(m.src, m.type, height_, m.view, m.digest, m.tag)) return;
    std::set<std::uint32_t> senders;
    for (const auto& p : m.proofs) {
      if (p.view != m.view || !valid_view_change(p)) return;
      senders.insert(p.src);
    }
    if (senders.size() < cfg_.quorum()) return;
    auto locked = choose(m.proofs);
    if (locked && locked->digest != m.digest) return;
    if (!acceptable(m.digest, m.payload)) return;
    node.view = node.target = m.view;
    node.changing = false;
    if (!node.decided) arm(self, m.view);
    accept(self, m.view, m.digest, m.payload);
  }

  const ConsensusConfig& cfg_;
  SimNetwork& net_;
  const Validator& validator_;
  std::uint64_t height_;
  Authenticator auth_;
  std::vector<std::optional<FaultKind>> fault_;
  std::vector<Node> nodes_;
};

}  // namespace

InstanceResult run_pbft(const ConsensusConfig& cfg, std::span<const Bytes> proposals,
                        SimNetwork& net, std::span<const FaultSpec> faults,
                        const Validator& validator, std::uint64_t height,
                        std::uint64_t auth_seed) {
  cfg.validate();
  if (cfg.mode != Mode::Pbft) throw Error(ErrorCode::ConfigInvalid, "run_pbft needs mode PBFT");
  validate_faults(cfg, faults);
  if (proposals.size() != cfg.n || net.nodes() != cfg.n)
    throw Error(ErrorCode::ConfigInvalid, "need one proposal and one network node per OSN");
  return PbftRun(cfg, proposals, net, faults, validator, height, auth_seed).run();
}

}  // namespace cpsec::ordering
