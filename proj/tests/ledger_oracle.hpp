// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Naive sequential executor: replays each transaction body in block order and
// accepts it only if the versions it was endorsed against are still current.
// Shares no code with the ledger's commit path.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cpsec/deployment.hpp"
#include "cpsec/ledger.hpp"
#include "cpsec/rng.hpp"

namespace oracle {

class SequentialExecutor {
 public:
  bool apply(const cpsec::ledger::Transaction& tx) {
    using cpsec::ledger::Action;
    const auto& body = tx.body;
    auto it = state_.find(body.key);
    std::uint64_t current = it == state_.end() ? 0 : it->second.second;
    for (const auto& r : tx.rw.reads) {
      auto rit = state_.find(r.key);
      if ((rit == state_.end() ? 0 : rit->second.second) != r.version) return false;
    }
    if (body.action == Action::Update || body.action == Action::Store)
      state_[body.key] = {body.value, current + 1};
    return true;
  }

  bool matches(const cpsec::ledger::WorldState& ws) const {
    if (ws.size() != state_.size()) return false;
    for (const auto& [k, v] : state_) {
      const auto* got = ws.get(k);
      if (!got || got->value != v.first || got->version != v.second) return false;
    }
    return true;
  }

  std::size_t size() const { return state_.size(); }

 private:
  std::map<std::string, std::pair<cpsec::ledger::Value, std::uint64_t>> state_;
};

struct MvccReport {
  std::size_t blocks = 0;
  std::size_t txs = 0;
  std::size_t conflicts = 0;
  std::size_t flag_mismatches = 0;
  std::size_t state_mismatches = 0;
};

// Random blocks over a small key space. Some transactions are endorsed
// against older snapshots and many share keys, so conflicts are common.
inline MvccReport run_random_blocks(const cpsec::Deployment& d, std::uint64_t seed,
                                    std::size_t blocks, cpsec::mscrypto::SigCache* cache) {
  using namespace cpsec::ledger;
  cpsec::DetRng rng(seed);
  auto ledger = d.new_ledger(cache);
  SequentialExecutor exec;
  std::vector<WorldState> history{ledger.state()};
  std::uint64_t clock = 1;
  std::vector<std::size_t> writers;
  for (std::size_t i = 0; i < d.devices.size(); ++i) {
    const auto& id = d.devices[i].credential.device_id;
    if (d.ctx.policy.permits(id, Action::Update) && d.ctx.policy.permits(id, Action::Access))
      writers.push_back(i);
  }
  MvccReport rep;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<Transaction> txs;
    auto n = rng.uniform(0, 5);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto back = rng.chance(0.3) ? rng.uniform(0, std::min<std::uint64_t>(history.size() - 1, 3)) : 0;
      const auto& snap = history[history.size() - 1 - back];
      auto key = "k" + std::to_string(rng.uniform(0, 3));
      auto device = writers[rng.uniform(0, writers.size() - 1)];
      if (rng.chance(0.25) && snap.get(key))
        txs.push_back(d.envelope(device, Action::Access, key, {}, clock++, snap, cache));
      else
        txs.push_back(d.envelope(device, Action::Update, key, Value{rng.bytes(rng.uniform(1, 16))},
                                 clock++, snap, cache));
    }
    std::vector<bool> expect;
    for (const auto& tx : txs) expect.push_back(exec.apply(tx));
    const auto& committed = ledger.commit_block(d.next_block(ledger, txs));
    for (std::size_t i = 0; i < txs.size(); ++i) {
      auto f = committed.flags[i];
      if (f == Validity::MvccConflict) ++rep.conflicts;
      bool valid = f == Validity::Valid;
      bool flag_ok = valid == expect[i] && (valid || f == Validity::MvccConflict);
      if (!flag_ok) ++rep.flag_mismatches;
    }
    if (!exec.matches(ledger.state())) ++rep.state_mismatches;
    history.push_back(ledger.state());
    ++rep.blocks;
    rep.txs += txs.size();
  }
  return rep;
}

}  // namespace oracle
