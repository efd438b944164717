// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "cpsec/error.hpp"
#include "cpsec/ordering.hpp"

namespace cpsec::ordering {

bool ClusterRun::agreement() const {
  std::optional<Bytes> first;
  for (const auto& r : replicas) {
    if (!r) continue;
    auto bytes = ledger::export_ledger(*r);
    if (!first) first = std::move(bytes);
    else if (*first != bytes) return false;
  }
  return true;
}

ClusterRun run_cluster(const Deployment& d, const ConsensusConfig& cfg,
                       std::span<const ledger::Transaction> workload, SimNetwork& net,
                       std::span<const FaultSpec> faults, mscrypto::SigCache* cache) {
  cfg.validate();
  validate_faults(cfg, faults);
  if (d.ctx.osn_roster.size() != cfg.n || net.nodes() != cfg.n)
    throw Error(ErrorCode::ConfigInvalid, "OSN roster, network and config disagree on n");

  std::vector<bool> byzantine(cfg.n, false);
  for (const auto& f : faults) {
    byzantine[f.node] = f.byzantine();
    if (f.kind == FaultKind::Crash) net.crash_at(f.node, f.at_tick);
  }

  ClusterRun run;
  run.replicas.resize(cfg.n);
  for (std::uint32_t i = 0; i < cfg.n; ++i)
    if (!byzantine[i]) run.replicas[i].emplace(d.new_ledger(cache));

  std::set<Digest> submitted;
  for (const auto& tx : workload) submitted.insert(tx.tx_id);

  OsnQueue queue(cfg.queue_capacity);
  std::size_t next = 0;
  while (next < workload.size() || queue.size() > 0) {
    while (next < workload.size() && queue.size() < queue.capacity())
      queue.submit(workload[next++], net.now());
    auto txs = queue.cut_batch(cfg, net.now());
    if (!txs) {
      net.advance_to(*queue.next_deadline(cfg));
      continue;
    }
    auto height = run.blocks + 1;
    std::vector<Bytes> proposals;
    for (std::uint32_t i = 0; i < cfg.n; ++i)
      proposals.push_back(Batch{height, i, *txs}.encode());
    Validator validator = [&](ByteView payload) {
      try {
        auto b = Batch::decode(payload);
        if (b.height != height || b.proposer >= cfg.n || b.txs.empty()) return false;
        for (const auto& tx : b.txs)
          if (!submitted.contains(tx.tx_id)) return false;
        return true;
      } catch (const Error&) {
        return false;
      }
    };
    auto inst = cfg.mode == Mode::Pbft
                    ? run_pbft(cfg, proposals, net, faults, validator, height, height)
                    : run_cft(cfg, proposals, net, faults, validator, height);
    run.instances.push_back(inst);
    if (inst.status != Status::Decided) {
      run.status = inst.status;
      break;
    }

    std::vector<std::uint32_t> deciders;
    std::optional<ledger::Block> block;
    for (std::uint32_t i = 0; i < cfg.n; ++i) {
      const auto& dec = inst.decisions[i];
      if (!dec || !run.replicas[i] || net.is_down(i)) continue;
      auto batch = Batch::decode(*dec->payload);
      auto& replica = *run.replicas[i];
      auto mine = ledger::make_block(replica.height() + 1, replica.head_hash(), batch.proposer,
                                     d.ctx, std::move(batch.txs));
      if (block && mine.block_hash != block->block_hash)
        throw Error(ErrorCode::DivergentHistory, static_cast<std::int64_t>(height));
      if (!block) block = std::move(mine);
      deciders.push_back(i);
    }
    if (deciders.size() < d.ctx.commit_quorum) {
      run.status = Status::NoQuorum;
      break;
    }
    std::vector<std::pair<std::uint32_t, mscrypto::SecretKey>> signers;
    for (std::size_t j = 0; j < d.ctx.commit_quorum; ++j) signers.push_back(d.osn_keys[deciders[j]]);
    ledger::sign_block(*block, signers, d.ctx);
    for (auto i : deciders) run.replicas[i]->commit_block(*block);
    ++run.blocks;
  }
  for (std::uint32_t i = 0; i < cfg.n; ++i)
    if (net.is_down(i)) run.replicas[i].reset();
  return run;
}

}  // namespace cpsec::ordering
