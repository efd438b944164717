// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// One consortium, one ordering service, a set of registered devices and the
// genesis block that records them, all derived from a seed.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpsec/ledger.hpp"
#include "cpsec/registry.hpp"

namespace cpsec {

struct DeploymentSpec {
  std::size_t peers = 4;
  std::size_t registry_t = 0;  // 0: ceil(2n/3)
  std::size_t osns = 3;
  std::size_t commit_quorum = 0;  // 0: BFT quorum over the OSNs
  std::size_t t_e = 2;
  std::vector<std::string> devices = {"sensor-01"};
  // Devices not listed here may perform every action.
  std::map<std::string, std::set<ledger::Action>> acl;
  std::uint64_t seed = 1;
  bool encrypt_payloads = false;
};

// ceil((n + f + 1) / 2) with f = floor((n - 1) / 3).
std::size_t bft_quorum(std::size_t n);

struct Deployment {
  mscrypto::SystemParams params;
  std::vector<registry::ConsortiumPeer> peers;
  std::vector<ledger::Endorser> endorsers;
  std::vector<std::pair<std::uint32_t, mscrypto::SecretKey>> osn_keys;
  ledger::LedgerContext ctx;
  std::vector<registry::FinalizedDevice> devices;
  ledger::Block genesis;
  std::optional<ledger::ChannelKey> channel_key;  // set when payloads are encrypted

  ledger::Ledger new_ledger(mscrypto::SigCache* cache = nullptr) const;

  // propose -> endorse by the first t_e endorsers allowed for the action ->
  // collect, all against `state`. Update values are sealed first when the
  // deployment encrypts payloads.
  ledger::Transaction envelope(std::size_t device, ledger::Action action, std::string key,
                               ledger::Value value, std::uint64_t clock,
                               const ledger::WorldState& state,
                               mscrypto::SigCache* cache = nullptr) const;

  // Next block on top of `tip`, signed by the first commit_quorum OSNs.
  ledger::Block next_block(const ledger::Ledger& tip, std::vector<ledger::Transaction> txs,
                           std::uint32_t proposer = 0) const;
};

Deployment make_deployment(const DeploymentSpec& spec);

}  // namespace cpsec
