// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/deployment.hpp"

#include <algorithm>

#include "cpsec/error.hpp"
#include "cpsec/rng.hpp"

namespace cpsec {

using namespace ledger;

std::size_t bft_quorum(std::size_t n) {
  std::size_t f = n == 0 ? 0 : (n - 1) / 3;
  return (n + f + 2) / 2;
}

Deployment make_deployment(const DeploymentSpec& spec) {
  if (spec.peers == 0 || spec.osns == 0)
    throw Error(ErrorCode::InvalidParams, "deployment needs peers and OSNs");
  Deployment d;
  d.params = mscrypto::SystemParams::standard();
  std::size_t t = spec.registry_t ? spec.registry_t : registry::default_threshold(spec.peers);

  auto peer_rng = DetRng::derive(spec.seed, "peers");
  std::vector<mscrypto::KeyPair> peer_keys;
  for (std::size_t i = 0; i < spec.peers; ++i) {
    peer_keys.push_back(mscrypto::keygen(d.params, peer_rng.bytes(32)));
    d.ctx.peer_roster.push_back(peer_keys.back().pk);
    d.ctx.peer_pops.push_back(peer_keys.back().pop);
    d.endorsers.push_back({static_cast<std::uint32_t>(i), peer_keys.back().sk});
  }
  for (std::size_t i = 0; i < spec.peers; ++i)
    d.peers.emplace_back(static_cast<std::uint32_t>(i), peer_keys[i], d.ctx.peer_roster, t,
                         d.params);

  auto osn_rng = DetRng::derive(spec.seed, "osns");
  for (std::size_t i = 0; i < spec.osns; ++i) {
    auto kp = mscrypto::keygen(d.params, osn_rng.bytes(32));
    d.ctx.osn_roster.push_back(kp.pk);
    d.ctx.osn_pops.push_back(kp.pop);
    d.osn_keys.emplace_back(static_cast<std::uint32_t>(i), kp.sk);
  }

  d.ctx.params = d.params;
  d.ctx.commit_quorum = spec.commit_quorum ? spec.commit_quorum : bft_quorum(spec.osns);
  d.ctx.registry_t = t;
  std::vector<std::uint32_t> all;
  for (std::size_t i = 0; i < spec.peers; ++i) all.push_back(static_cast<std::uint32_t>(i));
  for (auto a : {Action::Update, Action::Store, Action::Access}) d.ctx.policy.endorsers[a] = all;
  d.ctx.policy.t_e = spec.t_e;

  auto dev_rng = DetRng::derive(spec.seed, "devices");
  std::vector<registry::DeviceCredential> creds;
  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    const auto& id = spec.devices[i];
    auto reg = registry::register_device(d.peers, as_bytes(id), dev_rng.bytes(32), 0, d.params);
    creds.push_back(reg.device.credential);
    d.devices.push_back(std::move(reg.device));
    auto acl = spec.acl.find(id);
    d.ctx.policy.acl[to_bytes(id)] =
        acl != spec.acl.end() ? acl->second
                              : std::set<Action>{Action::Update, Action::Store, Action::Access};
  }
  d.ctx.validate();
  if (spec.encrypt_payloads) {
    auto key = DetRng::derive(spec.seed, "channel").bytes(32);
    d.channel_key.emplace();
    std::copy(key.begin(), key.end(), d.channel_key->begin());
  }
  std::span<const std::pair<std::uint32_t, mscrypto::SecretKey>> signers(d.osn_keys);
  d.genesis = make_genesis(d.ctx, std::move(creds), signers.first(d.ctx.commit_quorum));
  return d;
}

Ledger Deployment::new_ledger(mscrypto::SigCache* cache) const { return Ledger(ctx, genesis, cache); }

Transaction Deployment::envelope(std::size_t device, Action action, std::string key, Value value,
                                 std::uint64_t clock, const WorldState& state,
                                 mscrypto::SigCache* cache) const {
  const auto& dev = devices.at(device);
  if (channel_key && action == Action::Update)
    if (auto* plain = std::get_if<Bytes>(&value))
      value = seal_payload(*channel_key, dev.credential.device_id, key, clock, *plain);
  auto tx = propose(dev.credential, dev.sk_full, action, std::move(key), std::move(value), clock,
                    params);
  DeviceDirectory directory;
  for (const auto& d : devices) directory.emplace(d.credential.device_id, d.credential);
  std::vector<Endorsement> endorsements;
  const auto& allowed = ctx.policy.endorsers.at(action);
  for (std::size_t j = 0; j < ctx.policy.t_e && j < allowed.size(); ++j)
    endorsements.push_back(endorse(endorsers.at(allowed[j]), tx, state, directory, ctx, cache));
  return collect(tx, endorsements, ctx, cache);
}

Block Deployment::next_block(const Ledger& tip, std::vector<Transaction> txs,
                             std::uint32_t proposer) const {
  auto b = make_block(tip.height() + 1, tip.head_hash(), proposer, ctx, std::move(txs));
  std::span<const std::pair<std::uint32_t, mscrypto::SecretKey>> signers(osn_keys);
  sign_block(b, signers.first(ctx.commit_quorum), ctx);
  return b;
}

}  // namespace cpsec
