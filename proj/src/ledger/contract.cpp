// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/ledger.hpp"

namespace cpsec::ledger {

namespace {

bool value_fits(Action a, const Value& v) {
  switch (a) {
    case Action::Update: return std::holds_alternative<Bytes>(v);
    case Action::Store: return std::holds_alternative<ContentAddress>(v);
    case Action::Access: return std::holds_alternative<std::monostate>(v);
  }
  return false;
}

Bytes payload_key(const ChannelKey& channel, ByteView device_id, std::string_view key,
                  std::uint64_t timestamp) {
  Writer info;
  info.bytes(device_id);
  info.str(key);
  info.u64(timestamp);
  return hkdf_sha256(channel, as_bytes("CPSEC-PAYLOAD-V1"), info.data(), kAeadKeySize);
}

}  // namespace

Bytes seal_payload(const ChannelKey& channel, ByteView device_id, std::string_view key,
                   std::uint64_t timestamp, ByteView plaintext) {
  return aead_seal(payload_key(channel, device_id, key, timestamp), plaintext, device_id);
}

std::optional<Bytes> open_payload(const ChannelKey& channel, ByteView device_id,
                                  std::string_view key, std::uint64_t timestamp,
                                  ByteView ciphertext) {
  return aead_open(payload_key(channel, device_id, key, timestamp), ciphertext, device_id);
}

Transaction propose(const DeviceCredential& credential, const SecretKey& sk_full, Action action,
                    std::string key, Value value, std::uint64_t clock,
                    const SystemParams& params) {
  if (action != Action::Update && action != Action::Store && action != Action::Access)
    throw Error(ErrorCode::InvalidAction, "unknown action");
  if (!value_fits(action, value))
    throw Error(ErrorCode::InvalidAction,
                "value kind does not fit action " + std::string(action_name(action)));
  if (key.empty() || key.size() > kMaxKeySize)
    throw Error(ErrorCode::InvalidAction, "key must be 1.." + std::to_string(kMaxKeySize) + " bytes");
  if (!(params.g2 * sk_full.scalar() == credential.pk_full.point))
    throw Error(ErrorCode::CredentialInvalid, "secret key does not match credential");
  Transaction tx;
  tx.body = {credential.device_id, clock, action, std::move(key), std::move(value)};
  tx.tx_id = tx.body.id();
  tx.device_sig = mscrypto::sign(sk_full, device_message(tx.tx_id), params);
  return tx;
}

std::variant<RwSet, Reason> simulate(const TxBody& body, const WorldState& state) {
  if (!value_fits(body.action, body.value) || body.key.empty()) return Reason::InvalidAction;
  RwSet rw;
  rw.reads.push_back({body.key, state.version(body.key)});
  switch (body.action) {
    case Action::Update:
    case Action::Store:
      rw.writes.push_back({body.key, body.value});
      break;
    case Action::Access:
      if (!state.get(body.key)) return Reason::KeyNotFound;
      break;
  }
  return rw;
}

Endorsement endorse(const Endorser& peer, const Transaction& tx, const WorldState& state,
                    const DeviceDirectory& devices, const LedgerContext& ctx, SigCache* cache) {
  Endorsement e;
  e.peer_id = peer.peer_id;
  auto finish = [&](Verdict v, Reason r) {
    e.verdict = v;
    e.reason = r;
    if (v == Verdict::Yes) e.response_digest = e.rw.digest(tx.tx_id);
    e.sig = mscrypto::sign(peer.sk, endorsement_message(tx.tx_id, v, r, e.response_digest),
                           ctx.params);
    return e;
  };
  if (tx.tx_id != tx.body.id()) return finish(Verdict::No, Reason::BadSignature);
  auto dev = devices.find(tx.body.device_id);
  if (dev == devices.end()) return finish(Verdict::No, Reason::UnknownDevice);
  if (!mscrypto::verify(dev->second.pk_full, device_message(tx.tx_id), tx.device_sig, ctx.params,
                        cache))
    return finish(Verdict::No, Reason::BadSignature);
  if (!ctx.policy.permits(tx.body.device_id, tx.body.action))
    return finish(Verdict::No, Reason::AclDenied);
  auto result = simulate(tx.body, state);
  if (auto* reason = std::get_if<Reason>(&result)) return finish(Verdict::No, *reason);
  e.rw = std::get<RwSet>(std::move(result));
  return finish(Verdict::Yes, Reason::None);
}

Transaction collect(const Transaction& tx, std::span<const Endorsement> endorsements,
                    const LedgerContext& ctx, SigCache* cache) {
  const auto& allowed = ctx.policy.endorsers.at(tx.body.action);
  std::vector<const Endorsement*> yes(ctx.peer_roster.size(), nullptr);
  for (const auto& e : endorsements) {
    if (e.verdict != Verdict::Yes || e.peer_id >= ctx.peer_roster.size() || yes[e.peer_id])
      continue;
    if (std::find(allowed.begin(), allowed.end(), e.peer_id) == allowed.end()) continue;
    if (e.rw.digest(tx.tx_id) != e.response_digest) continue;
    if (!mscrypto::verify(ctx.peer_roster[e.peer_id],
                          endorsement_message(tx.tx_id, e.verdict, e.reason, e.response_digest),
                          e.sig, ctx.params, cache))
      continue;
    yes[e.peer_id] = &e;
  }
  std::vector<const Endorsement*> valid;
  for (const auto* e : yes)
    if (e) valid.push_back(e);
  if (valid.size() < ctx.policy.t_e)
    throw Error(ErrorCode::PolicyUnmet, static_cast<std::int64_t>(valid.size()),
                "need " + std::to_string(ctx.policy.t_e) + " YES endorsements");
  for (const auto* e : valid)
    if (e->response_digest != valid.front()->response_digest)
      throw Error(ErrorCode::DigestDivergence,
                  "peers " + std::to_string(valid.front()->peer_id) + " and " +
                      std::to_string(e->peer_id) + " simulated different read/write sets");

  Transaction out = tx;
  out.rw = valid.front()->rw;
  mscrypto::SignerBitmap signers(ctx.peer_roster.size());
  std::vector<Signature> sigs;
  for (const auto* e : valid) {
    signers.set(e->peer_id);
    sigs.push_back(e->sig);
  }
  out.endorsement = MultiSignature{mscrypto::aggregate_signatures(sigs), signers};
  return out;
}

VersionedValue query(const WorldState& state, const DeviceCredential& credential,
                     std::string_view key, const EndorsementPolicy& policy) {
  if (!policy.permits(credential.device_id, Action::Access))
    throw Error(ErrorCode::AclDenied, "device may not access state");
  const auto* v = state.get(key);
  if (!v) throw Error(ErrorCode::KeyNotFound, std::string(key));
  return *v;
}

}  // namespace cpsec::ledger
