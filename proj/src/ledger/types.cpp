// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/error.hpp"
#include "cpsec/ledger.hpp"

namespace cpsec::ledger {

namespace {

enum class ValueTag : std::uint8_t { None = 0, Raw = 1, Address = 2 };

Action decode_action(Reader& r) {
  auto a = r.u8();
  if (a < 1 || a > 3) throw Error(ErrorCode::DecodeError, "unknown action " + std::to_string(a));
  return static_cast<Action>(a);
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Update: return "Update";
    case Action::Store: return "Store";
    case Action::Access: return "Access";
  }
  return "?";
}

Action parse_action(std::string_view name) {
  for (auto a : {Action::Update, Action::Store, Action::Access})
    if (action_name(a) == name) return a;
  throw Error(ErrorCode::InvalidAction, "unknown action '" + std::string(name) + "'");
}

std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::None: return "None";
    case Reason::BadSignature: return "BadSignature";
    case Reason::UnknownDevice: return "UnknownDevice";
    case Reason::AclDenied: return "AclDenied";
    case Reason::KeyNotFound: return "KeyNotFound";
    case Reason::InvalidAction: return "InvalidAction";
  }
  return "?";
}

std::string_view validity_name(Validity v) {
  switch (v) {
    case Validity::NotValidated: return "NotValidated";
    case Validity::Valid: return "Valid";
    case Validity::MvccConflict: return "MvccConflict";
    case Validity::EndorsementInvalid: return "EndorsementInvalid";
    case Validity::BadDeviceSignature: return "BadDeviceSignature";
    case Validity::UnknownDevice: return "UnknownDevice";
    case Validity::PolicyViolation: return "PolicyViolation";
    case Validity::DuplicateTx: return "DuplicateTx";
    case Validity::Malformed: return "Malformed";
  }
  return "?";
}

void encode_value(Writer& w, const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) {
    w.u8(static_cast<std::uint8_t>(ValueTag::None));
  } else if (auto* b = std::get_if<Bytes>(&v)) {
    w.u8(static_cast<std::uint8_t>(ValueTag::Raw));
    w.bytes(*b);
  } else {
    w.u8(static_cast<std::uint8_t>(ValueTag::Address));
    std::get<ContentAddress>(v).encode(w);
  }
}

Value decode_value(Reader& r) {
  switch (static_cast<ValueTag>(r.u8())) {
    case ValueTag::None: return std::monostate{};
    case ValueTag::Raw: return r.bytes(kMaxValueSize);
    case ValueTag::Address: return ContentAddress::decode(r);
  }
  throw Error(ErrorCode::DecodeError, "unknown value tag");
}

void TxBody::encode(Writer& w) const {
  w.bytes(device_id);
  w.u64(timestamp);
  w.u8(static_cast<std::uint8_t>(action));
  w.str(key);
  encode_value(w, value);
}

TxBody TxBody::decode(Reader& r) {
  TxBody b;
  b.device_id = r.bytes(registry::kMaxDeviceIdSize);
  b.timestamp = r.u64();
  b.action = decode_action(r);
  b.key = r.str(kMaxKeySize);
  b.value = decode_value(r);
  return b;
}

Digest TxBody::id() const {
  Writer w;
  encode(w);
  return Hasher("cpsec.tx").update(w.data()).finish();
}

void RwSet::encode(Writer& w) const {
  w.u32(static_cast<std::uint32_t>(reads.size()));
  for (const auto& e : reads) {
    w.str(e.key);
    w.u64(e.version);
  }
  w.u32(static_cast<std::uint32_t>(writes.size()));
  for (const auto& e : writes) {
    w.str(e.key);
    encode_value(w, e.value);
  }
}

RwSet RwSet::decode(Reader& r) {
  RwSet s;
  auto nr = r.count(12);
  for (std::uint32_t i = 0; i < nr; ++i) {
    ReadEntry e;
    e.key = r.str(kMaxKeySize);
    e.version = r.u64();
    s.reads.push_back(std::move(e));
  }
  auto nw = r.count(5);
  for (std::uint32_t i = 0; i < nw; ++i) {
    WriteEntry e;
    e.key = r.str(kMaxKeySize);
    e.value = decode_value(r);
    s.writes.push_back(std::move(e));
  }
  return s;
}

Digest RwSet::digest(const Digest& tx_id) const {
  Writer w;
  w.fixed(tx_id);
  encode(w);
  return Hasher("cpsec.rwset").update(w.data()).finish();
}

Bytes endorsement_message(const Digest& tx_id, Verdict verdict, Reason reason,
                          const Digest& response_digest) {
  Writer w;
  w.str("CPSEC-ENDORSE");
  w.fixed(tx_id);
  w.u8(static_cast<std::uint8_t>(verdict));
  w.u8(static_cast<std::uint8_t>(reason));
  w.fixed(response_digest);
  return std::move(w).take();
}

Bytes device_message(const Digest& tx_id) {
  Writer w;
  w.str("CPSEC-TX");
  w.fixed(tx_id);
  return std::move(w).take();
}

void Transaction::encode(Writer& w) const {
  body.encode(w);
  device_sig.encode(w);
  rw.encode(w);
  w.boolean(endorsement.has_value());
  if (endorsement) endorsement->encode(w);
}

Transaction Transaction::decode(Reader& r) {
  Transaction tx;
  tx.body = TxBody::decode(r);
  tx.tx_id = tx.body.id();
  tx.device_sig = Signature::decode(r);
  tx.rw = RwSet::decode(r);
  if (r.boolean()) tx.endorsement = MultiSignature::decode(r);
  return tx;
}

bool EndorsementPolicy::permits(ByteView device_id, Action a) const {
  auto it = acl.find(Bytes(device_id.begin(), device_id.end()));
  return it != acl.end() && it->second.contains(a);
}

void EndorsementPolicy::validate(std::size_t n_peers) const {
  if (t_e < 1) throw Error(ErrorCode::InvalidParams, "endorsement threshold must be >= 1");
  for (auto a : {Action::Update, Action::Store, Action::Access}) {
    auto it = endorsers.find(a);
    if (it == endorsers.end() || it->second.size() < t_e)
      throw Error(ErrorCode::InvalidParams,
                  "endorser set for " + std::string(action_name(a)) + " smaller than t_e");
    std::set<std::uint32_t> unique(it->second.begin(), it->second.end());
    if (unique.size() != it->second.size())
      throw Error(ErrorCode::InvalidParams, "duplicate endorser index");
    for (auto i : it->second)
      if (i >= n_peers) throw Error(ErrorCode::InvalidParams, "endorser index out of range");
  }
}

void EndorsementPolicy::encode(Writer& w) const {
  w.u32(static_cast<std::uint32_t>(endorsers.size()));
  for (const auto& [a, ids] : endorsers) {
    w.u8(static_cast<std::uint8_t>(a));
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (auto i : ids) w.u32(i);
  }
  w.u32(static_cast<std::uint32_t>(t_e));
  w.u32(static_cast<std::uint32_t>(acl.size()));
  for (const auto& [dev, actions] : acl) {
    w.bytes(dev);
    w.u8(static_cast<std::uint8_t>(actions.size()));
    for (auto a : actions) w.u8(static_cast<std::uint8_t>(a));
  }
}

EndorsementPolicy EndorsementPolicy::decode(Reader& r) {
  EndorsementPolicy p;
  auto na = r.count(5);
  for (std::uint32_t i = 0; i < na; ++i) {
    auto a = decode_action(r);
    auto n = r.count(4);
    std::vector<std::uint32_t> ids;
    for (std::uint32_t j = 0; j < n; ++j) ids.push_back(r.u32());
    if (!p.endorsers.empty() && p.endorsers.rbegin()->first >= a)
      throw Error(ErrorCode::DecodeError, "endorser entries out of order");
    p.endorsers.emplace(a, std::move(ids));
  }
  p.t_e = r.u32();
  auto nd = r.count(5);
  for (std::uint32_t i = 0; i < nd; ++i) {
    auto dev = r.bytes(registry::kMaxDeviceIdSize);
    std::set<Action> actions;
    auto n = r.u8();
    for (std::uint8_t j = 0; j < n; ++j) {
      auto a = decode_action(r);
      if (!actions.empty() && *actions.rbegin() >= a)
        throw Error(ErrorCode::DecodeError, "ACL actions out of order");
      actions.insert(a);
    }
    if (!p.acl.empty() && p.acl.rbegin()->first >= dev)
      throw Error(ErrorCode::DecodeError, "ACL entries out of order");
    p.acl.emplace(std::move(dev), std::move(actions));
  }
  return p;
}

void LedgerContext::validate(SigCache* cache) const {
  params.validate();
  if (osn_roster.empty() || osn_roster.size() != osn_pops.size())
    throw Error(ErrorCode::InvalidParams, "OSN roster and proofs disagree");
  if (peer_roster.empty() || peer_roster.size() != peer_pops.size())
    throw Error(ErrorCode::InvalidParams, "peer roster and proofs disagree");
  if (commit_quorum < 1 || commit_quorum > osn_roster.size())
    throw Error(ErrorCode::InvalidParams, "commit quorum out of range");
  if (registry_t < 1 || registry_t > peer_roster.size())
    throw Error(ErrorCode::InvalidParams, "registry threshold out of range");
  policy.validate(peer_roster.size());
  for (const auto* group : {&osn_roster, &peer_roster}) {
    const auto& pops = group == &osn_roster ? osn_pops : peer_pops;
    std::vector<std::pair<PublicKey, ProofOfPossession>> keys;
    for (std::size_t i = 0; i < group->size(); ++i) keys.emplace_back((*group)[i], pops[i]);
    mscrypto::aggregate_public_keys(keys, params, cache);
  }
}

Digest LedgerContext::digest() const {
  Writer w;
  encode(w);
  return Hasher("cpsec.context").update(w.data()).finish();
}

void LedgerContext::encode(Writer& w) const {
  params.encode(w);
  w.u32(static_cast<std::uint32_t>(osn_roster.size()));
  for (std::size_t i = 0; i < osn_roster.size(); ++i) {
    osn_roster[i].encode(w);
    osn_pops.at(i).encode(w);
  }
  w.u32(static_cast<std::uint32_t>(commit_quorum));
  w.u32(static_cast<std::uint32_t>(peer_roster.size()));
  for (std::size_t i = 0; i < peer_roster.size(); ++i) {
    peer_roster[i].encode(w);
    peer_pops.at(i).encode(w);
  }
  w.u32(static_cast<std::uint32_t>(registry_t));
  policy.encode(w);
}

LedgerContext LedgerContext::decode(Reader& r) {
  LedgerContext c;
  c.params = SystemParams::decode(r);
  auto no = r.count(144);
  for (std::uint32_t i = 0; i < no; ++i) {
    c.osn_roster.push_back(PublicKey::decode(r));
    c.osn_pops.push_back(ProofOfPossession::decode(r));
  }
  c.commit_quorum = r.u32();
  auto np = r.count(144);
  for (std::uint32_t i = 0; i < np; ++i) {
    c.peer_roster.push_back(PublicKey::decode(r));
    c.peer_pops.push_back(ProofOfPossession::decode(r));
  }
  c.registry_t = r.u32();
  c.policy = EndorsementPolicy::decode(r);
  return c;
}

}  // namespace cpsec::ledger
