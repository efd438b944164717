// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string_view>

#include "cpsec/error.hpp"
#include "cpsec/ledger.hpp"

namespace cpsec::ledger {

namespace {

constexpr std::string_view kMagic = "CPSLEDG1";

Digest tx_leaf(const Transaction& tx) {
  Writer w;
  tx.encode(w);
  return Hasher("cpsec.leaf.tx").update(w.data()).finish();
}

Digest credential_leaf(const DeviceCredential& c) {
  return Hasher("cpsec.leaf.cred").update(c.to_bytes()).finish();
}

std::string key_of(const Digest& d) { return std::string(d.begin(), d.end()); }

bool rw_shape_ok(const Transaction& tx) {
  const auto& b = tx.body;
  if (tx.tx_id != b.id()) return false;
  if (tx.rw.reads.size() != 1 || tx.rw.reads[0].key != b.key) return false;
  switch (b.action) {
    case Action::Update:
      return std::holds_alternative<Bytes>(b.value) && tx.rw.writes.size() == 1 &&
             tx.rw.writes[0] == WriteEntry{b.key, b.value};
    case Action::Store:
      return std::holds_alternative<ContentAddress>(b.value) && tx.rw.writes.size() == 1 &&
             tx.rw.writes[0] == WriteEntry{b.key, b.value};
    case Action::Access:
      return std::holds_alternative<std::monostate>(b.value) && tx.rw.writes.empty();
  }
  return false;
}

}  // namespace

Digest merkle_root(std::span<const Digest> leaves) {
  if (leaves.empty()) return Digest{};
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) {
    if (level.size() % 2) level.push_back(level.back());
    std::vector<Digest> next;
    for (std::size_t i = 0; i < level.size(); i += 2)
      next.push_back(Hasher("cpsec.node").update(level[i]).update(level[i + 1]).finish());
    level = std::move(next);
  }
  return level.front();
}

Digest Block::compute_merkle_root() const {
  std::vector<Digest> leaves;
  for (const auto& tx : txs) leaves.push_back(tx_leaf(tx));
  for (const auto& c : credentials) leaves.push_back(credential_leaf(c));
  return ledger::merkle_root(leaves);
}

Digest Block::compute_hash() const {
  Writer w;
  w.u64(height);
  w.fixed(prev_hash);
  w.u32(proposer);
  w.fixed(config_digest);
  w.fixed(merkle_root);
  return Hasher("cpsec.block").update(w.data()).finish();
}

void Block::seal() {
  merkle_root = compute_merkle_root();
  block_hash = compute_hash();
}

void Block::encode(Writer& w) const {
  w.u64(height);
  w.fixed(prev_hash);
  w.u32(proposer);
  w.fixed(config_digest);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (const auto& tx : txs) tx.encode(w);
  w.u32(static_cast<std::uint32_t>(credentials.size()));
  for (const auto& c : credentials) c.encode(w);
  w.fixed(merkle_root);
  w.fixed(block_hash);
  commit_sigs.encode(w);
  w.u32(static_cast<std::uint32_t>(flags.size()));
  for (auto f : flags) w.u8(static_cast<std::uint8_t>(f));
}

Block Block::decode(Reader& r) {
  Block b;
  b.height = r.u64();
  b.prev_hash = r.array<32>();
  b.proposer = r.u32();
  b.config_digest = r.array<32>();
  auto nt = r.count(64);
  for (std::uint32_t i = 0; i < nt; ++i) b.txs.push_back(Transaction::decode(r));
  auto nc = r.count(64);
  for (std::uint32_t i = 0; i < nc; ++i) b.credentials.push_back(DeviceCredential::decode(r));
  b.merkle_root = r.array<32>();
  b.block_hash = r.array<32>();
  b.commit_sigs = MultiSignature::decode(r);
  auto nf = r.count(1);
  for (std::uint32_t i = 0; i < nf; ++i) {
    auto f = r.u8();
    if (f > static_cast<std::uint8_t>(Validity::Malformed))
      throw Error(ErrorCode::DecodeError, "unknown validity flag");
    b.flags.push_back(static_cast<Validity>(f));
  }
  return b;
}

Bytes block_commit_message(const Digest& block_hash) {
  Writer w;
  w.str("CPSEC-BLOCK");
  w.fixed(block_hash);
  return std::move(w).take();
}

const VersionedValue* WorldState::get(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint64_t WorldState::version(std::string_view key) const {
  const auto* v = get(key);
  return v ? v->version : 0;
}

void WorldState::put(const std::string& key, Value value) {
  auto& e = entries_[key];
  e.value = std::move(value);
  ++e.version;
}

Digest WorldState::digest() const {
  Hasher h("cpsec.worldstate");
  for (const auto& [k, v] : entries_) {
    Writer w;
    w.str(k);
    encode_value(w, v.value);
    w.u64(v.version);
    h.update(w.data());
  }
  return h.finish();
}

Block make_block(std::uint64_t height, const Digest& prev_hash, std::uint32_t proposer,
                 const LedgerContext& ctx, std::vector<Transaction> txs,
                 std::vector<DeviceCredential> credentials) {
  Block b;
  b.height = height;
  b.prev_hash = prev_hash;
  b.proposer = proposer;
  b.config_digest = ctx.digest();
  b.txs = std::move(txs);
  b.credentials = std::move(credentials);
  b.seal();
  return b;
}

void sign_block(Block& block, std::span<const std::pair<std::uint32_t, SecretKey>> osn_signers,
                const LedgerContext& ctx) {
  mscrypto::SignerBitmap signers(ctx.osn_roster.size());
  std::vector<Signature> sigs;
  auto msg = block_commit_message(block.block_hash);
  for (const auto& [idx, sk] : osn_signers) {
    if (signers.test(idx)) continue;
    signers.set(idx);
    sigs.push_back(mscrypto::sign(sk, msg, ctx.params));
  }
  block.commit_sigs = {mscrypto::aggregate_signatures(sigs), signers};
}

Block make_genesis(const LedgerContext& ctx, std::vector<DeviceCredential> credentials,
                   std::span<const std::pair<std::uint32_t, SecretKey>> osn_signers) {
  auto b = make_block(0, Digest{}, 0, ctx, {}, std::move(credentials));
  sign_block(b, osn_signers, ctx);
  return b;
}

Ledger::Ledger(LedgerContext ctx, Block genesis, SigCache* cache)
    : ctx_(std::move(ctx)), cache_(cache) {
  ctx_.validate(cache_);
  ctx_digest_ = ctx_.digest();
  if (genesis.height != 0 || genesis.prev_hash != Digest{})
    throw Error(ErrorCode::BrokenChain, "genesis must have height 0 and a zero parent");
  commit_block(std::move(genesis));
}

void Ledger::check_header(const Block& block) const {
  std::uint64_t expect_height = blocks_.empty() ? 0 : height() + 1;
  Digest expect_prev = blocks_.empty() ? Digest{} : head_hash();
  if (block.height != expect_height)
    throw Error(ErrorCode::BrokenChain, static_cast<std::int64_t>(block.height),
                "expected height " + std::to_string(expect_height));
  if (block.prev_hash != expect_prev)
    throw Error(ErrorCode::BrokenChain, static_cast<std::int64_t>(block.height),
                "prev_hash does not match head");
  if (block.config_digest != ctx_digest_)
    throw Error(ErrorCode::BrokenChain, static_cast<std::int64_t>(block.height),
                "block built for another ledger context");
  if (block.merkle_root != block.compute_merkle_root() || block.block_hash != block.compute_hash())
    throw Error(ErrorCode::BrokenChain, static_cast<std::int64_t>(block.height),
                "block contents do not match its hash");
}

void Ledger::check_quorum(const Block& block) const {
  const auto& sigs = block.commit_sigs;
  if (sigs.signers.size() != ctx_.osn_roster.size() || sigs.signers.count() < ctx_.commit_quorum ||
      !mscrypto::verify_multisig(ctx_.osn_roster, sigs, block_commit_message(block.block_hash),
                                 ctx_.params, cache_))
    throw Error(ErrorCode::QuorumInvalid, static_cast<std::int64_t>(block.height));
}

DeviceDirectory Ledger::admit_credentials(const Block& block) const {
  DeviceDirectory devices = devices_;
  for (const auto& c : block.credentials) {
    if (!registry::verify_credential(c, ctx_.peer_roster, ctx_.registry_t, ctx_.params, cache_))
      throw Error(ErrorCode::CredentialInvalid, to_hex(c.device_id));
    if (!devices.emplace(c.device_id, c).second)
      throw Error(ErrorCode::DuplicateDevice, to_hex(c.device_id));
  }
  return devices;
}

std::vector<Validity> Ledger::compute_flags(const Block& block,
                                            const DeviceDirectory& devices) const {
  std::vector<Validity> flags;
  std::map<std::string, std::uint64_t, std::less<>> pending;  // versions after earlier valid txs
  std::unordered_set<std::string> seen_here;
  for (const auto& tx : block.txs) {
    auto flag = [&]() -> Validity {
      if (!rw_shape_ok(tx)) return Validity::Malformed;
      auto id = key_of(tx.tx_id);
      bool dup = tx_ids_.contains(id) || !seen_here.insert(id).second;
      if (dup) return Validity::DuplicateTx;
      auto dev = devices.find(tx.body.device_id);
      if (dev == devices.end()) return Validity::UnknownDevice;
      if (!ctx_.policy.permits(tx.body.device_id, tx.body.action)) return Validity::PolicyViolation;
      if (!mscrypto::verify(dev->second.pk_full, device_message(tx.tx_id), tx.device_sig,
                            ctx_.params, cache_))
        return Validity::BadDeviceSignature;
      if (!tx.endorsement) return Validity::EndorsementInvalid;
      const auto& e = *tx.endorsement;
      const auto& allowed = ctx_.policy.endorsers.at(tx.body.action);
      if (e.signers.size() != ctx_.peer_roster.size() || e.signers.count() < ctx_.policy.t_e)
        return Validity::EndorsementInvalid;
      for (auto i : e.signers.indices())
        if (std::find(allowed.begin(), allowed.end(), i) == allowed.end())
          return Validity::EndorsementInvalid;
      auto msg = endorsement_message(tx.tx_id, Verdict::Yes, Reason::None, tx.rw.digest(tx.tx_id));
      if (!mscrypto::verify_multisig(ctx_.peer_roster, e, msg, ctx_.params, cache_))
        return Validity::EndorsementInvalid;
      for (const auto& read : tx.rw.reads) {
        auto it = pending.find(read.key);
        auto current = it != pending.end() ? it->second : state_.version(read.key);
        if (current != read.version) return Validity::MvccConflict;
      }
      return Validity::Valid;
    }();
    if (flag == Validity::Valid)
      for (const auto& w : tx.rw.writes) {
        auto it = pending.find(w.key);
        auto current = it != pending.end() ? it->second : state_.version(w.key);
        pending[w.key] = current + 1;
      }
    // A malformed tx may not even carry a consistent id; everything else
    // burns its id.
    if (flag != Validity::Malformed) seen_here.insert(key_of(tx.tx_id));
    flags.push_back(flag);
  }
  return flags;
}

std::vector<Validity> Ledger::validate_block(const Block& block) const {
  check_header(block);
  return compute_flags(block, admit_credentials(block));
}

const Block& Ledger::commit_block(Block block) {
  check_header(block);
  check_quorum(block);
  auto devices = admit_credentials(block);
  block.flags = compute_flags(block, devices);
  for (std::size_t i = 0; i < block.txs.size(); ++i) {
    const auto& tx = block.txs[i];
    if (block.flags[i] == Validity::Valid)
      for (const auto& w : tx.rw.writes) state_.put(w.key, w.value);
    if (block.flags[i] != Validity::Malformed) tx_ids_.insert(key_of(tx.tx_id));
  }
  devices_ = std::move(devices);
  blocks_.push_back(std::move(block));
  return blocks_.back();
}

Bytes export_ledger(const Ledger& ledger) {
  Writer w;
  w.fixed(as_bytes(kMagic));
  Writer ctx;
  ledger.context().encode(ctx);
  w.bytes(ctx.data());
  w.u32(static_cast<std::uint32_t>(ledger.blocks().size()));
  for (const auto& b : ledger.blocks()) {
    Writer bw;
    b.encode(bw);
    w.bytes(bw.data());
  }
  return std::move(w).take();
}

LedgerFile import_ledger(ByteView bytes) {
  Reader r(bytes);
  auto magic = r.fixed(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw Error(ErrorCode::DecodeError, "not a ledger export");
  LedgerFile file;
  {
    auto section = r.bytes();
    Reader cr(section);
    file.context = LedgerContext::decode(cr);
    cr.expect_end();
  }
  auto n = r.count(4);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto section = r.bytes();
    Reader br(section);
    file.blocks.push_back(Block::decode(br));
    br.expect_end();
  }
  r.expect_end();
  return file;
}

bool verify_chain(const LedgerFile& file, SigCache* cache) {
  if (file.blocks.empty()) return false;
  // Hash-level checks first; they are cheap and catch most tampering.
  auto ctx_digest = file.context.digest();
  for (std::size_t i = 0; i < file.blocks.size(); ++i) {
    const auto& b = file.blocks[i];
    Digest prev = i == 0 ? Digest{} : file.blocks[i - 1].block_hash;
    if (b.height != i || b.prev_hash != prev || b.config_digest != ctx_digest ||
        b.flags.size() != b.txs.size() || b.merkle_root != b.compute_merkle_root() ||
        b.block_hash != b.compute_hash())
      return false;
  }
  try {
    Ledger ledger(file.context, file.blocks.front(), cache);
    if (ledger.blocks().front().flags != file.blocks.front().flags) return false;
    for (std::size_t i = 1; i < file.blocks.size(); ++i)
      if (ledger.commit_block(file.blocks[i]).flags != file.blocks[i].flags) return false;
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace cpsec::ledger
