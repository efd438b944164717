// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Consortium ledger: signed proposals, endorsement by simulation against a
// world-state snapshot, envelope assembly, and block commit with MVCC
// validation. Transactions that lose a read-version race stay in the block
// with an invalid flag and leave the world state untouched.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "cpsec/content_address.hpp"
#include "cpsec/mscrypto.hpp"
#include "cpsec/registry.hpp"

namespace cpsec::ledger {

using mscrypto::MultiSignature;
using mscrypto::ProofOfPossession;
using mscrypto::PublicKey;
using mscrypto::SecretKey;
using mscrypto::SigCache;
using mscrypto::Signature;
using mscrypto::SystemParams;
using registry::DeviceCredential;

enum class Action : std::uint8_t { Update = 1, Store = 2, Access = 3 };

std::string_view action_name(Action a);
// Error(InvalidAction) on an unknown name.
Action parse_action(std::string_view name);

// Update carries bytes, Store a DHT pointer, Access nothing.
using Value = std::variant<std::monostate, Bytes, ContentAddress>;

void encode_value(Writer& w, const Value& v);
Value decode_value(Reader& r);

constexpr std::size_t kMaxKeySize = 1024;
constexpr std::size_t kMaxValueSize = 1u << 20;

struct TxBody {
  Bytes device_id;
  std::uint64_t timestamp = 0;  // logical clock
  Action action = Action::Update;
  std::string key;
  Value value;

  bool operator==(const TxBody&) const = default;
  void encode(Writer& w) const;
  static TxBody decode(Reader& r);
  Digest id() const;
};

struct ReadEntry {
  std::string key;
  std::uint64_t version = 0;  // 0 = key absent
  bool operator==(const ReadEntry&) const = default;
};

struct WriteEntry {
  std::string key;
  Value value;
  bool operator==(const WriteEntry&) const = default;
};

struct RwSet {
  std::vector<ReadEntry> reads;
  std::vector<WriteEntry> writes;

  bool operator==(const RwSet&) const = default;
  void encode(Writer& w) const;
  static RwSet decode(Reader& r);
  // Binds the simulated sets to one transaction.
  Digest digest(const Digest& tx_id) const;
};

enum class Verdict : std::uint8_t { No = 0, Yes = 1 };

enum class Reason : std::uint8_t {
  None = 0,
  BadSignature,
  UnknownDevice,
  AclDenied,
  KeyNotFound,
  InvalidAction,
};

std::string_view reason_name(Reason r);

struct Endorsement {
  std::uint32_t peer_id = 0;
  Verdict verdict = Verdict::No;
  Reason reason = Reason::None;
  Digest response_digest{};
  RwSet rw;  // committed to by response_digest
  Signature sig;
};

Bytes endorsement_message(const Digest& tx_id, Verdict verdict, Reason reason,
                          const Digest& response_digest);

enum class Validity : std::uint8_t {
  NotValidated = 0,
  Valid,
  MvccConflict,
  EndorsementInvalid,
  BadDeviceSignature,
  UnknownDevice,
  PolicyViolation,
  DuplicateTx,
  Malformed,
};

std::string_view validity_name(Validity v);

struct Transaction {
  TxBody body;
  Digest tx_id{};
  Signature device_sig;
  RwSet rw;                                   // attached by collect
  std::optional<MultiSignature> endorsement;  // over the peer roster

  bool operator==(const Transaction&) const = default;
  void encode(Writer& w) const;
  // Recomputes tx_id from the body.
  static Transaction decode(Reader& r);
};

Bytes device_message(const Digest& tx_id);

struct EndorsementPolicy {
  std::map<Action, std::vector<std::uint32_t>> endorsers;  // peer indices per action
  std::size_t t_e = 1;
  std::map<Bytes, std::set<Action>> acl;

  bool permits(ByteView device_id, Action a) const;
  // Error(InvalidParams) unless 1 <= t_e <= |endorsers[a]| for every action
  // and every index is below n_peers.
  void validate(std::size_t n_peers) const;

  bool operator==(const EndorsementPolicy&) const = default;
  void encode(Writer& w) const;
  static EndorsementPolicy decode(Reader& r);
};

// Everything a verifier needs besides the blocks; every block commits to
// its digest.
struct LedgerContext {
  SystemParams params;
  std::vector<PublicKey> osn_roster;
  std::vector<ProofOfPossession> osn_pops;
  std::size_t commit_quorum = 1;
  std::vector<PublicKey> peer_roster;
  std::vector<ProofOfPossession> peer_pops;
  std::size_t registry_t = 1;
  EndorsementPolicy policy;

  // Error(InvalidParams / RogueKeyRejected) on inconsistent fields.
  void validate(SigCache* cache = nullptr) const;
  Digest digest() const;

  void encode(Writer& w) const;
  static LedgerContext decode(Reader& r);
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  std::uint32_t proposer = 0;
  Digest config_digest{};
  std::vector<Transaction> txs;
  std::vector<DeviceCredential> credentials;  // registrations recorded here
  Digest merkle_root{};
  Digest block_hash{};
  MultiSignature commit_sigs;    // OSN quorum over block_hash
  std::vector<Validity> flags;  // one per tx, set at commit

  Digest compute_merkle_root() const;
  Digest compute_hash() const;
  // Fills merkle_root and block_hash.
  void seal();

  bool operator==(const Block&) const = default;
  void encode(Writer& w) const;
  static Block decode(Reader& r);
};

Bytes block_commit_message(const Digest& block_hash);

// Binary tree over the leaves, last node duplicated on odd levels; empty
// input gives the all-zero digest.
Digest merkle_root(std::span<const Digest> leaves);

struct VersionedValue {
  Value value;
  std::uint64_t version = 0;
  bool operator==(const VersionedValue&) const = default;
};

class WorldState {
 public:
  const VersionedValue* get(std::string_view key) const;
  std::uint64_t version(std::string_view key) const;
  // Writes value and bumps the key's version by one.
  void put(const std::string& key, Value value);

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, VersionedValue, std::less<>>& entries() const { return entries_; }
  Digest digest() const;
  bool operator==(const WorldState&) const = default;

 private:
  std::map<std::string, VersionedValue, std::less<>> entries_;
};

using DeviceDirectory = std::map<Bytes, DeviceCredential>;

// Error(InvalidAction) when the value kind does not fit the action;
// Error(CredentialInvalid) when sk_full does not match the credential.
Transaction propose(const DeviceCredential& credential, const SecretKey& sk_full, Action action,
                    std::string key, Value value, std::uint64_t clock,
                    const SystemParams& params);

// Optional confidentiality for Update payloads under a channel key shared by
// the consortium and its devices. Every payload is sealed under its own key
// derived from (device_id, key, timestamp); the contract stores the
// ciphertext without reading it.
using ChannelKey = std::array<std::uint8_t, 32>;
Bytes seal_payload(const ChannelKey& channel, ByteView device_id, std::string_view key,
                   std::uint64_t timestamp, ByteView plaintext);
std::optional<Bytes> open_payload(const ChannelKey& channel, ByteView device_id,
                                  std::string_view key, std::uint64_t timestamp,
                                  ByteView ciphertext);

// Deterministic CRUD contract: reads the key's version, writes for
// Update/Store; Access fails on a missing key.
std::variant<RwSet, Reason> simulate(const TxBody& body, const WorldState& state);

struct Endorser {
  std::uint32_t peer_id;
  SecretKey sk;
};

// Never throws for bad input; a NO verdict carries the reason.
Endorsement endorse(const Endorser& peer, const Transaction& tx, const WorldState& state,
                    const DeviceDirectory& devices, const LedgerContext& ctx,
                    SigCache* cache = nullptr);

// Error(PolicyUnmet, yes_count) below t_e valid YES endorsements from the
// action's endorser set; Error(DigestDivergence) if those disagree.
Transaction collect(const Transaction& tx, std::span<const Endorsement> endorsements,
                    const LedgerContext& ctx, SigCache* cache = nullptr);

// Read path, bypasses ordering. Error(AclDenied) / Error(KeyNotFound).
VersionedValue query(const WorldState& state, const DeviceCredential& credential,
                     std::string_view key, const EndorsementPolicy& policy);

// Unsigned, sealed block on top of (height, prev_hash).
Block make_block(std::uint64_t height, const Digest& prev_hash, std::uint32_t proposer,
                 const LedgerContext& ctx, std::vector<Transaction> txs,
                 std::vector<DeviceCredential> credentials = {});

// Aggregates the given OSNs' signatures over the block hash.
void sign_block(Block& block, std::span<const std::pair<std::uint32_t, SecretKey>> osn_signers,
                const LedgerContext& ctx);

class Ledger {
 public:
  // Verifies and commits the genesis block (height 0, zero prev_hash).
  Ledger(LedgerContext ctx, Block genesis, SigCache* cache = nullptr);

  const LedgerContext& context() const { return ctx_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::uint64_t height() const { return blocks_.size() - 1; }
  const Digest& head_hash() const { return blocks_.back().block_hash; }
  const WorldState& state() const { return state_; }
  const DeviceDirectory& devices() const { return devices_; }
  bool has_tx(const Digest& tx_id) const { return tx_ids_.contains(std::string(tx_id.begin(), tx_id.end())); }

  // Error(BrokenChain) if the block does not extend the head.
  std::vector<Validity> validate_block(const Block& block) const;

  // Error(BrokenChain), Error(QuorumInvalid), Error(CredentialInvalid),
  // Error(DuplicateDevice). Overwrites block.flags with the computed ones.
  const Block& commit_block(Block block);

 private:
  void check_header(const Block& block) const;
  void check_quorum(const Block& block) const;
  DeviceDirectory admit_credentials(const Block& block) const;
  std::vector<Validity> compute_flags(const Block& block, const DeviceDirectory& devices) const;

  LedgerContext ctx_;
  Digest ctx_digest_{};
  std::vector<Block> blocks_;
  WorldState state_;
  DeviceDirectory devices_;
  std::unordered_set<std::string> tx_ids_;
  SigCache* cache_;
};

// Genesis block signed by the given OSN quorum.
Block make_genesis(const LedgerContext& ctx, std::vector<DeviceCredential> credentials,
                   std::span<const std::pair<std::uint32_t, SecretKey>> osn_signers);

// File: magic "CPSLEDG1", u32-length-prefixed context, u32 block count,
// then u32-length-prefixed blocks.
struct LedgerFile {
  LedgerContext context;
  std::vector<Block> blocks;
};

Bytes export_ledger(const Ledger& ledger);
// Error(DecodeError) on any malformed input.
LedgerFile import_ledger(ByteView bytes);

// Replays the whole chain: links, merkle roots, hashes, signatures,
// credentials, and the stored validity flags.
bool verify_chain(const LedgerFile& file, SigCache* cache = nullptr);

}  // namespace cpsec::ledger
