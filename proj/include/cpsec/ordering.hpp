// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Ordering service over a deterministic discrete-tick network: bounded OSN
// queues, batch cutting, a three-phase byzantine agreement engine with view
// change, a leader/follower crash-tolerant engine, gossip dissemination and
// anti-entropy between ledger replicas.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "cpsec/deployment.hpp"
#include "cpsec/ledger.hpp"
#include "cpsec/rng.hpp"

namespace cpsec::ordering {

enum class Mode : std::uint8_t { Pbft, Cft };

std::string_view mode_name(Mode m);
// Error(ConfigInvalid) on an unknown name.
Mode parse_mode(std::string_view name);

struct ConsensusConfig {
  Mode mode = Mode::Pbft;
  std::size_t n = 4;
  std::size_t f = 1;
  std::size_t batch_size = 10;
  std::uint64_t batch_timeout = 50;  // ticks
  std::uint32_t leader = 0;          // leader of view (term) 0
  std::uint64_t view_timeout = 40;   // ticks, doubled on every view change
  std::size_t max_view_changes = 8;
  std::size_t queue_capacity = 1024;

  // Error(ConfigInvalid): PBFT needs n >= 3f+1, CFT n >= 2f+1.
  void validate() const;
  // PBFT: ceil((n+f+1)/2), i.e. 2f+1 at n = 3f+1. CFT: majority.
  std::size_t quorum() const;
  std::uint32_t leader_of(std::uint64_t view) const {
    return static_cast<std::uint32_t>((leader + view) % n);
  }
  std::uint64_t timeout_for(std::uint64_t view) const {
    return view_timeout << std::min<std::uint64_t>(view, 20);
  }
};

enum class FaultKind : std::uint8_t { Crash, Equivocate, Withhold, CorruptPayload };

std::string_view fault_name(FaultKind k);
// Error(ConfigInvalid) on an unknown name.
FaultKind parse_fault(std::string_view name);

struct FaultSpec {
  std::uint32_t node = 0;
  FaultKind kind = FaultKind::Crash;
  std::uint64_t at_tick = 0;  // Crash only

  bool byzantine() const { return kind != FaultKind::Crash; }
};

// Error(ConfigInvalid) for out-of-range nodes, duplicate nodes, or byzantine
// kinds under CFT.
void validate_faults(const ConsensusConfig& cfg, std::span<const FaultSpec> faults);

// Batch of envelopes proposed for one height.
struct Batch {
  std::uint64_t height = 0;
  std::uint32_t proposer = 0;
  std::vector<ledger::Transaction> txs;

  bool operator==(const Batch&) const = default;
  Bytes encode() const;
  // Error(DecodeError).
  static Batch decode(ByteView bytes);
};

class OsnQueue {
 public:
  explicit OsnQueue(std::size_t capacity) : capacity_(capacity) {}

  // FIFO position of the envelope. A tx_id already queued returns its
  // current position. Error(QueueFull) at capacity.
  std::size_t submit(const ledger::Transaction& envelope, std::uint64_t now);

  // Cuts up to batch_size envelopes once batch_size are queued or the oldest
  // has waited batch_timeout ticks.
  std::optional<std::vector<ledger::Transaction>> cut_batch(const ConsensusConfig& cfg,
                                                            std::uint64_t now);
  // Tick at which the oldest envelope times out, if any are queued.
  std::optional<std::uint64_t> next_deadline(const ConsensusConfig& cfg) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  struct Entry {
    ledger::Transaction tx;
    std::uint64_t arrived;
  };
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

enum class MsgType : std::uint8_t {
  PrePrepare,
  Prepare,
  Commit,
  ViewChange,
  NewView,
  Append,
  AppendAck,
  VoteRequest,
  Vote,
  Decide,
  Gossip,
  Timer,
};

std::string_view msg_name(MsgType t);

using Payload = std::shared_ptr<const Bytes>;

struct SignedVote {
  std::uint32_t signer = 0;
  Digest tag{};
};

// Highest prepared (PBFT) or accepted (CFT) value a node reports.
struct Certificate {
  std::uint64_t view = 0;
  Digest digest{};
  Payload payload;
  std::vector<SignedVote> prepares;  // empty under CFT
};

struct Message {
  MsgType type = MsgType::Timer;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint64_t height = 0;
  std::uint64_t view = 0;  // view or term
  Digest digest{};
  Payload payload;
  Digest tag{};
  std::optional<Certificate> cert;
  std::vector<Message> proofs;  // NewView: the view changes it rests on
};

struct LinkProfile {
  std::uint64_t min_latency = 1;
  std::uint64_t max_latency = 4;
  double drop = 0.0;
};

// Event queue ordered by (deliver tick, send sequence). Partitions apply at
// send time; a crashed node neither sends nor receives.
class SimNetwork {
 public:
  SimNetwork(std::size_t nodes, LinkProfile link, std::uint64_t seed);

  std::size_t nodes() const { return nodes_; }
  std::uint64_t now() const { return now_; }
  DetRng& rng() { return rng_; }

  void send(Message m);
  // To every node, sender included.
  void broadcast(const Message& m);
  void set_timer(std::uint32_t node, std::uint64_t delay, std::uint64_t height, std::uint64_t view);
  std::optional<Message> next();
  bool idle() const { return queue_.empty(); }
  // Drops everything in flight.
  void purge() { queue_.clear(); }
  void advance_to(std::uint64_t tick) { now_ = std::max(now_, tick); }

  void crash_at(std::uint32_t node, std::uint64_t tick);
  bool is_down(std::uint32_t node) const;
  void partition(const std::vector<std::vector<std::uint32_t>>& groups);
  void heal();
  bool reachable(std::uint32_t a, std::uint32_t b) const;
  // Drop roll for one transmission on a reachable link.
  bool lost();

  void set_trace(std::ostream* out) { trace_ = out; }
  void trace(std::uint64_t tick, std::uint32_t src, std::uint32_t dst, MsgType type,
             const Digest& digest);

  std::size_t sent() const { return sent_; }
  std::size_t delivered() const { return delivered_; }
  std::size_t dropped() const { return dropped_; }

 private:
  std::size_t nodes_;
  LinkProfile link_;
  DetRng rng_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, Message> queue_;
  std::vector<std::uint64_t> crash_tick_;
  std::vector<std::uint32_t> group_;  // partition id per node
  std::ostream* trace_ = nullptr;
  std::size_t sent_ = 0, delivered_ = 0, dropped_ = 0;
};

// Stands in for per-node signatures on votes: tags are keyed by a secret
// only the simulator and the node hold, so byzantine nodes cannot forge
// honest votes. Checking uses the simulator's key table.
class Authenticator {
 public:
  Authenticator(std::size_t nodes, std::uint64_t seed);
  Digest tag(std::uint32_t node, MsgType type, std::uint64_t height, std::uint64_t view,
             const Digest& digest) const;
  bool check(std::uint32_t node, MsgType type, std::uint64_t height, std::uint64_t view,
             const Digest& digest, const Digest& tag) const;

 private:
  std::vector<Bytes> keys_;
};

enum class Status : std::uint8_t { Decided, NoProgress, NoQuorum };

std::string_view status_name(Status s);

struct Decision {
  std::uint64_t tick = 0;
  std::uint64_t view = 0;
  Digest digest{};
  Payload payload;
};

struct InstanceResult {
  Status status = Status::NoProgress;
  std::vector<std::optional<Decision>> decisions;  // per node; faulty nodes stay empty
  std::uint64_t view_changes = 0;                  // highest view (term) reached
  std::uint64_t start_tick = 0;
  std::uint64_t end_tick = 0;

  // No two recorded decisions differ.
  bool agreement() const;
  std::size_t decided() const;
  // Error(NoProgress) / Error(NoQuorum) unless Decided.
  void expect_decided() const;
};

// Honest nodes refuse to vote for payloads the validator rejects.
using Validator = std::function<bool(ByteView payload)>;

// One agreement instance. proposals[i] is what node i proposes when it leads.
// Error(ConfigInvalid) on bad config or faults.
InstanceResult run_pbft(const ConsensusConfig& cfg, std::span<const Bytes> proposals,
                        SimNetwork& net, std::span<const FaultSpec> faults,
                        const Validator& validator = {}, std::uint64_t height = 0,
                        std::uint64_t auth_seed = 0);

InstanceResult run_cft(const ConsensusConfig& cfg, std::span<const Bytes> proposals,
                       SimNetwork& net, std::span<const FaultSpec> faults,
                       const Validator& validator = {}, std::uint64_t height = 0);

struct GossipResult {
  std::vector<std::optional<std::size_t>> informed_round;  // per peer
  std::size_t rounds = 0;
  std::size_t messages = 0;

  std::size_t informed() const;
  bool all_informed() const { return informed() == informed_round.size(); }
};

// Push gossip in synchronous rounds: each informed peer forwards to `fanout`
// random peers not yet informed. Stops once every peer reachable from an
// informed one has the block, or after max_rounds.
GossipResult gossip(std::uint32_t origin, std::size_t fanout, SimNetwork& net, const Digest& block,
                    std::size_t max_rounds = 64);

// Ships the donor's blocks above the lagging replica's height and commits
// them. Returns the number transferred. Error(DivergentHistory) if the
// shared prefix differs.
std::size_t anti_entropy(ledger::Ledger& lagging, const ledger::Ledger& donor);

struct ClusterRun {
  Status status = Status::Decided;
  std::vector<std::optional<ledger::Ledger>> replicas;  // per OSN; faulty ones empty
  std::vector<InstanceResult> instances;
  std::size_t blocks = 0;

  // Every replica holds byte-identical exports.
  bool agreement() const;
};

// Orders the whole workload through the cluster, one agreement instance per
// cut batch. Every honest OSN keeps a ledger replica and commits each
// decided block at its decision tick. The deployment's OSN roster must have
// cfg.n members.
ClusterRun run_cluster(const Deployment& d, const ConsensusConfig& cfg,
                       std::span<const ledger::Transaction> workload, SimNetwork& net,
                       std::span<const FaultSpec> faults, mscrypto::SigCache* cache = nullptr);

}  // namespace cpsec::ordering
