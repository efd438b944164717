// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "cpsec/error.hpp"
#include "cpsec/ordering.hpp"

using namespace cpsec;
using namespace cpsec::ordering;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidParams;
}

// Envelope stand-ins: the queue and the engines only look at tx_id.
ledger::Transaction fake_tx(int i) {
  ledger::Transaction t;
  t.body.device_id = to_bytes("dev");
  t.body.timestamp = static_cast<std::uint64_t>(i);
  t.body.key = "k" + std::to_string(i);
  t.body.value = ledger::Value{to_bytes("v")};
  t.tx_id = t.body.id();
  return t;
}

ConsensusConfig pbft(std::size_t n, std::size_t f) {
  ConsensusConfig c;
  c.mode = Mode::Pbft;
  c.n = n;
  c.f = f;
  return c;
}

ConsensusConfig cft(std::size_t n, std::size_t f) {
  ConsensusConfig c;
  c.mode = Mode::Cft;
  c.n = n;
  c.f = f;
  return c;
}

std::vector<Bytes> proposals(std::size_t n, std::uint64_t height = 1) {
  std::vector<Bytes> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    Batch b{height, i, {fake_tx(static_cast<int>(height * 100 + i)), fake_tx(1)}};
    out.push_back(b.encode());
  }
  return out;
}

// Honest nodes accept only well-formed batches proposed by some node.
Validator batch_validator(std::span<const Bytes> props) {
  std::vector<Bytes> known(props.begin(), props.end());
  return [known](ByteView p) {
    for (const auto& k : known)
      if (std::equal(k.begin(), k.end(), p.begin(), p.end())) return true;
    return false;
  };
}

TEST(ConsensusConfig, Bounds) {
  EXPECT_NO_THROW(pbft(4, 1).validate());
  EXPECT_NO_THROW(pbft(7, 2).validate());
  EXPECT_EQ(code_of([] { pbft(3, 1).validate(); }), ErrorCode::ConfigInvalid);
  EXPECT_NO_THROW(cft(3, 1).validate());
  EXPECT_EQ(code_of([] { cft(2, 1).validate(); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(pbft(4, 1).quorum(), 3u);
  EXPECT_EQ(pbft(7, 2).quorum(), 5u);
  EXPECT_EQ(pbft(4, 0).quorum(), 3u);
  EXPECT_EQ(cft(3, 1).quorum(), 2u);
  EXPECT_EQ(cft(5, 2).quorum(), 3u);
  EXPECT_EQ(parse_mode("CFT"), Mode::Cft);
  EXPECT_EQ(code_of([] { parse_mode("raft"); }), ErrorCode::ConfigInvalid);
  for (auto k : {FaultKind::Crash, FaultKind::Equivocate, FaultKind::Withhold,
                 FaultKind::CorruptPayload})
    EXPECT_EQ(parse_fault(fault_name(k)), k);
  std::vector<FaultSpec> byz{{0, FaultKind::Withhold, 0}};
  EXPECT_EQ(code_of([&] { validate_faults(cft(3, 1), byz); }), ErrorCode::ConfigInvalid);
  std::vector<FaultSpec> twice{{1, FaultKind::Crash, 0}, {1, FaultKind::Withhold, 0}};
  EXPECT_EQ(code_of([&] { validate_faults(pbft(4, 1), twice); }), ErrorCode::ConfigInvalid);
}

TEST(OsnQueue, SubmitPositions) {
  OsnQueue q(3);
  EXPECT_EQ(q.submit(fake_tx(0), 0), 0u);
  EXPECT_EQ(q.submit(fake_tx(1), 0), 1u);
  EXPECT_EQ(q.submit(fake_tx(0), 5), 0u);
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(q.submit(fake_tx(2), 0), 2u);
  try {
    q.submit(fake_tx(3), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QueueFull);
    EXPECT_EQ(e.value(), 3);
  }
}

TEST(OsnQueue, CutBatch) {
  auto cfg = pbft(4, 1);
  cfg.batch_size = 10;
  cfg.batch_timeout = 50;
  OsnQueue q(100);
  EXPECT_FALSE(q.cut_batch(cfg, 1000));
  for (int i = 0; i < 13; ++i) q.submit(fake_tx(i), 0);
  auto b = q.cut_batch(cfg, 0);
  ASSERT_TRUE(b);
  ASSERT_EQ(b->size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ((*b)[i].tx_id, fake_tx(i).tx_id);
  EXPECT_FALSE(q.cut_batch(cfg, 49));
  EXPECT_EQ(q.next_deadline(cfg), 50u);
  auto rest = q.cut_batch(cfg, 50);
  ASSERT_TRUE(rest);
  EXPECT_EQ(rest->size(), 3u);
  EXPECT_EQ((*rest)[0].tx_id, fake_tx(10).tx_id);
  EXPECT_EQ(q.size(), 0u);
}

TEST(Batch, RoundTrip) {
  Batch b{7, 2, {fake_tx(1), fake_tx(2)}};
  auto bytes = b.encode();
  EXPECT_EQ(Batch::decode(bytes), b);
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { Batch::decode(bytes); }), ErrorCode::DecodeError);
}

TEST(SimNetwork, DeterministicOrderAndTrace) {
  auto run = [](std::uint64_t seed) {
    SimNetwork net(4, {1, 9, 0.1}, seed);
    std::ostringstream trace;
    net.set_trace(&trace);
    for (std::uint32_t i = 0; i < 4; ++i) {
      Message m;
      m.type = MsgType::Prepare;
      m.src = i;
      m.digest[0] = static_cast<std::uint8_t>(i);
      net.broadcast(m);
    }
    while (net.next()) {
    }
    return trace.str();
  };
  EXPECT_EQ(run(3), run(3));
  EXPECT_NE(run(3), run(4));
  auto t = run(3);
  EXPECT_NE(t.find(",prepare,"), std::string::npos);
}

TEST(SimNetwork, TieBreakBySendOrder) {
  SimNetwork net(2, {2, 2, 0.0}, 1);
  for (int i = 0; i < 5; ++i) {
    Message m;
    m.src = 0;
    m.dst = 1;
    m.type = MsgType::Gossip;
    m.view = static_cast<std::uint64_t>(i);
    net.send(m);
  }
  for (std::uint64_t i = 0; i < 5; ++i) {
    auto m = net.next();
    ASSERT_TRUE(m);
    EXPECT_EQ(m->view, i);
    EXPECT_EQ(net.now(), 2u);
  }
}

TEST(SimNetwork, PartitionAndCrash) {
  SimNetwork net(3, {1, 1, 0.0}, 1);
  net.partition({{2}});
  EXPECT_FALSE(net.reachable(0, 2));
  EXPECT_TRUE(net.reachable(0, 1));
  Message m;
  m.type = MsgType::Gossip;
  net.broadcast(m);
  std::vector<std::uint32_t> got;
  while (auto x = net.next()) got.push_back(x->dst);
  EXPECT_EQ(got, (std::vector<std::uint32_t>{0, 1}));
  net.heal();
  net.crash_at(1, 0);
  net.broadcast(m);
  got.clear();
  while (auto x = net.next()) got.push_back(x->dst);
  EXPECT_EQ(got, (std::vector<std::uint32_t>{0, 2}));
}

TEST(Pbft, AllHonestDecideInOneRound) {
  auto cfg = pbft(4, 1);
  auto props = proposals(4);
  SimNetwork net(4, {1, 5, 0.0}, 9);
  auto r = run_pbft(cfg, props, net, {}, batch_validator(props), 1);
  ASSERT_EQ(r.status, Status::Decided);
  EXPECT_EQ(r.decided(), 4u);
  EXPECT_TRUE(r.agreement());
  EXPECT_EQ(r.view_changes, 0u);
  for (const auto& d : r.decisions) {
    EXPECT_EQ(d->view, 0u);
    EXPECT_EQ(*d->payload, props[cfg.leader]);
  }
}

TEST(Pbft, EquivocatingLeaderTriggersViewChange) {
  auto cfg = pbft(4, 1);
  auto props = proposals(4);
  std::vector<FaultSpec> faults{{0, FaultKind::Equivocate, 0}};
  SimNetwork net(4, {1, 5, 0.0}, 2);
  auto r = run_pbft(cfg, props, net, faults, batch_validator(props), 1);
  ASSERT_EQ(r.status, Status::Decided);
  EXPECT_GE(r.view_changes, 1u);
  EXPECT_TRUE(r.agreement());
  EXPECT_FALSE(r.decisions[0]);
  EXPECT_EQ(r.decided(), 3u);
  for (std::uint32_t i = 1; i < 4; ++i) EXPECT_EQ(*r.decisions[i]->payload, props[1]);
}

TEST(Pbft, WithholdingAndCorruptLeaders) {
  for (auto kind : {FaultKind::Withhold, FaultKind::CorruptPayload}) {
    auto cfg = pbft(4, 1);
    auto props = proposals(4);
    std::vector<FaultSpec> faults{{0, kind, 0}};
    SimNetwork net(4, {1, 5, 0.0}, 5);
    auto r = run_pbft(cfg, props, net, faults, batch_validator(props), 1);
    ASSERT_EQ(r.status, Status::Decided) << fault_name(kind);
    EXPECT_GE(r.view_changes, 1u);
    EXPECT_TRUE(r.agreement());
    EXPECT_EQ(*r.decisions[2]->payload, props[1]);
  }
}

TEST(Pbft, CrashedReplicaTolerated) {
  auto cfg = pbft(4, 1);
  auto props = proposals(4);
  std::vector<FaultSpec> faults{{3, FaultKind::Crash, 0}};
  SimNetwork net(4, {1, 5, 0.0}, 5);
  auto r = run_pbft(cfg, props, net, faults, batch_validator(props), 1);
  ASSERT_EQ(r.status, Status::Decided);
  EXPECT_EQ(r.decided(), 3u);
  EXPECT_EQ(r.view_changes, 0u);
}

TEST(Pbft, TooManyByzantineLosesLivenessNotSafety) {
  std::size_t stalled = 0;
  const FaultKind kinds[] = {FaultKind::Equivocate, FaultKind::Withhold, FaultKind::CorruptPayload};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto cfg = pbft(4, 1);
    cfg.max_view_changes = 4;
    auto props = proposals(4);
    DetRng rng(seed);
    std::uint32_t a = static_cast<std::uint32_t>(rng.uniform(0, 3));
    std::uint32_t b = (a + 1 + static_cast<std::uint32_t>(rng.uniform(0, 2))) % 4;
    std::vector<FaultSpec> faults{{a, kinds[rng.uniform(0, 2)], 0}, {b, kinds[rng.uniform(0, 2)], 0}};
    SimNetwork net(4, {1, 6, 0.0}, seed);
    auto r = run_pbft(cfg, props, net, faults, {}, 1, seed);
    EXPECT_TRUE(r.agreement()) << "seed " << seed;
    if (r.status != Status::Decided) ++stalled;
  }
  EXPECT_GT(stalled, 0u);
}

TEST(Pbft, NoProgressReported) {
  auto cfg = pbft(4, 1);
  cfg.max_view_changes = 3;
  auto props = proposals(4);
  std::vector<FaultSpec> faults{{1, FaultKind::Withhold, 0}, {2, FaultKind::Withhold, 0}};
  SimNetwork net(4, {1, 3, 0.0}, 1);
  auto r = run_pbft(cfg, props, net, faults, {}, 1);
  EXPECT_EQ(r.status, Status::NoProgress);
  EXPECT_EQ(r.decided(), 0u);
  EXPECT_EQ(code_of([&] { r.expect_decided(); }), ErrorCode::NoProgress);
}

// f byzantine of n = 3f+1, random kinds and positions, random latencies.
TEST(Pbft, AgreementAcrossSeeds) {
  const FaultKind kinds[] = {FaultKind::Equivocate, FaultKind::Withhold, FaultKind::CorruptPayload};
  for (std::size_t n : {4u, 7u}) {
    std::size_t f = (n - 1) / 3;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto cfg = pbft(n, f);
      DetRng rng(seed * 31 + n);
      cfg.leader = static_cast<std::uint32_t>(rng.uniform(0, n - 1));
      std::vector<std::uint32_t> ids(n);
      for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
      rng.shuffle(std::span(ids));
      std::vector<FaultSpec> faults;
      for (std::size_t j = 0; j < f; ++j) faults.push_back({ids[j], kinds[rng.uniform(0, 2)], 0});
      auto props = proposals(n);
      SimNetwork net(n, {1, rng.uniform(1, 12), 0.0}, seed);
      auto r = run_pbft(cfg, props, net, faults, batch_validator(props), 1, seed);
      ASSERT_EQ(r.status, Status::Decided) << "n=" << n << " seed=" << seed;
      ASSERT_TRUE(r.agreement()) << "n=" << n << " seed=" << seed;
      ASSERT_EQ(r.decided(), n - f);
    }
  }
}

TEST(Cft, OneCrashTolerated) {
  auto cfg = cft(3, 1);
  auto props = proposals(3);
  std::vector<FaultSpec> faults{{2, FaultKind::Crash, 0}};
  SimNetwork net(3, {1, 4, 0.0}, 1);
  auto r = run_cft(cfg, props, net, faults, {}, 1);
  ASSERT_EQ(r.status, Status::Decided);
  EXPECT_TRUE(r.decisions[0] && r.decisions[1]);
  EXPECT_FALSE(r.decisions[2]);
  EXPECT_EQ(*r.decisions[1]->payload, props[0]);
}

TEST(Cft, TwoCrashesNoQuorum) {
  auto cfg = cft(3, 1);
  cfg.max_view_changes = 4;
  auto props = proposals(3);
  std::vector<FaultSpec> faults{{0, FaultKind::Crash, 0}, {1, FaultKind::Crash, 0}};
  SimNetwork net(3, {1, 4, 0.0}, 1);
  auto r = run_cft(cfg, props, net, faults, {}, 1);
  EXPECT_EQ(r.status, Status::NoQuorum);
  EXPECT_EQ(r.decided(), 0u);
  EXPECT_EQ(code_of([&] { r.expect_decided(); }), ErrorCode::NoQuorum);
}

TEST(Cft, LeaderCrashSweep) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = cft(3, 1);
    DetRng rng(seed);
    auto props = proposals(3);
    std::vector<FaultSpec> faults{{0, FaultKind::Crash, rng.uniform(0, 12)}};
    SimNetwork net(3, {1, 5, 0.0}, seed);
    auto r = run_cft(cfg, props, net, faults, {}, 1);
    ASSERT_EQ(r.status, Status::Decided) << seed;
    ASSERT_TRUE(r.agreement()) << seed;
    EXPECT_TRUE(r.decisions[1] && r.decisions[2]);
  }
}

TEST(Gossip, EightPeersFanoutTwo) {
  std::size_t worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimNetwork net(8, {}, seed);
    auto g = gossip(static_cast<std::uint32_t>(seed % 8), 2, net, Digest{});
    EXPECT_TRUE(g.all_informed());
    worst = std::max(worst, g.rounds);
  }
  EXPECT_LE(worst, 4u);  // ceil(log2 8) + 1
}

TEST(Gossip, SinglePeer) {
  SimNetwork net(1, {}, 1);
  auto g = gossip(0, 2, net, Digest{});
  EXPECT_TRUE(g.all_informed());
  EXPECT_EQ(g.rounds, 0u);
  EXPECT_EQ(g.messages, 0u);
}

TEST(Gossip, PartitionedPeerStaysUninformed) {
  SimNetwork net(8, {}, 3);
  net.partition({{7}});
  auto g = gossip(0, 2, net, Digest{});
  EXPECT_EQ(g.informed(), 7u);
  EXPECT_FALSE(g.informed_round[7]);
  net.heal();
  auto again = gossip(0, 2, net, Digest{});
  EXPECT_TRUE(again.all_informed());
}

class Replicas : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DeploymentSpec spec;
    spec.peers = 4;
    spec.osns = 4;
    spec.devices = {"sensor-01", "sensor-02"};
    spec.seed = 21;
    dep_ = new Deployment(make_deployment(spec));
    cache_ = new mscrypto::SigCache();
    ledger::WorldState empty;
    for (int i = 0; i < 25; ++i)
      workload_.push_back(dep_->envelope(i % 2, ledger::Action::Update, "key-" + std::to_string(i),
                                         ledger::Value{to_bytes(std::to_string(i))},
                                         static_cast<std::uint64_t>(i + 1), empty, cache_));
  }
  static void TearDownTestSuite() {
    delete dep_;
    delete cache_;
    workload_.clear();
  }
  static inline Deployment* dep_ = nullptr;
  static inline mscrypto::SigCache* cache_ = nullptr;
  static inline std::vector<ledger::Transaction> workload_;
};

TEST_F(Replicas, AntiEntropyTransfersMissingBlocks) {
  auto donor = dep_->new_ledger(cache_);
  for (int h = 1; h <= 9; ++h)
    donor.commit_block(dep_->next_block(donor, {workload_[static_cast<std::size_t>(h)]}));
  auto lagging = dep_->new_ledger(cache_);
  for (int h = 1; h <= 5; ++h) lagging.commit_block(donor.blocks()[static_cast<std::size_t>(h)]);
  EXPECT_EQ(anti_entropy(lagging, donor), 4u);
  EXPECT_EQ(lagging.height(), 9u);
  EXPECT_EQ(lagging.state().digest(), donor.state().digest());
  EXPECT_TRUE(ledger::verify_chain(ledger::import_ledger(ledger::export_ledger(lagging)), cache_));
  EXPECT_EQ(anti_entropy(lagging, donor), 0u);

  auto fork = dep_->new_ledger(cache_);
  fork.commit_block(dep_->next_block(fork, {workload_[20]}));
  EXPECT_EQ(code_of([&] { anti_entropy(fork, donor); }), ErrorCode::DivergentHistory);
}

TEST_F(Replicas, PartitionThenHealThenSync) {
  std::vector<ledger::Ledger> peers(4, dep_->new_ledger(cache_));
  SimNetwork net(4, {}, 8);
  net.partition({{3}});
  for (int h = 1; h <= 3; ++h) {
    auto block = dep_->next_block(peers[0], {workload_[static_cast<std::size_t>(h)]});
    peers[0].commit_block(block);
    auto g = gossip(0, 2, net, block.block_hash);
    for (std::uint32_t p = 1; p < 4; ++p)
      if (g.informed_round[p]) peers[p].commit_block(block);
  }
  EXPECT_EQ(peers[1].height(), 3u);
  EXPECT_EQ(peers[3].height(), 0u);
  net.heal();
  EXPECT_EQ(anti_entropy(peers[3], peers[1]), 3u);
  EXPECT_EQ(peers[3].state().digest(), peers[0].state().digest());
}

TEST_F(Replicas, PbftClusterCommitsIdenticalLedgers) {
  auto cfg = pbft(4, 1);
  cfg.batch_size = 10;
  auto go = [&](std::ostringstream& trace) {
    SimNetwork net(4, {1, 6, 0.0}, 77);
    net.set_trace(&trace);
    return run_cluster(*dep_, cfg, workload_, net, {}, cache_);
  };
  std::ostringstream t1, t2;
  auto a = go(t1);
  auto b = go(t2);
  ASSERT_EQ(a.status, Status::Decided);
  EXPECT_EQ(a.blocks, 3u);
  EXPECT_TRUE(a.agreement());
  for (const auto& inst : a.instances) {
    EXPECT_EQ(inst.view_changes, 0u);
    for (const auto& d : inst.decisions) EXPECT_EQ(d->view, 0u);
  }
  for (const auto& r : a.replicas) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->height(), 3u);
    EXPECT_EQ(r->state().size(), 25u);
  }
  EXPECT_EQ(ledger::export_ledger(*a.replicas[0]), ledger::export_ledger(*b.replicas[0]));
  EXPECT_EQ(t1.str(), t2.str());
  EXPECT_FALSE(t1.str().empty());
}

TEST_F(Replicas, PbftClusterWithByzantineLeader) {
  for (auto kind : {FaultKind::Equivocate, FaultKind::Withhold, FaultKind::CorruptPayload}) {
    auto cfg = pbft(4, 1);
    cfg.batch_size = 10;
    std::vector<FaultSpec> faults{{0, kind, 0}};
    SimNetwork net(4, {1, 6, 0.0}, 5);
    auto run = run_cluster(*dep_, cfg, workload_, net, faults, cache_);
    ASSERT_EQ(run.status, Status::Decided) << fault_name(kind);
    EXPECT_FALSE(run.replicas[0]);
    EXPECT_TRUE(run.agreement());
    EXPECT_EQ(run.replicas[1]->state().size(), 25u);
  }
}

TEST_F(Replicas, CftClusterSurvivesLeaderCrash) {
  DeploymentSpec spec;
  spec.peers = 4;
  spec.osns = 3;
  spec.devices = {"sensor-01"};
  spec.seed = 4;
  auto dep = make_deployment(spec);
  ledger::WorldState empty;
  std::vector<ledger::Transaction> work;
  for (int i = 0; i < 12; ++i)
    work.push_back(dep.envelope(0, ledger::Action::Update, "k" + std::to_string(i),
                                ledger::Value{to_bytes("v")}, static_cast<std::uint64_t>(i + 1),
                                empty, cache_));
  auto cfg = cft(3, 1);
  cfg.batch_size = 4;
  for (std::uint64_t crash_tick : {0u, 3u, 20u, 60u}) {
    std::vector<FaultSpec> faults{{0, FaultKind::Crash, crash_tick}};
    SimNetwork net(3, {1, 5, 0.0}, crash_tick);
    auto run = run_cluster(dep, cfg, work, net, faults, cache_);
    ASSERT_EQ(run.status, Status::Decided) << crash_tick;
    EXPECT_TRUE(run.agreement());
    EXPECT_EQ(run.replicas[0].has_value(), crash_tick > run.instances.back().end_tick) << crash_tick;
    for (std::uint32_t i = 1; i < 3; ++i) {
      EXPECT_EQ(run.replicas[i]->height(), 3u);
      EXPECT_EQ(run.replicas[i]->state().size(), 12u);
    }
  }
  std::vector<FaultSpec> two{{0, FaultKind::Crash, 0}, {1, FaultKind::Crash, 0}};
  SimNetwork net(3, {1, 5, 0.0}, 1);
  cfg.max_view_changes = 4;
  auto run = run_cluster(dep, cfg, work, net, two, cache_);
  EXPECT_EQ(run.status, Status::NoQuorum);
  EXPECT_TRUE(run.agreement());
}

}  // namespace
