// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "cpsec/deployment.hpp"
#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/ledger.hpp"
#include "ledger_oracle.hpp"

using namespace cpsec;
using namespace cpsec::ledger;

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

class LedgerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DeploymentSpec spec;
    spec.peers = 4;
    spec.osns = 4;
    spec.t_e = 2;
    spec.devices = {"sensor-01", "sensor-02", "reader", "mute"};
    spec.acl["reader"] = {Action::Access};
    spec.acl["mute"] = {};
    spec.seed = 11;
    dep_ = new Deployment(make_deployment(spec));
    cache_ = new SigCache();
  }
  static void TearDownTestSuite() {
    delete dep_;
    delete cache_;
  }

  static const Deployment& d() { return *dep_; }
  static SigCache* cache() { return cache_; }
  static const registry::FinalizedDevice& dev(std::size_t i) { return dep_->devices[i]; }

  static DeviceDirectory directory() {
    DeviceDirectory out;
    for (const auto& x : dep_->devices) out.emplace(x.credential.device_id, x.credential);
    return out;
  }

  static Transaction proposal(std::size_t device, Action a, std::string key, Value v,
                              std::uint64_t clock = 1) {
    return propose(dev(device).credential, dev(device).sk_full, a, std::move(key), std::move(v),
                   clock, d().params);
  }

  static Value bytes_value(std::string_view s) { return Value{to_bytes(s)}; }

  static inline Deployment* dep_ = nullptr;
  static inline SigCache* cache_ = nullptr;
};

TEST_F(LedgerTest, ProposeUpdateIsSignedByDevice) {
  auto tx = proposal(0, Action::Update, "temp", bytes_value("21.5"));
  EXPECT_EQ(tx.tx_id, tx.body.id());
  EXPECT_TRUE(mscrypto::verify(dev(0).credential.pk_full, device_message(tx.tx_id), tx.device_sig,
                               d().params));
  EXPECT_FALSE(tx.endorsement.has_value());
  EXPECT_TRUE(tx.rw.reads.empty());
}

TEST_F(LedgerTest, ProposeRejectsValueMismatch) {
  EXPECT_EQ(code_of([] { proposal(0, Action::Access, "temp", bytes_value("x")); }),
            ErrorCode::InvalidAction);
  EXPECT_EQ(code_of([] { proposal(0, Action::Update, "temp", {}); }), ErrorCode::InvalidAction);
  EXPECT_EQ(code_of([] { proposal(0, Action::Store, "temp", bytes_value("x")); }),
            ErrorCode::InvalidAction);
  EXPECT_EQ(code_of([] { proposal(0, Action::Update, "", bytes_value("x")); }),
            ErrorCode::InvalidAction);
  EXPECT_EQ(code_of([] { proposal(0, static_cast<Action>(9), "k", {}); }), ErrorCode::InvalidAction);
}

TEST_F(LedgerTest, ProposeRejectsForeignKey) {
  EXPECT_EQ(code_of([] {
              propose(dev(0).credential, dev(1).sk_full, Action::Update, "k", bytes_value("v"), 1,
                      d().params);
            }),
            ErrorCode::CredentialInvalid);
}

TEST_F(LedgerTest, SameBodySameId) {
  auto a = proposal(0, Action::Update, "temp", bytes_value("21.5"), 7);
  auto b = proposal(0, Action::Update, "temp", bytes_value("21.5"), 7);
  auto c = proposal(0, Action::Update, "temp", bytes_value("21.5"), 8);
  EXPECT_EQ(a.tx_id, b.tx_id);
  EXPECT_NE(a.tx_id, c.tx_id);
}

TEST_F(LedgerTest, ActionNames) {
  for (auto a : {Action::Update, Action::Store, Action::Access})
    EXPECT_EQ(parse_action(action_name(a)), a);
  EXPECT_EQ(code_of([] { parse_action("Delete"); }), ErrorCode::InvalidAction);
}

TEST_F(LedgerTest, EndorseYesForPermittedDevice) {
  WorldState state;
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  auto e = endorse(d().endorsers[0], tx, state, directory(), d().ctx, cache());
  EXPECT_EQ(e.verdict, Verdict::Yes);
  EXPECT_EQ(e.reason, Reason::None);
  ASSERT_EQ(e.rw.reads.size(), 1u);
  EXPECT_EQ(e.rw.reads[0], (ReadEntry{"temp", 0}));
  ASSERT_EQ(e.rw.writes.size(), 1u);
  EXPECT_EQ(e.rw.writes[0], (WriteEntry{"temp", bytes_value("1")}));
  EXPECT_EQ(e.response_digest, e.rw.digest(tx.tx_id));
  EXPECT_TRUE(mscrypto::verify(d().ctx.peer_roster[0],
                               endorsement_message(tx.tx_id, e.verdict, e.reason, e.response_digest),
                               e.sig, d().params));
}

TEST_F(LedgerTest, EndorseNoReasons) {
  WorldState state;
  auto dir = directory();
  auto acl = proposal(3, Action::Update, "temp", bytes_value("1"));
  auto e = endorse(d().endorsers[1], acl, state, dir, d().ctx, cache());
  EXPECT_EQ(e.verdict, Verdict::No);
  EXPECT_EQ(e.reason, Reason::AclDenied);

  auto missing = proposal(2, Action::Access, "nothing-here", {});
  e = endorse(d().endorsers[1], missing, state, dir, d().ctx, cache());
  EXPECT_EQ(e.reason, Reason::KeyNotFound);

  auto unknown = proposal(0, Action::Update, "temp", bytes_value("1"));
  DeviceDirectory empty;
  e = endorse(d().endorsers[1], unknown, state, empty, d().ctx, cache());
  EXPECT_EQ(e.reason, Reason::UnknownDevice);

  auto tampered = unknown;
  tampered.body.key = "other";
  e = endorse(d().endorsers[1], tampered, state, dir, d().ctx, cache());
  EXPECT_EQ(e.reason, Reason::BadSignature);
  EXPECT_TRUE(mscrypto::verify(d().ctx.peer_roster[1],
                               endorsement_message(tampered.tx_id, e.verdict, e.reason,
                                                   e.response_digest),
                               e.sig, d().params));
}

TEST_F(LedgerTest, EndorseRejectsEveryFlippedSignatureByte) {
  WorldState state;
  auto dir = directory();
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  Writer w;
  tx.encode(w);
  auto encoded = w.data();
  auto sig = tx.device_sig.point.compress();
  auto at = std::search(encoded.begin(), encoded.end(), sig.begin(), sig.end()) - encoded.begin();
  ASSERT_LT(static_cast<std::size_t>(at), encoded.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    Bytes bad(encoded.begin(), encoded.end());
    bad[at + i] ^= 0x01;
    Reader r(bad);
    std::optional<Transaction> t;
    try {
      t = Transaction::decode(r);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DecodeError);
      continue;
    }
    EXPECT_EQ(endorse(d().endorsers[0], *t, state, dir, d().ctx, cache()).reason,
              Reason::BadSignature)
        << "byte " << i;
  }
  // A well-formed signature from another device.
  auto other = proposal(1, Action::Update, "temp", bytes_value("1"));
  auto t = tx;
  t.device_sig = mscrypto::sign(dev(1).sk_full, device_message(tx.tx_id), d().params);
  EXPECT_EQ(endorse(d().endorsers[0], t, state, dir, d().ctx, cache()).reason,
            Reason::BadSignature);
  EXPECT_EQ(endorse(d().endorsers[0], other, state, dir, d().ctx, cache()).verdict, Verdict::Yes);
}

TEST_F(LedgerTest, CollectAssemblesEnvelope) {
  WorldState state;
  auto dir = directory();
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  std::vector<Endorsement> es;
  for (int i = 0; i < 3; ++i) es.push_back(endorse(d().endorsers[i], tx, state, dir, d().ctx, cache()));
  auto env = collect(tx, es, d().ctx, cache());
  ASSERT_TRUE(env.endorsement);
  EXPECT_EQ(env.endorsement->signers.count(), 3u);
  EXPECT_EQ(env.endorsement->signers.size(), 4u);
  EXPECT_EQ(env.rw, es[0].rw);
  auto msg = endorsement_message(tx.tx_id, Verdict::Yes, Reason::None, env.rw.digest(tx.tx_id));
  EXPECT_TRUE(mscrypto::verify_multisig(d().ctx.peer_roster, *env.endorsement, msg, d().params));
}

TEST_F(LedgerTest, CollectPolicyUnmet) {
  WorldState state;
  auto dir = directory();
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  std::vector<Endorsement> es{endorse(d().endorsers[0], tx, state, dir, d().ctx, cache())};
  DeviceDirectory empty;
  es.push_back(endorse(d().endorsers[1], tx, state, empty, d().ctx, cache()));
  es.push_back(endorse(d().endorsers[2], tx, state, empty, d().ctx, cache()));
  try {
    collect(tx, es, d().ctx, cache());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PolicyUnmet);
    EXPECT_EQ(e.value(), 1);
  }
}

TEST_F(LedgerTest, CollectIgnoresDuplicatesAndForgeries) {
  WorldState state;
  auto dir = directory();
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  auto e0 = endorse(d().endorsers[0], tx, state, dir, d().ctx, cache());
  // Peer 1's slot signed with peer 0's key.
  auto forged = endorse(Endorser{1, d().endorsers[0].sk}, tx, state, dir, d().ctx, cache());
  std::vector<Endorsement> es{e0, e0, forged};
  EXPECT_EQ(code_of([&] { collect(tx, es, d().ctx, cache()); }), ErrorCode::PolicyUnmet);
  auto swapped = endorse(d().endorsers[1], tx, state, dir, d().ctx, cache());
  swapped.rw.writes[0].value = bytes_value("2");
  es = {e0, swapped};
  EXPECT_EQ(code_of([&] { collect(tx, es, d().ctx, cache()); }), ErrorCode::PolicyUnmet);
}

TEST_F(LedgerTest, CollectDigestDivergence) {
  WorldState a, b;
  b.put("temp", bytes_value("0"));
  auto dir = directory();
  auto tx = proposal(0, Action::Update, "temp", bytes_value("1"));
  std::vector<Endorsement> es{endorse(d().endorsers[0], tx, a, dir, d().ctx, cache()),
                              endorse(d().endorsers[1], tx, b, dir, d().ctx, cache())};
  EXPECT_EQ(code_of([&] { collect(tx, es, d().ctx, cache()); }), ErrorCode::DigestDivergence);
}

// Every subset of YES endorsers, n <= 5 and every t_e.
TEST(LedgerPolicy, ExhaustiveEndorsementSoundness) {
  SigCache cache;
  for (std::size_t n = 1; n <= 5; ++n) {
    DeploymentSpec spec;
    spec.peers = n;
    spec.osns = 1;
    spec.t_e = 1;
    spec.seed = 100 + n;
    auto dep = make_deployment(spec);
    DeviceDirectory dir{{dep.devices[0].credential.device_id, dep.devices[0].credential}};
    auto tx = propose(dep.devices[0].credential, dep.devices[0].sk_full, Action::Update, "k",
                      Value{to_bytes("v")}, 1, dep.params);
    WorldState state;
    std::vector<Endorsement> yes;
    for (std::size_t i = 0; i < n; ++i)
      yes.push_back(endorse(dep.endorsers[i], tx, state, dir, dep.ctx, &cache));
    for (std::size_t t_e = 1; t_e <= n; ++t_e) {
      auto ctx = dep.ctx;
      ctx.policy.t_e = t_e;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<Endorsement> es;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1u << i)) es.push_back(yes[i]);
        auto k = static_cast<std::size_t>(std::popcount(mask));
        if (k >= t_e) {
          auto env = collect(tx, es, ctx, &cache);
          EXPECT_EQ(env.endorsement->signers.count(), k);
        } else {
          EXPECT_EQ(code_of([&] { collect(tx, es, ctx, &cache); }), ErrorCode::PolicyUnmet)
              << "n=" << n << " t_e=" << t_e << " mask=" << mask;
        }
      }
    }
  }
}

TEST_F(LedgerTest, QueryReadPath) {
  WorldState state;
  EXPECT_EQ(code_of([&] { query(state, dev(0).credential, "temp", d().ctx.policy); }),
            ErrorCode::KeyNotFound);
  for (int k = 1; k <= 5; ++k) {
    state.put("temp", bytes_value(std::to_string(k)));
    auto v = query(state, dev(2).credential, "temp", d().ctx.policy);
    EXPECT_EQ(v.version, static_cast<std::uint64_t>(k));
    EXPECT_EQ(v.value, bytes_value(std::to_string(k)));
  }
  EXPECT_EQ(code_of([&] { query(state, dev(3).credential, "temp", d().ctx.policy); }),
            ErrorCode::AclDenied);
}

TEST_F(LedgerTest, GenesisRecordsDevices) {
  auto l = d().new_ledger(cache());
  EXPECT_EQ(l.height(), 0u);
  EXPECT_EQ(l.devices().size(), 4u);
  EXPECT_EQ(l.state().size(), 0u);
  EXPECT_EQ(l.blocks()[0].credentials.size(), 4u);
  EXPECT_EQ(l.blocks()[0].config_digest, d().ctx.digest());
}

TEST_F(LedgerTest, ValidateBlockSecondReaderOfSameVersionConflicts) {
  auto l = d().new_ledger(cache());
  for (int i = 0; i < 3; ++i)
    l.commit_block(d().next_block(
        l, {d().envelope(0, Action::Update, "temp", bytes_value(std::to_string(i)), 10 + i,
                         l.state(), cache())}));
  ASSERT_EQ(l.state().version("temp"), 3u);
  auto a = d().envelope(0, Action::Update, "temp", bytes_value("a"), 20, l.state(), cache());
  auto b = d().envelope(1, Action::Update, "temp", bytes_value("b"), 21, l.state(), cache());
  EXPECT_EQ(a.rw.reads[0].version, 3u);
  EXPECT_EQ(b.rw.reads[0].version, 3u);
  auto block = d().next_block(l, {a, b});
  EXPECT_EQ(l.validate_block(block), (std::vector{Validity::Valid, Validity::MvccConflict}));
  const auto& c = l.commit_block(block);
  EXPECT_EQ(c.flags, (std::vector{Validity::Valid, Validity::MvccConflict}));
  EXPECT_EQ(l.state().get("temp")->value, bytes_value("a"));
  EXPECT_EQ(l.state().version("temp"), 4u);
}

TEST_F(LedgerTest, EmptyBlockCommits) {
  auto l = d().new_ledger(cache());
  auto before = l.state().digest();
  auto block = d().next_block(l, {});
  EXPECT_TRUE(l.validate_block(block).empty());
  l.commit_block(block);
  EXPECT_EQ(l.height(), 1u);
  EXPECT_EQ(l.state().digest(), before);
}

TEST_F(LedgerTest, CommitRejectsStaleParent) {
  auto l = d().new_ledger(cache());
  auto first = d().next_block(l, {});
  l.commit_block(first);
  EXPECT_EQ(code_of([&] { l.commit_block(first); }), ErrorCode::BrokenChain);
  auto wrong = make_block(2, first.prev_hash, 0, d().ctx, {});
  EXPECT_EQ(code_of([&] { l.commit_block(wrong); }), ErrorCode::BrokenChain);
}

TEST_F(LedgerTest, CommitRequiresOsnQuorum) {
  auto l = d().new_ledger(cache());
  ASSERT_EQ(d().ctx.commit_quorum, 3u);
  auto b = make_block(1, l.head_hash(), 0, d().ctx, {});
  std::span<const std::pair<std::uint32_t, SecretKey>> keys(d().osn_keys);
  sign_block(b, keys.first(2), d().ctx);
  EXPECT_EQ(code_of([&] { l.commit_block(b); }), ErrorCode::QuorumInvalid);
  sign_block(b, keys.first(3), d().ctx);
  b.commit_sigs.signers.set(3);
  EXPECT_EQ(code_of([&] { l.commit_block(b); }), ErrorCode::QuorumInvalid);
  sign_block(b, keys.last(3), d().ctx);
  EXPECT_NO_THROW(l.commit_block(b));
}

TEST_F(LedgerTest, InvalidTransactionsLeaveStateUntouched) {
  auto l = d().new_ledger(cache());
  auto good = d().envelope(0, Action::Update, "temp", bytes_value("ok"), 1, l.state(), cache());

  auto weak = proposal(0, Action::Update, "temp", bytes_value("weak"), 2);
  auto lone = endorse(d().endorsers[0], weak, l.state(), directory(), d().ctx, cache());
  weak.rw = lone.rw;
  mscrypto::SignerBitmap one(4);
  one.set(0);
  weak.endorsement = MultiSignature{lone.sig, one};

  auto bad_read = d().envelope(1, Action::Update, "x", bytes_value("1"), 3, l.state(), cache());
  bad_read.rw.reads[0].version = 7;

  auto bad_write = d().envelope(1, Action::Update, "y", bytes_value("1"), 4, l.state(), cache());
  bad_write.rw.writes[0].value = bytes_value("2");

  auto forged = d().envelope(1, Action::Update, "z", bytes_value("1"), 5, l.state(), cache());
  forged.device_sig = good.device_sig;

  WorldState elsewhere;
  elsewhere.put("temp", bytes_value("a"));
  elsewhere.put("temp", bytes_value("b"));
  auto stale = d().envelope(2, Action::Access, "temp", {}, 6, elsewhere, cache());

  auto block = d().next_block(l, {weak, bad_read, bad_write, forged, good, good});
  const auto& c = l.commit_block(block);
  EXPECT_EQ(c.flags, (std::vector{Validity::EndorsementInvalid, Validity::EndorsementInvalid,
                                  Validity::Malformed, Validity::BadDeviceSignature,
                                  Validity::Valid, Validity::DuplicateTx}));
  EXPECT_EQ(l.state().size(), 1u);
  EXPECT_EQ(l.state().get("temp")->value, bytes_value("ok"));
  EXPECT_TRUE(l.has_tx(good.tx_id));

  // Replayed in a later block.
  auto again = d().next_block(l, {good, stale});
  EXPECT_EQ(l.commit_block(again).flags,
            (std::vector{Validity::DuplicateTx, Validity::MvccConflict}));
}

TEST_F(LedgerTest, PolicyViolationAtCommit) {
  auto l = d().new_ledger(cache());
  auto tx = proposal(3, Action::Update, "temp", bytes_value("1"));
  // Endorsers that skipped the ACL check.
  std::vector<Endorsement> es;
  for (int i = 0; i < 2; ++i) {
    Endorsement e;
    e.peer_id = static_cast<std::uint32_t>(i);
    e.verdict = Verdict::Yes;
    e.rw = std::get<RwSet>(simulate(tx.body, l.state()));
    e.response_digest = e.rw.digest(tx.tx_id);
    e.sig = mscrypto::sign(d().endorsers[i].sk,
                           endorsement_message(tx.tx_id, Verdict::Yes, Reason::None,
                                               e.response_digest),
                           d().params);
    es.push_back(e);
  }
  auto env = collect(tx, es, d().ctx, cache());
  EXPECT_EQ(l.commit_block(d().next_block(l, {env})).flags,
            std::vector{Validity::PolicyViolation});
  EXPECT_EQ(l.state().size(), 0u);
}

TEST_F(LedgerTest, StoreKeepsContentAddress) {
  auto l = d().new_ledger(cache());
  auto addr = ContentAddress::of(as_bytes("reading blob"));
  auto tx = d().envelope(0, Action::Store, "blob", Value{addr}, 1, l.state(), cache());
  EXPECT_EQ(l.commit_block(d().next_block(l, {tx})).flags, std::vector{Validity::Valid});
  auto v = query(l.state(), dev(2).credential, "blob", d().ctx.policy);
  EXPECT_EQ(std::get<ContentAddress>(v.value), addr);
}

TEST(LedgerPayload, EncryptedUpdateRoundTrip) {
  DeploymentSpec spec;
  spec.peers = 3;
  spec.osns = 1;
  spec.encrypt_payloads = true;
  spec.seed = 5;
  auto dep = make_deployment(spec);
  ASSERT_TRUE(dep.channel_key);
  auto l = dep.new_ledger();
  auto plain = to_bytes("21.5C");
  auto tx = dep.envelope(0, Action::Update, "temp", Value{plain}, 9, l.state());
  EXPECT_EQ(l.commit_block(dep.next_block(l, {tx})).flags, std::vector{Validity::Valid});
  const auto& id = dep.devices[0].credential.device_id;
  const auto& stored = std::get<Bytes>(l.state().get("temp")->value);
  EXPECT_NE(stored, plain);
  EXPECT_EQ(stored.size(), plain.size() + kAeadTagSize);
  EXPECT_EQ(open_payload(*dep.channel_key, id, "temp", 9, stored), plain);
  EXPECT_FALSE(open_payload(*dep.channel_key, id, "temp", 10, stored));
  EXPECT_FALSE(open_payload(*dep.channel_key, id, "other", 9, stored));
  auto wrong = *dep.channel_key;
  wrong[0] ^= 1;
  EXPECT_FALSE(open_payload(wrong, id, "temp", 9, stored));
}

TEST_F(LedgerTest, VersionsIncreaseByOnePerValidWrite) {
  auto l = d().new_ledger(cache());
  for (std::uint64_t k = 1; k <= 6; ++k) {
    auto tx = d().envelope(k % 2, Action::Update, "ctr", bytes_value(std::to_string(k)), k,
                           l.state(), cache());
    l.commit_block(d().next_block(l, {tx}));
    EXPECT_EQ(l.state().version("ctr"), k);
    EXPECT_EQ(query(l.state(), dev(2).credential, "ctr", d().ctx.policy).version, k);
  }
}

TEST_F(LedgerTest, RandomBlocksMatchSequentialExecutor) {
  auto rep = oracle::run_random_blocks(d(), 2024, 60, cache());
  EXPECT_EQ(rep.blocks, 60u);
  EXPECT_GT(rep.conflicts, 0u);
  EXPECT_EQ(rep.flag_mismatches, 0u);
  EXPECT_EQ(rep.state_mismatches, 0u);
}

TEST(LedgerMerkle, HandComputedRoot) {
  auto leaf = [](char c) { return sha256(as_bytes(std::string(1, c))); };
  auto node = [](const Digest& a, const Digest& b) {
    return Hasher("cpsec.node").update(a).update(b).finish();
  };
  Digest a = leaf('a'), b = leaf('b'), c = leaf('c');
  EXPECT_EQ(merkle_root(std::vector<Digest>{}), Digest{});
  EXPECT_EQ(merkle_root(std::vector{a}), a);
  EXPECT_EQ(merkle_root(std::vector{a, b}), node(a, b));
  EXPECT_EQ(merkle_root(std::vector{a, b, c}), node(node(a, b), node(c, c)));
}

class ChainFile : public LedgerTest {
 protected:
  static void SetUpTestSuite() {
    LedgerTest::SetUpTestSuite();
    auto l = d().new_ledger(cache());
    std::uint64_t clock = 1;
    for (int h = 1; h < 10; ++h) {
      std::vector<Transaction> txs;
      for (int j = 0; j < 2; ++j)
        txs.push_back(d().envelope(j, Action::Update, "k" + std::to_string(h % 3),
                                   bytes_value(std::to_string(clock)), clock++, l.state(), cache()));
      l.commit_block(d().next_block(l, txs));
    }
    exported_ = new Bytes(export_ledger(l));
    final_state_ = new Digest(l.state().digest());
  }
  static void TearDownTestSuite() {
    delete exported_;
    delete final_state_;
    LedgerTest::TearDownTestSuite();
  }
  static inline Bytes* exported_ = nullptr;
  static inline Digest* final_state_ = nullptr;
};

TEST_F(ChainFile, RoundTripVerifies) {
  auto file = import_ledger(*exported_);
  ASSERT_EQ(file.blocks.size(), 10u);
  EXPECT_TRUE(verify_chain(file, cache()));
  Ledger replay(file.context, file.blocks[0], cache());
  for (std::size_t i = 1; i < file.blocks.size(); ++i) replay.commit_block(file.blocks[i]);
  EXPECT_EQ(replay.state().digest(), *final_state_);
  EXPECT_EQ(export_ledger(replay), *exported_);
  bool any_conflict = false;
  for (const auto& b : file.blocks)
    for (auto f : b.flags) any_conflict |= f == Validity::MvccConflict;
  EXPECT_TRUE(any_conflict);
}

TEST_F(ChainFile, EveryFlippedByteIsRejected) {
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < exported_->size(); ++i) {
    auto bytes = *exported_;
    bytes[i] ^= 0x01;
    bool ok = false;
    try {
      ok = verify_chain(import_ledger(bytes), cache());
    } catch (const Error&) {
    }
    if (ok) {
      ++accepted;
      ADD_FAILURE() << "flip at byte " << i << " accepted";
    }
  }
  EXPECT_EQ(accepted, 0u);
}

TEST_F(ChainFile, ReorderedTransactionsRejected) {
  auto file = import_ledger(*exported_);
  std::swap(file.blocks[4].txs[0], file.blocks[4].txs[1]);
  EXPECT_FALSE(verify_chain(file, cache()));
  // Even with the header recomputed the commit signatures no longer match.
  file.blocks[4].seal();
  EXPECT_FALSE(verify_chain(file, cache()));
}

TEST_F(ChainFile, DroppedOrSwappedBlocksRejected) {
  auto file = import_ledger(*exported_);
  auto dropped = file;
  dropped.blocks.erase(dropped.blocks.begin() + 5);
  EXPECT_FALSE(verify_chain(dropped, cache()));
  auto swapped = file;
  std::swap(swapped.blocks[3], swapped.blocks[4]);
  EXPECT_FALSE(verify_chain(swapped, cache()));
  auto flags = file;
  flags.blocks[2].flags[1] = Validity::Valid;
  flags.blocks[2].flags[0] = Validity::MvccConflict;
  EXPECT_FALSE(verify_chain(flags, cache()));
  auto truncated = *exported_;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { import_ledger(truncated); }), ErrorCode::DecodeError);
}

}  // namespace
