// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "cpsec/error.hpp"
#include "cpsec/registry.hpp"
#include "cpsec/rng.hpp"
#include "oracles.hpp"

using namespace cpsec;
using namespace cpsec::registry;

namespace {

const SystemParams& P() { return SystemParams::standard(); }

struct Consortium {
  std::vector<KeyPair> keys;
  std::vector<PublicKey> roster;
  std::vector<ConsortiumPeer> peers;
  std::size_t t;
};

Consortium consortium(std::size_t n, std::size_t t, std::uint64_t seed = 1) {
  Consortium c;
  c.t = t;
  DetRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    c.keys.push_back(mscrypto::keygen(P(), rng.bytes(32)));
    c.roster.push_back(c.keys.back().pk);
  }
  for (std::size_t i = 0; i < n; ++i)
    c.peers.emplace_back(static_cast<std::uint32_t>(i), c.keys[i], c.roster, t, P());
  return c;
}

Bytes seed32(std::uint64_t n) { return DetRng(1000 + n).bytes(32); }

template <class Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected cpsec::Error";
  return Error(ErrorCode::DecodeError, "none");
}

struct Flow {
  DeviceSession session;
  std::vector<PartialSecretShare> shares;
};

Flow collect(Consortium& c, std::string_view id, std::uint64_t seed,
             const std::vector<std::size_t>& who) {
  auto session = device_begin(P(), as_bytes(id), seed32(seed));
  auto req = build_request(session, c.roster, c.t);
  std::vector<PartialSecretShare> shares;
  for (auto i : who) shares.push_back(c.peers[i].issue_share(req));
  return {session, shares};
}

oracle::Be32 decrypted_d(const DeviceSession& s, const PartialSecretShare& share) {
  Writer ad;
  ad.str("CPSEC-REG-SHARE");
  ad.bytes(s.device_id());
  auto plain = open(s.secret(), share.sealed_d, ad.data());
  EXPECT_TRUE(plain.has_value());
  oracle::Be32 out{};
  std::copy(plain->begin(), plain->end(), out.begin());
  return out;
}

}  // namespace

TEST(Threshold, DefaultIsTwoThirdsCeiling) {
  EXPECT_EQ(default_threshold(1), 1u);
  EXPECT_EQ(default_threshold(3), 2u);
  EXPECT_EQ(default_threshold(4), 3u);
  EXPECT_EQ(default_threshold(5), 4u);
  EXPECT_EQ(default_threshold(6), 4u);
}

TEST(DeviceBegin, DeterministicDistinctNoncesAndOracleKey) {
  auto a = device_begin(P(), as_bytes("sensor-01"), seed32(1));
  auto b = device_begin(P(), as_bytes("sensor-01"), seed32(1));
  auto c = device_begin(P(), as_bytes("sensor-01"), seed32(2));
  EXPECT_EQ(a.nonce(), b.nonce());
  EXPECT_EQ(a.pk_x(), b.pk_x());
  EXPECT_NE(a.nonce(), c.nonce());
  EXPECT_EQ(a.pk_x().point, oracle::g2_times(a.secret().export_bytes()));
  Bytes long_id(257, 'x');
  EXPECT_EQ(error_of([&] { device_begin(P(), long_id, seed32(1)); }).code(),
            ErrorCode::DeviceIdTooLong);
}

TEST(BuildRequest, EachPayloadOpensForExactlyItsPeer) {
  auto c = consortium(4, 3);
  auto session = device_begin(P(), as_bytes("sensor-01"), seed32(3));
  auto req = build_request(session, c.roster, 3);
  ASSERT_EQ(req.payloads.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    int opened = 0;
    for (std::size_t k = 0; k < 4; ++k)
      if (open(c.keys[k].sk, req.payloads[j].box, as_bytes("CPSEC-REG-REQUEST"))) {
        ++opened;
        EXPECT_EQ(k, j);
      }
    EXPECT_EQ(opened, 1);
  }
  Writer w;
  req.encode(w);
  Reader r(w.data());
  auto back = RegistrationRequest::decode(r);
  r.expect_end();
  EXPECT_EQ(back.payloads.size(), 4u);
}

TEST(BuildRequest, TooFewTargets) {
  auto c = consortium(4, 3);
  auto session = device_begin(P(), as_bytes("sensor-01"), seed32(3));
  auto e = error_of([&] { build_request(session, std::span(c.roster).first(2), 3); });
  EXPECT_EQ(e.code(), ErrorCode::InsufficientQuorumTargets);
  EXPECT_EQ(e.value(), 2);
}

TEST(IssueShare, TamperAndReplay) {
  auto c = consortium(4, 3);
  auto session = device_begin(P(), as_bytes("sensor-01"), seed32(4));
  auto req = build_request(session, c.roster, 3);

  auto tampered = req;
  tampered.payloads[0].box.ciphertext[5] ^= 1;
  EXPECT_EQ(error_of([&] { c.peers[0].issue_share(tampered); }).code(), ErrorCode::AuthFailure);

  auto relabeled = req;
  relabeled.device_id = to_bytes("sensor-99");
  EXPECT_EQ(error_of([&] { c.peers[0].issue_share(relabeled); }).code(), ErrorCode::AuthFailure);

  EXPECT_NO_THROW(c.peers[0].issue_share(req));
  EXPECT_EQ(error_of([&] { c.peers[0].issue_share(req); }).code(), ErrorCode::ReplayRejected);
  // Other peers keep their own nonce sets.
  EXPECT_NO_THROW(c.peers[1].issue_share(req));
}

TEST(IssueShare, ValidSignatureAndIdempotentContribution) {
  auto c = consortium(4, 3);
  auto f1 = collect(c, "sensor-01", 5, {0});
  auto f2 = collect(c, "sensor-01", 6, {0});
  const auto& s = f1.shares[0];
  EXPECT_TRUE(mscrypto::verify(c.roster[0], share_message(s.device_id, s.pk_x, s.pk_share),
                               s.share_sig, P()));
  EXPECT_EQ(f1.shares[0].pk_share, f2.shares[0].pk_share);
  EXPECT_EQ(decrypted_d(f1.session, f1.shares[0]), decrypted_d(f2.session, f2.shares[0]));
  EXPECT_EQ(s.pk_share.point, oracle::g2_times(decrypted_d(f1.session, s)));
}

TEST(IssueShare, ThousandDevicesNoCollisions) {
  auto c = consortium(1, 1);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    auto id = "dev-" + std::to_string(i);
    auto session = device_begin(P(), as_bytes(id), seed32(i));
    auto req = build_request(session, c.roster, 1);
    auto share = c.peers[0].issue_share(req);
    seen.insert(to_hex(share.pk_share.to_bytes()));
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(AssembleBundle, ThresholdAndSubsetOracle) {
  auto c = consortium(4, 3);
  auto all = collect(c, "sensor-01", 7, {0, 1, 2, 3});

  auto two = std::span(all.shares).first(2);
  auto e = error_of([&] { assemble_bundle(two, c.peers, 3, P()); });
  EXPECT_EQ(e.code(), ErrorCode::ThresholdUnmet);
  EXPECT_EQ(e.value(), 2);

  auto full = assemble_bundle(all.shares, c.peers, 3, P());
  std::vector<PartialSecretShare> subset = {all.shares[0], all.shares[2], all.shares[3]};
  auto part = assemble_bundle(subset, c.peers, 3, P());
  EXPECT_NE(full.pk_ps, part.pk_ps);
  EXPECT_EQ(full.attestation.signers.count(), 4u);
  EXPECT_EQ(part.attestation.signers.indices(), (std::vector<std::size_t>{0, 2, 3}));

  std::vector<oracle::Be32> d_all, d_sub;
  for (auto& s : all.shares) d_all.push_back(decrypted_d(all.session, s));
  for (auto& s : subset) d_sub.push_back(decrypted_d(all.session, s));
  EXPECT_EQ(full.pk_ps.point, oracle::g2_times(oracle::scalar_sum(d_all)));
  EXPECT_EQ(part.pk_ps.point, oracle::g2_times(oracle::scalar_sum(d_sub)));

  for (const auto* b : {&full, &part})
    EXPECT_TRUE(mscrypto::verify_multisig(c.roster, b->attestation,
                                          attestation_message(b->device_id, b->pk_x, b->pk_ps),
                                          P()));
}

TEST(AssembleBundle, BadShareSignatureIsExcludedAndReported) {
  auto c = consortium(4, 3);
  c.peers[1].set_fault(PeerFault::BadShareSig);
  auto all = collect(c, "sensor-01", 8, {0, 1, 2, 3});
  auto proposal = propose_bundle(all.shares, c.roster, 3, P());
  EXPECT_EQ(proposal.excluded, (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(proposal.contributors.indices(), (std::vector<std::size_t>{0, 2, 3}));

  c.peers[2].set_fault(PeerFault::BadShareSig);
  auto again = collect(c, "sensor-01", 9, {0, 1, 2, 3});
  auto e = error_of([&] { propose_bundle(again.shares, c.roster, 3, P()); });
  EXPECT_EQ(e.code(), ErrorCode::ThresholdUnmet);
  EXPECT_EQ(e.value(), 2);
}

TEST(DeviceFinalize, HonestFlowKeyCorrectness) {
  auto c = consortium(4, 3);
  auto f = collect(c, "sensor-01", 10, {0, 1, 2, 3});
  auto bundle = assemble_bundle(f.shares, c.peers, 3, P());
  auto dev = device_finalize(f.session, bundle, f.shares, c.roster, 3, 42, P());
  EXPECT_EQ(dev.credential.issued_at, 42u);
  auto msg = to_bytes("reading");
  EXPECT_TRUE(mscrypto::verify(dev.credential.pk_full, msg, mscrypto::sign(dev.sk_full, msg, P()),
                               P()));
  std::vector<oracle::Be32> terms = {f.session.secret().export_bytes()};
  for (auto& s : f.shares) terms.push_back(decrypted_d(f.session, s));
  auto expected = oracle::scalar_sum(terms);
  EXPECT_EQ(dev.sk_full.export_bytes(), expected);
  EXPECT_EQ(dev.credential.pk_full.point, oracle::g2_times(expected));
  EXPECT_TRUE(verify_credential(dev.credential, c.roster, 3, P()));
}

TEST(DeviceFinalize, LyingPeerIsShareMismatch) {
  auto c = consortium(4, 3);
  c.peers[2].set_fault(PeerFault::WrongShare);
  auto f = collect(c, "sensor-01", 11, {0, 1, 2, 3});
  auto bundle = assemble_bundle(f.shares, c.peers, 3, P());
  auto e = error_of([&] { device_finalize(f.session, bundle, f.shares, c.roster, 3, 0, P()); });
  EXPECT_EQ(e.code(), ErrorCode::ShareMismatch);
  EXPECT_EQ(e.value(), 2);
}

TEST(DeviceFinalize, SwappedCosignatureIsAttestationInvalid) {
  auto c = consortium(4, 3);
  auto f = collect(c, "sensor-01", 12, {0, 1, 2});
  auto proposal = propose_bundle(f.shares, c.roster, 3, P());
  auto msg = attestation_message(proposal.device_id, proposal.pk_x, proposal.pk_ps);
  std::vector<std::pair<std::uint32_t, mscrypto::Signature>> cosigs = {
      {0, c.peers[0].cosign(proposal)},
      {1, mscrypto::sign(c.keys[3].sk, msg, P())},  // peer 3 substituted for peer 1
      {2, c.peers[2].cosign(proposal)}};
  auto bundle = assemble_bundle(proposal, cosigs);
  auto e = error_of([&] { device_finalize(f.session, bundle, f.shares, c.roster, 3, 0, P()); });
  EXPECT_EQ(e.code(), ErrorCode::AttestationInvalid);
}

TEST(Cosign, RefusesProposalWithoutOwnShare) {
  auto c = consortium(4, 3);
  auto f = collect(c, "sensor-01", 13, {0, 1, 2});
  auto proposal = propose_bundle(f.shares, c.roster, 3, P());
  EXPECT_EQ(error_of([&] { c.peers[3].cosign(proposal); }).code(), ErrorCode::AttestationInvalid);
  auto inflated = proposal;
  inflated.pk_ps.point += P().g2;
  EXPECT_EQ(error_of([&] { c.peers[0].cosign(inflated); }).code(), ErrorCode::AttestationInvalid);
}

TEST(VerifyCredential, Perturbations) {
  auto c = consortium(4, 3);
  auto reg = register_device(c.peers, as_bytes("sensor-01"), seed32(14), 7, P());
  const auto& cred = reg.device.credential;
  EXPECT_TRUE(verify_credential(cred, c.roster, 3, P()));

  auto truncated = cred;
  truncated.bundle.attestation.signers = SignerBitmap(4);
  truncated.bundle.attestation.signers.set(0);
  truncated.bundle.attestation.signers.set(1);
  EXPECT_FALSE(verify_credential(truncated, c.roster, 3, P()));

  auto shifted = cred;
  shifted.pk_full.point += P().g2;
  EXPECT_FALSE(verify_credential(shifted, c.roster, 3, P()));

  EXPECT_FALSE(verify_credential(cred, std::span(c.roster).first(3), 3, P()));
  EXPECT_FALSE(verify_credential(cred, c.roster, 5, P()));

  auto renamed = cred;
  renamed.device_id = to_bytes("sensor-02");
  EXPECT_FALSE(verify_credential(renamed, c.roster, 3, P()));
}

TEST(VerifyCredential, SubThresholdCoalitionsCannotForge) {
  for (std::size_t n : {3u, 4u, 5u}) {
    std::size_t t = default_threshold(n);
    auto c = consortium(n, t, 20 + n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != t - 1) continue;
      std::vector<std::size_t> who;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) who.push_back(i);
      auto f = collect(c, "sensor-x", 100 + mask, who);
      EXPECT_EQ(error_of([&] { propose_bundle(f.shares, c.roster, t, P()); }).code(),
                ErrorCode::ThresholdUnmet);

      // Coalition cosigns on its own and claims one extra absent signer.
      mscrypto::G2 pk_ps;
      for (auto& s : f.shares) pk_ps += s.pk_share.point;
      PartialSecretBundle forged{f.session.device_id(), f.session.pk_x(), PublicKey{pk_ps}, {}};
      auto msg = attestation_message(forged.device_id, forged.pk_x, forged.pk_ps);
      std::vector<mscrypto::Signature> sigs;
      for (auto i : who) sigs.push_back(mscrypto::sign(c.keys[i].sk, msg, P()));
      SignerBitmap honest(n);
      for (auto i : who) honest.set(i);
      auto padded = honest;
      for (std::size_t j = 0; j < n; ++j)
        if (!honest.test(j)) {
          padded.set(j);
          break;
        }
      for (const auto& bm : {honest, padded}) {
        forged.attestation = {sigs.empty() ? mscrypto::Signature{} : mscrypto::aggregate_signatures(sigs), bm};
        DeviceCredential cred{forged.device_id, PublicKey{forged.pk_x.point + pk_ps}, forged, 0};
        EXPECT_FALSE(verify_credential(cred, c.roster, t, P())) << "n=" << n << " mask=" << mask;
      }
    }
  }
}

TEST(RegisterDevice, TranscriptDeterministicAndIdempotentPkPs) {
  auto c1 = consortium(4, 3);
  auto c2 = consortium(4, 3);
  auto a = register_device(c1.peers, as_bytes("sensor-01"), seed32(30), 1, P());
  auto b = register_device(c2.peers, as_bytes("sensor-01"), seed32(30), 1, P());
  EXPECT_EQ(a.transcript, b.transcript);
  ASSERT_FALSE(a.transcript.empty());
  EXPECT_EQ(a.transcript.front().rfind("params ", 0), 0u);
  EXPECT_EQ(a.transcript.back().rfind("credential ", 0), 0u);

  auto fresh_session = register_device(c1.peers, as_bytes("sensor-01"), seed32(31), 2, P());
  EXPECT_EQ(fresh_session.device.credential.bundle.pk_ps, a.device.credential.bundle.pk_ps);
  EXPECT_NE(fresh_session.device.credential.pk_full, a.device.credential.pk_full);
}

TEST(RegisterDevice, OfflinePeersMakeThresholdUnreachable) {
  auto c = consortium(4, 3);
  c.peers[0].set_fault(PeerFault::Offline);
  EXPECT_NO_THROW(register_device(c.peers, as_bytes("sensor-01"), seed32(40), 0, P()));
  c.peers[1].set_fault(PeerFault::Offline);
  auto e = error_of([&] { register_device(c.peers, as_bytes("sensor-02"), seed32(41), 0, P()); });
  EXPECT_EQ(e.code(), ErrorCode::ThresholdUnmet);
  EXPECT_EQ(e.value(), 2);
}

// The credential encoding is exactly the listed fields: id, two group
// elements, one multi-signature, a timestamp. No certificate structure fits.
TEST(Credential, SerializationContainsOnlyDeclaredFields) {
  auto c = consortium(4, 3);
  auto reg = register_device(c.peers, as_bytes("sensor-01"), seed32(50), 9, P());
  auto bytes = reg.device.credential.to_bytes();
  std::size_t id = 4 + 9;
  std::size_t bundle = id + 96 + 96 + 48 + 2 + 1;
  EXPECT_EQ(bytes.size(), id + 96 + bundle + 8);
  Reader r(bytes);
  EXPECT_EQ(DeviceCredential::decode(r), reg.device.credential);
  r.expect_end();
}
