// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/registry.hpp"

#include <algorithm>

#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/rng.hpp"

namespace cpsec::registry {

using mscrypto::G2;

namespace {

constexpr std::string_view kSealSalt = "CPSEC-SEAL-V1";
constexpr std::string_view kEphemeralSalt = "CPSEC-REG-EPHEMERAL-V1";
constexpr std::string_view kDeviceSalt = "CPSEC-REG-DEVICE-V1";
constexpr std::string_view kRequestAd = "CPSEC-REG-REQUEST";
constexpr std::string_view kShareAd = "CPSEC-REG-SHARE";

Scalar derive_scalar(ByteView ikm, std::string_view salt, ByteView info) {
  for (std::uint32_t counter = 0;; ++counter) {
    Writer w;
    w.bytes(info);
    w.u32(counter);
    auto s = Scalar::reduce(hkdf_sha256(ikm, as_bytes(salt), w.data(), 48));
    if (!s.is_zero()) return s;
  }
}

Bytes seal_key(const G2& shared, const G2& ephemeral, const PublicKey& recipient) {
  Writer info;
  info.fixed(ephemeral.compress());
  recipient.encode(info);
  auto ikm = shared.compress();
  return hkdf_sha256(ikm, as_bytes(kSealSalt), info.data(), kAeadKeySize);
}

Bytes request_plaintext(ByteView device_id, const PublicKey& pk_x, const Nonce& nonce) {
  Writer w;
  w.bytes(device_id);
  pk_x.encode(w);
  w.fixed(nonce);
  return std::move(w).take();
}

Bytes share_ad(ByteView device_id) {
  Writer w;
  w.str(kShareAd);
  w.bytes(device_id);
  return std::move(w).take();
}

Bytes encode_hex_line(std::string_view label, const Bytes& body) {
  Bytes line = to_bytes(label);
  line.push_back(' ');
  append(line, as_bytes(to_hex(body)));
  return line;
}

template <class T>
Bytes encoded(const T& v) {
  Writer w;
  v.encode(w);
  return std::move(w).take();
}

}  // namespace

std::size_t default_threshold(std::size_t n) { return (2 * n + 2) / 3; }

void SealedBox::encode(Writer& w) const {
  w.fixed(ephemeral.compress());
  w.bytes(ciphertext);
}

SealedBox SealedBox::decode(Reader& r) {
  auto eph = G2::decompress(r.fixed(G2::kCompressedSize));
  if (!eph) throw Error(ErrorCode::DecodeError, "bad ephemeral point");
  return {*eph, r.bytes(1u << 16)};
}

SealedBox seal(const PublicKey& recipient, const Scalar& ephemeral, ByteView plaintext,
               ByteView associated) {
  auto R = G2::generator() * ephemeral;
  auto key = seal_key(recipient.point * ephemeral, R, recipient);
  return {R, aead_seal(key, plaintext, associated)};
}

std::optional<Bytes> open(const SecretKey& recipient, const SealedBox& box, ByteView associated) {
  if (box.ephemeral.is_identity()) return std::nullopt;
  PublicKey self{G2::generator() * recipient.scalar()};
  auto key = seal_key(box.ephemeral * recipient.scalar(), box.ephemeral, self);
  return aead_open(key, box.ciphertext, associated);
}

DeviceSession device_begin(const SystemParams& params, ByteView device_id, ByteView seed) {
  if (device_id.size() > kMaxDeviceIdSize)
    throw Error(ErrorCode::DeviceIdTooLong, static_cast<std::int64_t>(device_id.size()));
  if (seed.size() != 32) throw Error(ErrorCode::InvalidParams, "device seed must be 32 bytes");
  Writer info;
  info.str("x");
  info.bytes(device_id);
  SecretKey x(derive_scalar(seed, kDeviceSalt, info.data()));
  Writer nonce_info;
  nonce_info.str("nonce");
  nonce_info.bytes(device_id);
  auto okm = hkdf_sha256(seed, as_bytes(kDeviceSalt), nonce_info.data(), kNonceSize);
  Nonce nonce{};
  std::copy(okm.begin(), okm.end(), nonce.begin());
  return DeviceSession(Bytes(device_id.begin(), device_id.end()), x,
                       PublicKey{params.g2 * x.scalar()}, nonce, Bytes(seed.begin(), seed.end()));
}

void RegistrationRequest::encode(Writer& w) const {
  w.bytes(device_id);
  pk_x.encode(w);
  w.fixed(nonce);
  w.u32(static_cast<std::uint32_t>(payloads.size()));
  for (const auto& p : payloads) {
    p.target.encode(w);
    p.box.encode(w);
  }
}

RegistrationRequest RegistrationRequest::decode(Reader& r) {
  RegistrationRequest req;
  req.device_id = r.bytes(kMaxDeviceIdSize);
  req.pk_x = PublicKey::decode(r);
  req.nonce = r.array<kNonceSize>();
  auto n = r.count(2 * G2::kCompressedSize + 4);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto target = PublicKey::decode(r);
    req.payloads.push_back({target, SealedBox::decode(r)});
  }
  return req;
}

RegistrationRequest build_request(const DeviceSession& session,
                                  std::span<const PublicKey> targets, std::size_t t) {
  if (targets.size() < t)
    throw Error(ErrorCode::InsufficientQuorumTargets, static_cast<std::int64_t>(targets.size()),
                "need at least " + std::to_string(t) + " target peers");
  RegistrationRequest req{session.device_id(), session.pk_x(), session.nonce(), {}};
  auto plaintext = request_plaintext(req.device_id, req.pk_x, req.nonce);
  for (const auto& target : targets) {
    Writer info;
    info.str("request");
    target.encode(info);
    auto r = derive_scalar(session.seed(), kEphemeralSalt, info.data());
    req.payloads.push_back({target, seal(target, r, plaintext, as_bytes(kRequestAd))});
  }
  return req;
}

void PartialSecretShare::encode(Writer& w) const {
  w.u32(peer_id);
  w.bytes(device_id);
  pk_x.encode(w);
  sealed_d.encode(w);
  pk_share.encode(w);
  share_sig.encode(w);
}

PartialSecretShare PartialSecretShare::decode(Reader& r) {
  PartialSecretShare s;
  s.peer_id = r.u32();
  s.device_id = r.bytes(kMaxDeviceIdSize);
  s.pk_x = PublicKey::decode(r);
  s.sealed_d = SealedBox::decode(r);
  s.pk_share = PublicKey::decode(r);
  s.share_sig = Signature::decode(r);
  return s;
}

Bytes share_message(ByteView device_id, const PublicKey& pk_x, const PublicKey& pk_share) {
  Writer w;
  w.str("CPSEC-SHARE");
  w.bytes(device_id);
  pk_x.encode(w);
  pk_share.encode(w);
  return std::move(w).take();
}

Bytes attestation_message(ByteView device_id, const PublicKey& pk_x, const PublicKey& pk_ps) {
  Writer w;
  w.str("CPSEC-CRED");
  w.bytes(device_id);
  pk_x.encode(w);
  pk_ps.encode(w);
  return std::move(w).take();
}

void PartialSecretBundle::encode(Writer& w) const {
  w.bytes(device_id);
  pk_x.encode(w);
  pk_ps.encode(w);
  attestation.encode(w);
}

PartialSecretBundle PartialSecretBundle::decode(Reader& r) {
  PartialSecretBundle b;
  b.device_id = r.bytes(kMaxDeviceIdSize);
  b.pk_x = PublicKey::decode(r);
  b.pk_ps = PublicKey::decode(r);
  b.attestation = MultiSignature::decode(r);
  return b;
}

ConsortiumPeer::ConsortiumPeer(std::uint32_t peer_id, KeyPair master,
                               std::vector<PublicKey> roster, std::size_t t,
                               const SystemParams& params)
    : peer_id_(peer_id), master_(std::move(master)), roster_(std::move(roster)), t_(t),
      params_(params) {
  if (t_ < 1 || t_ > roster_.size())
    throw Error(ErrorCode::InvalidParams, "threshold must lie in [1, n]");
  if (peer_id_ >= roster_.size() || !(roster_[peer_id_] == master_.pk))
    throw Error(ErrorCode::InvalidParams, "peer key not at its roster index");
}

bool ConsortiumPeer::remember_nonce(const Nonce& n) {
  std::string key(n.begin(), n.end());
  auto [it, fresh] = seen_.try_emplace(key, 0);
  if (!fresh) by_use_.erase(it->second);
  it->second = ++use_clock_;
  by_use_.emplace(it->second, key);
  if (seen_.size() > kSeenNonceCapacity) {
    auto oldest = by_use_.begin();
    seen_.erase(oldest->second);
    by_use_.erase(oldest);
  }
  return fresh;
}

PartialSecretShare ConsortiumPeer::issue_share(const RegistrationRequest& request) {
  auto it = std::find_if(request.payloads.begin(), request.payloads.end(),
                         [&](const TargetedPayload& p) { return p.target == master_.pk; });
  if (it == request.payloads.end())
    throw Error(ErrorCode::AuthFailure, static_cast<std::int64_t>(peer_id_), "no payload for peer");
  auto plaintext = open(master_.sk, it->box, as_bytes(kRequestAd));
  if (!plaintext ||
      *plaintext != request_plaintext(request.device_id, request.pk_x, request.nonce) ||
      !request.pk_x.valid())
    throw Error(ErrorCode::AuthFailure, static_cast<std::int64_t>(peer_id_),
                "request does not authenticate");
  if (!remember_nonce(request.nonce))
    throw Error(ErrorCode::ReplayRejected, static_cast<std::int64_t>(peer_id_));

  auto d = mscrypto::hash_to_identity_scalar(request.device_id, master_.sk, params_);
  PartialSecretShare share;
  share.peer_id = peer_id_;
  share.device_id = request.device_id;
  share.pk_x = request.pk_x;
  Writer eph_info;
  eph_info.str("share");
  eph_info.bytes(request.device_id);
  eph_info.fixed(request.nonce);
  auto master_bytes = master_.sk.export_bytes();
  auto r = derive_scalar(master_bytes, kEphemeralSalt, eph_info.data());
  auto d_bytes = d.to_bytes();
  share.sealed_d = seal(request.pk_x, r, d_bytes, share_ad(request.device_id));
  share.pk_share = PublicKey{params_.g2 * d};
  if (fault_ == PeerFault::WrongShare) share.pk_share.point += params_.g2;
  auto msg = share_message(share.device_id, share.pk_x, share.pk_share);
  if (fault_ == PeerFault::BadShareSig) msg.push_back(0);
  share.share_sig = mscrypto::sign(master_.sk, msg, params_);
  return share;
}

Signature ConsortiumPeer::cosign(const BundleProposal& proposal) const {
  auto reject = [&](const std::string& why) {
    return Error(ErrorCode::AttestationInvalid, static_cast<std::int64_t>(peer_id_), why);
  };
  if (proposal.contributors.size() != roster_.size() || !proposal.contributors.test(peer_id_))
    throw reject("proposal does not include this peer");
  if (proposal.contributors.count() < t_ ||
      proposal.shares.size() != proposal.contributors.count())
    throw reject("contributing set below threshold");
  G2 sum;
  bool own_seen = false;
  for (const auto& s : proposal.shares) {
    if (s.peer_id >= roster_.size() || !proposal.contributors.test(s.peer_id) ||
        s.device_id != proposal.device_id || !(s.pk_x == proposal.pk_x) ||
        !mscrypto::verify(roster_[s.peer_id], share_message(s.device_id, s.pk_x, s.pk_share),
                          s.share_sig, params_))
      throw reject("share " + std::to_string(s.peer_id) + " does not verify");
    own_seen |= s.peer_id == peer_id_;
    sum += s.pk_share.point;
  }
  if (!own_seen || !(sum == proposal.pk_ps.point)) throw reject("pk_ps is not the share sum");
  return mscrypto::sign(master_.sk,
                        attestation_message(proposal.device_id, proposal.pk_x, proposal.pk_ps),
                        params_);
}

std::vector<ConsortiumPeer> make_consortium(const SystemParams& params, std::size_t n,
                                            std::size_t t, std::uint64_t seed) {
  if (n == 0 || t < 1 || t > n) throw Error(ErrorCode::InvalidParams, "need 1 <= t <= n");
  auto rng = DetRng::derive(seed, "consortium");
  std::vector<KeyPair> keys;
  std::vector<std::pair<PublicKey, mscrypto::ProofOfPossession>> with_pop;
  std::vector<PublicKey> roster;
  for (std::size_t i = 0; i < n; ++i) {
    keys.push_back(mscrypto::keygen(params, rng.bytes(32)));
    with_pop.emplace_back(keys.back().pk, keys.back().pop);
    roster.push_back(keys.back().pk);
  }
  mscrypto::aggregate_public_keys(with_pop, params);
  std::vector<ConsortiumPeer> peers;
  for (std::size_t i = 0; i < n; ++i)
    peers.emplace_back(static_cast<std::uint32_t>(i), keys[i], roster, t, params);
  return peers;
}

BundleProposal propose_bundle(std::span<const PartialSecretShare> shares,
                              std::span<const PublicKey> roster, std::size_t t,
                              const SystemParams& params) {
  BundleProposal p;
  p.contributors = SignerBitmap(roster.size());
  std::vector<const PartialSecretShare*> valid(roster.size(), nullptr);
  if (!shares.empty()) {
    p.device_id = shares.front().device_id;
    p.pk_x = shares.front().pk_x;
  }
  for (const auto& s : shares) {
    bool ok = s.peer_id < roster.size() && s.device_id == p.device_id && s.pk_x == p.pk_x &&
              mscrypto::verify(roster[s.peer_id], share_message(s.device_id, s.pk_x, s.pk_share),
                               s.share_sig, params);
    if (!ok) {
      p.excluded.push_back(s.peer_id);
      continue;
    }
    if (!valid[s.peer_id]) valid[s.peer_id] = &s;
  }
  G2 sum;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (!valid[i]) continue;
    p.contributors.set(i);
    p.shares.push_back(*valid[i]);
    sum += valid[i]->pk_share.point;
  }
  p.pk_ps = PublicKey{sum};
  if (p.shares.size() < t)
    throw Error(ErrorCode::ThresholdUnmet, static_cast<std::int64_t>(p.shares.size()),
                "need " + std::to_string(t) + " valid shares");
  return p;
}

PartialSecretBundle assemble_bundle(const BundleProposal& proposal,
                                    std::span<const std::pair<std::uint32_t, Signature>> cosigs) {
  std::vector<Signature> ordered;
  for (auto i : proposal.contributors.indices()) {
    auto it = std::find_if(cosigs.begin(), cosigs.end(),
                           [&](const auto& c) { return c.first == i; });
    if (it == cosigs.end())
      throw Error(ErrorCode::AttestationInvalid, static_cast<std::int64_t>(i), "missing cosignature");
    ordered.push_back(it->second);
  }
  if (ordered.size() != cosigs.size())
    throw Error(ErrorCode::AttestationInvalid, "cosignature from a non-contributor");
  return {proposal.device_id, proposal.pk_x, proposal.pk_ps,
          MultiSignature{mscrypto::aggregate_signatures(ordered), proposal.contributors}};
}

PartialSecretBundle assemble_bundle(std::span<const PartialSecretShare> shares,
                                    std::span<const ConsortiumPeer> peers, std::size_t t,
                                    const SystemParams& params) {
  std::vector<PublicKey> roster;
  for (const auto& p : peers) roster.push_back(p.pk());
  auto proposal = propose_bundle(shares, roster, t, params);
  std::vector<std::pair<std::uint32_t, Signature>> cosigs;
  for (auto i : proposal.contributors.indices())
    cosigs.emplace_back(static_cast<std::uint32_t>(i), peers[i].cosign(proposal));
  return assemble_bundle(proposal, cosigs);
}

void DeviceCredential::encode(Writer& w) const {
  w.bytes(device_id);
  pk_full.encode(w);
  bundle.encode(w);
  w.u64(issued_at);
}

DeviceCredential DeviceCredential::decode(Reader& r) {
  DeviceCredential c;
  c.device_id = r.bytes(kMaxDeviceIdSize);
  c.pk_full = PublicKey::decode(r);
  c.bundle = PartialSecretBundle::decode(r);
  c.issued_at = r.u64();
  return c;
}

Bytes DeviceCredential::to_bytes() const { return encoded(*this); }

FinalizedDevice device_finalize(const DeviceSession& session, const PartialSecretBundle& bundle,
                                std::span<const PartialSecretShare> shares,
                                std::span<const PublicKey> roster, std::size_t t,
                                std::uint64_t issued_at, const SystemParams& params) {
  const auto& signers = bundle.attestation.signers;
  if (bundle.device_id != session.device_id() || !(bundle.pk_x == session.pk_x()))
    throw Error(ErrorCode::AttestationInvalid, "bundle issued for another session");
  if (signers.size() != roster.size() || signers.count() < t)
    throw Error(ErrorCode::AttestationInvalid, static_cast<std::int64_t>(signers.count()),
                "contributing set below threshold");
  if (!mscrypto::verify_multisig(roster, bundle.attestation,
                                 attestation_message(bundle.device_id, bundle.pk_x, bundle.pk_ps),
                                 params))
    throw Error(ErrorCode::AttestationInvalid, "cosignature does not verify");

  auto ad = share_ad(session.device_id());
  Scalar d_sum;
  G2 pk_sum;
  for (auto i : signers.indices()) {
    auto mismatch = [&](const char* why) {
      return Error(ErrorCode::ShareMismatch, static_cast<std::int64_t>(i), why);
    };
    auto it = std::find_if(shares.begin(), shares.end(),
                           [&](const PartialSecretShare& s) { return s.peer_id == i; });
    if (it == shares.end()) throw mismatch("share missing");
    auto plain = open(session.secret(), it->sealed_d, ad);
    if (!plain) throw mismatch("share does not decrypt");
    auto d = Scalar::from_canonical(*plain);
    if (!d || d->is_zero() || !(params.g2 * *d == it->pk_share.point))
      throw mismatch("decrypted scalar disagrees with pk_share");
    d_sum += *d;
    pk_sum += it->pk_share.point;
  }
  if (!(pk_sum == bundle.pk_ps.point))
    throw Error(ErrorCode::ShareMismatch, "shares do not sum to pk_ps");

  auto combined = mscrypto::combine_keys(session.secret(), d_sum, params);
  DeviceCredential cred{bundle.device_id, combined.pk, bundle, issued_at};
  return {std::move(cred), combined.sk};
}

bool verify_credential(const DeviceCredential& credential, std::span<const PublicKey> roster,
                       std::size_t t, const SystemParams& params, mscrypto::SigCache* cache) {
  const auto& b = credential.bundle;
  if (credential.device_id != b.device_id || credential.device_id.size() > kMaxDeviceIdSize)
    return false;
  if (b.attestation.signers.size() != roster.size() || b.attestation.signers.count() < t ||
      t == 0)
    return false;
  if (!credential.pk_full.valid() || !(credential.pk_full.point == b.pk_x.point + b.pk_ps.point))
    return false;
  return mscrypto::verify_multisig(roster, b.attestation,
                                   attestation_message(b.device_id, b.pk_x, b.pk_ps), params,
                                   cache);
}

Registration register_device(std::span<ConsortiumPeer> peers, ByteView device_id,
                             ByteView seed, std::uint64_t issued_at,
                             const SystemParams& params) {
  if (peers.empty()) throw Error(ErrorCode::InvalidParams, "empty consortium");
  std::size_t t = peers.front().threshold();
  const auto& roster = peers.front().roster();
  std::vector<std::string> transcript;
  auto line = [&](std::string_view label, const Bytes& body) {
    auto l = encode_hex_line(label, body);
    transcript.emplace_back(l.begin(), l.end());
  };
  line("params", params.to_bytes());

  auto session = device_begin(params, device_id, seed);
  auto request = build_request(session, roster, t);
  line("request", encoded(request));

  std::vector<PartialSecretShare> shares;
  for (auto& peer : peers) {
    if (peer.fault() == PeerFault::Offline) continue;
    shares.push_back(peer.issue_share(request));
    line("share." + std::to_string(peer.peer_id()), encoded(shares.back()));
  }

  auto proposal = propose_bundle(shares, roster, t, params);
  std::vector<std::pair<std::uint32_t, Signature>> cosigs;
  for (auto i : proposal.contributors.indices()) {
    cosigs.emplace_back(static_cast<std::uint32_t>(i), peers[i].cosign(proposal));
    line("cosig." + std::to_string(i), cosigs.back().second.to_bytes());
  }
  auto bundle = assemble_bundle(proposal, cosigs);
  line("bundle", encoded(bundle));

  auto device = device_finalize(session, bundle, shares, roster, t, issued_at, params);
  line("credential", device.credential.to_bytes());
  return {std::move(device), std::move(transcript)};
}

}  // namespace cpsec::registry
