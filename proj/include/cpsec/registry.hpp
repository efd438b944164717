// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Certificateless device registration.
//
// A device picks its own secret x and sends (id, x*g2, nonce) to at least t
// consortium peers, each copy sealed to one peer. Every peer answers with a
// deterministic contribution d_i sealed back to the device plus d_i*g2 in
// clear. The contributing peers then cosign (id, pk_x, sum d_i*g2) and the
// device ends up with sk = x + sum d_i, pk = pk_x + sum d_i*g2. No
// certificate is ever issued; the cosignature is the trust anchor.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpsec/mscrypto.hpp"

namespace cpsec::registry {

using mscrypto::KeyPair;
using mscrypto::MultiSignature;
using mscrypto::PublicKey;
using mscrypto::Scalar;
using mscrypto::SecretKey;
using mscrypto::Signature;
using mscrypto::SignerBitmap;
using mscrypto::SystemParams;

constexpr std::size_t kMaxDeviceIdSize = 256;
constexpr std::size_t kNonceSize = 16;
constexpr std::size_t kSeenNonceCapacity = 4096;

using Nonce = std::array<std::uint8_t, kNonceSize>;

// ceil(2n/3).
std::size_t default_threshold(std::size_t n);

// Hybrid encryption to a G2 public key: R = r*g2, key = KDF(r*pk), then
// ChaCha20-Poly1305. The ephemeral scalar is supplied by the caller so that
// whole protocol runs replay from a seed.
struct SealedBox {
  mscrypto::G2 ephemeral;
  Bytes ciphertext;

  bool operator==(const SealedBox&) const = default;
  void encode(Writer& w) const;
  static SealedBox decode(Reader& r);
};

SealedBox seal(const PublicKey& recipient, const Scalar& ephemeral, ByteView plaintext,
               ByteView associated);
std::optional<Bytes> open(const SecretKey& recipient, const SealedBox& box, ByteView associated);

class DeviceSession {
 public:
  const Bytes& device_id() const { return device_id_; }
  const SecretKey& secret() const { return x_; }
  const PublicKey& pk_x() const { return pk_x_; }
  const Nonce& nonce() const { return nonce_; }
  // Source of the per-target ephemeral scalars.
  const Bytes& seed() const { return seed_; }

 private:
  friend DeviceSession device_begin(const SystemParams&, ByteView, ByteView);
  DeviceSession(Bytes id, SecretKey x, PublicKey pk, Nonce nonce, Bytes seed)
      : device_id_(std::move(id)), x_(x), pk_x_(pk), nonce_(nonce), seed_(std::move(seed)) {}

  Bytes device_id_;
  SecretKey x_;
  PublicKey pk_x_;
  Nonce nonce_;
  Bytes seed_;
};

// Error(DeviceIdTooLong) past kMaxDeviceIdSize; Error(InvalidParams) unless
// the seed is 32 bytes.
DeviceSession device_begin(const SystemParams& params, ByteView device_id, ByteView seed);

struct TargetedPayload {
  PublicKey target;
  SealedBox box;
};

struct RegistrationRequest {
  Bytes device_id;
  PublicKey pk_x;
  Nonce nonce{};
  std::vector<TargetedPayload> payloads;

  void encode(Writer& w) const;
  static RegistrationRequest decode(Reader& r);
};

// Error(InsufficientQuorumTargets, count) when fewer than t targets.
RegistrationRequest build_request(const DeviceSession& session,
                                  std::span<const PublicKey> targets, std::size_t t);

struct PartialSecretShare {
  std::uint32_t peer_id = 0;
  Bytes device_id;
  PublicKey pk_x;
  SealedBox sealed_d;  // d_i as 32 big-endian bytes, sealed to pk_x
  PublicKey pk_share;  // d_i * g2
  Signature share_sig;

  void encode(Writer& w) const;
  static PartialSecretShare decode(Reader& r);
};

Bytes share_message(ByteView device_id, const PublicKey& pk_x, const PublicKey& pk_share);
Bytes attestation_message(ByteView device_id, const PublicKey& pk_x, const PublicKey& pk_ps);

struct PartialSecretBundle {
  Bytes device_id;
  PublicKey pk_x;
  PublicKey pk_ps;
  MultiSignature attestation;  // bitmap = contributing set

  bool operator==(const PartialSecretBundle&) const = default;
  void encode(Writer& w) const;
  static PartialSecretBundle decode(Reader& r);
};

// Aggregation state between share collection and cosigning.
struct BundleProposal {
  Bytes device_id;
  PublicKey pk_x;
  SignerBitmap contributors;
  std::vector<PartialSecretShare> shares;  // contributing shares, roster order
  PublicKey pk_ps;
  std::vector<std::uint32_t> excluded;  // peers whose share_sig failed
};

enum class PeerFault {
  None,
  Offline,      // never answers
  WrongShare,   // pk_share inconsistent with the sealed d_i
  BadShareSig,  // share_sig over the wrong message
};

class ConsortiumPeer {
 public:
  ConsortiumPeer(std::uint32_t peer_id, KeyPair master, std::vector<PublicKey> roster,
                 std::size_t t, const SystemParams& params);

  std::uint32_t peer_id() const { return peer_id_; }
  const PublicKey& pk() const { return master_.pk; }
  const mscrypto::ProofOfPossession& pop() const { return master_.pop; }
  const std::vector<PublicKey>& roster() const { return roster_; }
  std::size_t threshold() const { return t_; }

  void set_fault(PeerFault f) { fault_ = f; }
  PeerFault fault() const { return fault_; }

  // Error(AuthFailure) if no payload for this peer opens or its contents
  // disagree with the clear fields; Error(ReplayRejected) on a seen nonce.
  PartialSecretShare issue_share(const RegistrationRequest& request);

  // Cosigns the attestation after checking the proposal includes this
  // peer's own share and pk_ps is the sum of correctly signed shares.
  // Error(AttestationInvalid) otherwise.
  Signature cosign(const BundleProposal& proposal) const;

 private:
  bool remember_nonce(const Nonce& n);

  std::uint32_t peer_id_;
  KeyPair master_;
  std::vector<PublicKey> roster_;
  std::size_t t_;
  SystemParams params_;
  PeerFault fault_ = PeerFault::None;
  // LRU by use counter; copy-safe.
  std::uint64_t use_clock_ = 0;
  std::unordered_map<std::string, std::uint64_t> seen_;
  std::map<std::uint64_t, std::string> by_use_;
};

// Error(InvalidParams) if t is out of [1, n].
std::vector<ConsortiumPeer> make_consortium(const SystemParams& params, std::size_t n,
                                            std::size_t t, std::uint64_t seed);

// Drops shares with failing signatures (listed in `excluded`);
// Error(ThresholdUnmet, valid_count) below t.
BundleProposal propose_bundle(std::span<const PartialSecretShare> shares,
                              std::span<const PublicKey> roster, std::size_t t,
                              const SystemParams& params);

// Aggregates cosignatures (peer_id, sig) for exactly the contributing set.
PartialSecretBundle assemble_bundle(const BundleProposal& proposal,
                                    std::span<const std::pair<std::uint32_t, Signature>> cosigs);

// propose_bundle followed by cosigning from each contributing peer.
PartialSecretBundle assemble_bundle(std::span<const PartialSecretShare> shares,
                                    std::span<const ConsortiumPeer> peers, std::size_t t,
                                    const SystemParams& params);

// pk_full must equal bundle.pk_x + bundle.pk_ps.
struct DeviceCredential {
  Bytes device_id;
  PublicKey pk_full;
  PartialSecretBundle bundle;
  std::uint64_t issued_at = 0;

  bool operator==(const DeviceCredential&) const = default;
  void encode(Writer& w) const;
  static DeviceCredential decode(Reader& r);
  Bytes to_bytes() const;
};

struct FinalizedDevice {
  DeviceCredential credential;
  SecretKey sk_full;
};

// Error(AttestationInvalid) on a bad or sub-threshold attestation or a
// bundle for another device; Error(ShareMismatch, peer_id) when a sealed d_i
// does not open or disagrees with its pk_share.
FinalizedDevice device_finalize(const DeviceSession& session, const PartialSecretBundle& bundle,
                                std::span<const PartialSecretShare> shares,
                                std::span<const PublicKey> roster, std::size_t t,
                                std::uint64_t issued_at, const SystemParams& params);

bool verify_credential(const DeviceCredential& credential, std::span<const PublicKey> roster,
                       std::size_t t, const SystemParams& params,
                       mscrypto::SigCache* cache = nullptr);

struct Registration {
  FinalizedDevice device;
  std::vector<std::string> transcript;  // "label hex" per message
};

// Whole flow against every peer in `peers`; offline peers are skipped.
Registration register_device(std::span<ConsortiumPeer> peers, ByteView device_id,
                             ByteView seed, std::uint64_t issued_at,
                             const SystemParams& params);

}  // namespace cpsec::registry
