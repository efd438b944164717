// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pairing-based signature core over BLS12-381.
//
// Minimal-signature convention: signatures and message hashes live in G1,
// public keys in G2. Verification is the pairing check
//     e(sig, g2) == e(H(msg), pk).
// Same-message multi-signatures are plain group sums, guarded against rogue
// keys by a proof of possession (a signature over the key's own encoding
// under a separate hashing domain).

#include <blst.h>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpsec/bytes.hpp"
#include "cpsec/codec.hpp"

namespace cpsec::mscrypto {

// Element of the scalar field Z_q, q the prime order of G1/G2/GT.
class Scalar {
 public:
  Scalar();

  static Scalar from_u64(std::uint64_t v);
  // Interprets big-endian bytes of any length and reduces mod q.
  static Scalar reduce(ByteView big_endian);
  // Exactly 32 big-endian bytes strictly below q; nullopt otherwise.
  static std::optional<Scalar> from_canonical(ByteView big_endian);

  std::array<std::uint8_t, 32> to_bytes() const;
  bool is_zero() const;

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar operator-() const;
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  bool operator==(const Scalar& o) const;

  // Little-endian canonical bytes, the layout blst's point multiplication
  // consumes.
  blst_scalar to_blst() const;

 private:
  blst_fr fr_;
};

// Big-endian encoding of q.
std::array<std::uint8_t, 32> group_order();

struct G1Tag {};
struct G2Tag {};

template <class Tag>
struct GroupTraits;

template <>
struct GroupTraits<G1Tag> {
  using Raw = blst_p1;
  using Affine = blst_p1_affine;
  static constexpr std::size_t kCompressedSize = 48;
};

template <>
struct GroupTraits<G2Tag> {
  using Raw = blst_p2;
  using Affine = blst_p2_affine;
  static constexpr std::size_t kCompressedSize = 96;
};

// Point in the prime-order subgroup of one of the two source curves.
// Default-constructed value is the identity.
template <class Tag>
class Point {
 public:
  using Traits = GroupTraits<Tag>;
  using Raw = typename Traits::Raw;
  using Affine = typename Traits::Affine;
  static constexpr std::size_t kCompressedSize = Traits::kCompressedSize;
  using Compressed = std::array<std::uint8_t, kCompressedSize>;

  Point();
  explicit Point(const Raw& raw) : p_(raw) {}

  static Point generator();
  // RFC 9380 hash-to-curve (SSWU, random oracle) under `dst`.
  static Point hash_to(ByteView msg, ByteView dst);
  // Rejects malformed encodings, off-curve points and points outside the
  // prime-order subgroup.
  static std::optional<Point> decompress(ByteView bytes);

  Point operator+(const Point& o) const;
  Point operator-(const Point& o) const;
  Point operator-() const;
  Point& operator+=(const Point& o) { return *this = *this + o; }
  Point operator*(const Scalar& k) const;
  Point dbl() const;

  bool operator==(const Point& o) const;
  bool is_identity() const;
  bool in_subgroup() const;

  Compressed compress() const;
  Affine affine() const;
  const Raw& raw() const { return p_; }

 private:
  Raw p_;
};

template <class Tag>
Point<Tag> operator*(const Scalar& k, const Point<Tag>& p) {
  return p * k;
}

using G1 = Point<G1Tag>;
using G2 = Point<G2Tag>;

// True iff prod_i e(g1_i, g2_i) == 1 in GT.
bool pairing_product_is_one(std::span<const std::pair<G1, G2>> terms);

struct SystemParams {
  std::string curve_id;
  G1 g1;
  G2 g2;
  Bytes dst_sig;
  Bytes dst_pop;
  Bytes dst_id;

  static const SystemParams& standard();

  // Throws Error(InvalidParams) if the tags are not pairwise distinct or the
  // generators are not the curve's.
  void validate() const;

  void encode(Writer& w) const;
  static SystemParams decode(Reader& r);
  Bytes to_bytes() const;
};

class SecretKey {
 public:
  // Throws Error(DegenerateKey) on zero.
  explicit SecretKey(const Scalar& s);

  const Scalar& scalar() const { return s_; }

  // Explicit key-file export; secret keys appear in no protocol message.
  std::array<std::uint8_t, 32> export_bytes() const { return s_.to_bytes(); }
  static SecretKey import_bytes(ByteView bytes);

 private:
  Scalar s_;
};

struct PublicKey {
  G2 point;

  bool operator==(const PublicKey&) const = default;
  // Subgroup member and not the identity.
  bool valid() const { return !point.is_identity() && point.in_subgroup(); }

  void encode(Writer& w) const { w.fixed(point.compress()); }
  static PublicKey decode(Reader& r);
  Bytes to_bytes() const;
};

struct Signature {
  G1 point;

  bool operator==(const Signature&) const = default;
  void encode(Writer& w) const { w.fixed(point.compress()); }
  static Signature decode(Reader& r);
  Bytes to_bytes() const;
};

struct ProofOfPossession {
  Signature sig;

  bool operator==(const ProofOfPossession&) const = default;
  void encode(Writer& w) const { sig.encode(w); }
  static ProofOfPossession decode(Reader& r) { return {Signature::decode(r)}; }
};

struct KeyPair {
  SecretKey sk;
  PublicKey pk;
  ProofOfPossession pop;
};

// Ordered bit set over a signer roster. Encoded as a u16 bit length followed
// by ceil(len/8) bytes, bit i at byte i/8, position i%8; padding bits must
// be zero.
class SignerBitmap {
 public:
  SignerBitmap() = default;
  explicit SignerBitmap(std::size_t size) : bits_(size, false) {}

  static SignerBitmap all(std::size_t size);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.at(i); }
  void set(std::size_t i, bool v = true) { bits_.at(i) = v; }
  std::size_t count() const;
  std::vector<std::size_t> indices() const;

  bool operator==(const SignerBitmap&) const = default;

  void encode(Writer& w) const;
  static SignerBitmap decode(Reader& r);

 private:
  std::vector<bool> bits_;
};

struct MultiSignature {
  Signature agg_sig;
  SignerBitmap signers;

  bool operator==(const MultiSignature&) const = default;
  void encode(Writer& w) const;
  static MultiSignature decode(Reader& r);
};

// Memo of verification outcomes keyed by a digest of (domain, key, message,
// signature). Sound because verification is a pure function of those bytes.
class SigCache {
 public:
  std::optional<bool> lookup(const Digest& key) const;
  void store(const Digest& key, bool ok) { entries_[key] = ok; }
  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }

 private:
  struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept;
  };
  std::unordered_map<Digest, bool, DigestHash> entries_;
  mutable std::size_t hits_ = 0;
};

// Derives (sk, pk, pop) from 32 bytes of caller entropy. Deterministic;
// a zero scalar is re-derived with an incremented counter.
KeyPair keygen(const SystemParams& params, ByteView seed);

Signature sign(const SecretKey& sk, ByteView msg, const SystemParams& params);

// Returns false (never throws) for an identity or non-subgroup key.
bool verify(const PublicKey& pk, ByteView msg, const Signature& sig,
            const SystemParams& params, SigCache* cache = nullptr);

ProofOfPossession prove_possession(const SecretKey& sk, const PublicKey& pk,
                                   const SystemParams& params);
bool verify_possession(const PublicKey& pk, const ProofOfPossession& pop,
                       const SystemParams& params, SigCache* cache = nullptr);

// Throws Error(EmptyAggregate) on an empty list.
Signature aggregate_signatures(std::span<const Signature> sigs);

// Throws Error(EmptyAggregate) on an empty list and
// Error(RogueKeyRejected, index) on the first key whose proof fails.
PublicKey aggregate_public_keys(std::span<const std::pair<PublicKey, ProofOfPossession>> keys,
                                const SystemParams& params, SigCache* cache = nullptr);

// Sum of the flagged roster keys; Error(BitmapMismatch) on size mismatch.
PublicKey aggregate_flagged(std::span<const PublicKey> roster, const SignerBitmap& signers);

// Throws Error(BitmapMismatch) when the bitmap and roster sizes differ.
// An empty signer set verifies as false.
bool verify_multisig(std::span<const PublicKey> roster, const MultiSignature& ms, ByteView msg,
                     const SystemParams& params, SigCache* cache = nullptr);

// Per-peer partial-secret contribution: HKDF keyed by the peer secret under
// params.dst_id, reduced mod q, never zero.
Scalar hash_to_identity_scalar(ByteView id, const SecretKey& peer_secret,
                               const SystemParams& params);

struct CombinedKey {
  SecretKey sk;
  PublicKey pk;
};

// sk_full = x + d mod q, pk_full = x*g2 + d*g2. Error(DegenerateKey) if
// d == 0 or x + d == 0.
CombinedKey combine_keys(const SecretKey& device_sk, const Scalar& partial,
                         const SystemParams& params);

}  // namespace cpsec::mscrypto
