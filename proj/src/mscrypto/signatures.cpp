// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>

#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/mscrypto.hpp"

namespace cpsec::mscrypto {

namespace {

constexpr std::string_view kKeygenSalt = "CPSEC-KEYGEN-SALT-V1";
constexpr std::size_t kWideScalarBytes = 48;

Digest cache_key(ByteView dst, const PublicKey& pk, ByteView msg, const Signature& sig) {
  Writer w;
  w.bytes(dst);
  pk.encode(w);
  w.bytes(msg);
  sig.encode(w);
  return Hasher("sigcache").update(w.data()).finish();
}

}  // namespace

const SystemParams& SystemParams::standard() {
  static const SystemParams params = [] {
    SystemParams p;
    p.curve_id = "BLS12-381";
    p.g1 = G1::generator();
    p.g2 = G2::generator();
    p.dst_sig = cpsec::to_bytes("CPSEC-V1-SIG-BLS12381G1_XMD:SHA-256_SSWU_RO_");
    p.dst_pop = cpsec::to_bytes("CPSEC-V1-POP-BLS12381G1_XMD:SHA-256_SSWU_RO_");
    p.dst_id = cpsec::to_bytes("CPSEC-V1-ID-HKDF-SHA-256_");
    return p;
  }();
  return params;
}

void SystemParams::validate() const {
  if (curve_id != "BLS12-381")
    throw Error(ErrorCode::InvalidParams, "unsupported curve " + curve_id);
  if (!(g1 == G1::generator()) || !(g2 == G2::generator()))
    throw Error(ErrorCode::InvalidParams, "non-standard generator");
  if (dst_sig.empty() || dst_pop.empty() || dst_id.empty())
    throw Error(ErrorCode::InvalidParams, "empty domain-separation tag");
  if (dst_sig == dst_pop || dst_sig == dst_id || dst_pop == dst_id)
    throw Error(ErrorCode::InvalidParams, "domain-separation tags must differ");
}

void SystemParams::encode(Writer& w) const {
  w.str(curve_id);
  w.fixed(g1.compress());
  w.fixed(g2.compress());
  w.bytes(dst_sig);
  w.bytes(dst_pop);
  w.bytes(dst_id);
}

SystemParams SystemParams::decode(Reader& r) {
  SystemParams p;
  p.curve_id = r.str(64);
  auto g1 = G1::decompress(r.fixed(G1::kCompressedSize));
  auto g2 = G2::decompress(r.fixed(G2::kCompressedSize));
  if (!g1 || !g2) throw Error(ErrorCode::DecodeError, "bad generator encoding");
  p.g1 = *g1;
  p.g2 = *g2;
  p.dst_sig = r.bytes(255);
  p.dst_pop = r.bytes(255);
  p.dst_id = r.bytes(255);
  p.validate();
  return p;
}

Bytes SystemParams::to_bytes() const {
  Writer w;
  encode(w);
  return std::move(w).take();
}

SecretKey::SecretKey(const Scalar& s) : s_(s) {
  if (s.is_zero()) throw Error(ErrorCode::DegenerateKey, "secret scalar is zero");
}

SecretKey SecretKey::import_bytes(ByteView bytes) {
  auto s = Scalar::from_canonical(bytes);
  if (!s) throw Error(ErrorCode::DecodeError, "secret key is not a canonical scalar");
  return SecretKey(*s);
}

PublicKey PublicKey::decode(Reader& r) {
  auto p = G2::decompress(r.fixed(G2::kCompressedSize));
  if (!p) throw Error(ErrorCode::DecodeError, "bad public key encoding");
  return {*p};
}

Bytes PublicKey::to_bytes() const {
  auto c = point.compress();
  return {c.begin(), c.end()};
}

Signature Signature::decode(Reader& r) {
  auto p = G1::decompress(r.fixed(G1::kCompressedSize));
  if (!p) throw Error(ErrorCode::DecodeError, "bad signature encoding");
  return {*p};
}

Bytes Signature::to_bytes() const {
  auto c = point.compress();
  return {c.begin(), c.end()};
}

SignerBitmap SignerBitmap::all(std::size_t size) {
  SignerBitmap b(size);
  for (std::size_t i = 0; i < size; ++i) b.set(i);
  return b;
}

std::size_t SignerBitmap::count() const {
  std::size_t n = 0;
  for (bool b : bits_) n += b ? 1 : 0;
  return n;
}

std::vector<std::size_t> SignerBitmap::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

void SignerBitmap::encode(Writer& w) const {
  w.u16(static_cast<std::uint16_t>(bits_.size()));
  Bytes packed((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  w.fixed(packed);
}

SignerBitmap SignerBitmap::decode(Reader& r) {
  std::size_t size = r.u16();
  auto packed = r.fixed((size + 7) / 8);
  SignerBitmap b(size);
  for (std::size_t i = 0; i < packed.size() * 8; ++i) {
    bool bit = (packed[i / 8] >> (i % 8)) & 1u;
    if (i >= size) {
      if (bit) throw Error(ErrorCode::DecodeError, "non-zero bitmap padding");
      continue;
    }
    b.set(i, bit);
  }
  return b;
}

void MultiSignature::encode(Writer& w) const {
  agg_sig.encode(w);
  signers.encode(w);
}

MultiSignature MultiSignature::decode(Reader& r) {
  MultiSignature ms;
  ms.agg_sig = Signature::decode(r);
  ms.signers = SignerBitmap::decode(r);
  return ms;
}

std::size_t SigCache::DigestHash::operator()(const Digest& d) const noexcept {
  std::size_t h;
  std::memcpy(&h, d.data(), sizeof(h));
  return h;
}

std::optional<bool> SigCache::lookup(const Digest& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

KeyPair keygen(const SystemParams& params, ByteView seed) {
  if (seed.size() != 32) throw Error(ErrorCode::InvalidParams, "keygen seed must be 32 bytes");
  for (std::uint32_t counter = 0;; ++counter) {
    Writer info;
    info.str("keygen");
    info.u32(counter);
    auto okm = hkdf_sha256(seed, as_bytes(kKeygenSalt), info.data(), kWideScalarBytes);
    auto s = Scalar::reduce(okm);
    if (s.is_zero()) continue;
    SecretKey sk(s);
    PublicKey pk{params.g2 * s};
    auto pop = prove_possession(sk, pk, params);
    return {sk, pk, pop};
  }
}

Signature sign(const SecretKey& sk, ByteView msg, const SystemParams& params) {
  return {G1::hash_to(msg, params.dst_sig) * sk.scalar()};
}

namespace {

bool verify_under(ByteView dst, const PublicKey& pk, ByteView msg, const Signature& sig,
                  const SystemParams& params, SigCache* cache) {
  Digest key{};
  if (cache) {
    key = cache_key(dst, pk, msg, sig);
    if (auto hit = cache->lookup(key)) return *hit;
  }
  if (!pk.valid()) {
    if (cache) cache->store(key, false);
    return false;
  }
  auto h = G1::hash_to(msg, dst);
  const std::pair<G1, G2> terms[] = {{sig.point, -params.g2}, {h, pk.point}};
  bool ok = pairing_product_is_one(terms);
  if (cache) cache->store(key, ok);
  return ok;
}

}  // namespace

bool verify(const PublicKey& pk, ByteView msg, const Signature& sig,
            const SystemParams& params, SigCache* cache) {
  return verify_under(params.dst_sig, pk, msg, sig, params, cache);
}

ProofOfPossession prove_possession(const SecretKey& sk, const PublicKey& pk,
                                   const SystemParams& params) {
  auto encoded = pk.to_bytes();
  return {{G1::hash_to(encoded, params.dst_pop) * sk.scalar()}};
}

bool verify_possession(const PublicKey& pk, const ProofOfPossession& pop,
                       const SystemParams& params, SigCache* cache) {
  return verify_under(params.dst_pop, pk, pk.to_bytes(), pop.sig, params, cache);
}

Signature aggregate_signatures(std::span<const Signature> sigs) {
  if (sigs.empty()) throw Error(ErrorCode::EmptyAggregate);
  G1 acc;
  for (const auto& s : sigs) acc += s.point;
  return {acc};
}

PublicKey aggregate_public_keys(std::span<const std::pair<PublicKey, ProofOfPossession>> keys,
                                const SystemParams& params, SigCache* cache) {
  if (keys.empty()) throw Error(ErrorCode::EmptyAggregate);
  G2 acc;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!verify_possession(keys[i].first, keys[i].second, params, cache))
      throw Error(ErrorCode::RogueKeyRejected, static_cast<std::int64_t>(i));
    acc += keys[i].first.point;
  }
  return {acc};
}

PublicKey aggregate_flagged(std::span<const PublicKey> roster, const SignerBitmap& signers) {
  if (signers.size() != roster.size())
    throw Error(ErrorCode::BitmapMismatch,
                "bitmap has " + std::to_string(signers.size()) + " bits, roster has " +
                    std::to_string(roster.size()) + " keys");
  G2 acc;
  for (std::size_t i = 0; i < roster.size(); ++i)
    if (signers.test(i)) acc += roster[i].point;
  return {acc};
}

bool verify_multisig(std::span<const PublicKey> roster, const MultiSignature& ms, ByteView msg,
                     const SystemParams& params, SigCache* cache) {
  auto apk = aggregate_flagged(roster, ms.signers);
  if (ms.signers.count() == 0) return false;
  return verify(apk, msg, ms.agg_sig, params, cache);
}

Scalar hash_to_identity_scalar(ByteView id, const SecretKey& peer_secret,
                               const SystemParams& params) {
  auto ikm = peer_secret.export_bytes();
  for (std::uint32_t counter = 0;; ++counter) {
    Writer info;
    info.bytes(id);
    info.u32(counter);
    auto okm = hkdf_sha256(ikm, params.dst_id, info.data(), kWideScalarBytes);
    auto s = Scalar::reduce(okm);
    if (!s.is_zero()) return s;
  }
}

CombinedKey combine_keys(const SecretKey& device_sk, const Scalar& partial,
                         const SystemParams& params) {
  if (partial.is_zero()) throw Error(ErrorCode::DegenerateKey, "partial secret is zero");
  auto full = device_sk.scalar() + partial;
  if (full.is_zero()) throw Error(ErrorCode::DegenerateKey, "x + d == 0 mod q");
  PublicKey pk{params.g2 * device_sk.scalar() + params.g2 * partial};
  return {SecretKey(full), pk};
}

}  // namespace cpsec::mscrypto
