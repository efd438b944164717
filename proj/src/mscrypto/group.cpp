// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <type_traits>

#include "cpsec/mscrypto.hpp"

namespace cpsec::mscrypto {

namespace {

constexpr std::size_t kScalarBits = 255;

bool limbs_equal(const blst_fr& a, const blst_fr& b) {
  return std::memcmp(a.l, b.l, sizeof(a.l)) == 0;
}

// Encodings that already passed the full decode checks. Verifiers decode
// the same rosters and credentials over and over.
template <class Tag>
class DecodeMemo {
 public:
  using P = Point<Tag>;
  static DecodeMemo& instance() {
    static DecodeMemo memo;
    return memo;
  }
  std::optional<P> find(ByteView bytes) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key(bytes));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  void insert(ByteView bytes, const P& p) {
    std::lock_guard lock(mu_);
    if (entries_.size() >= kCapacity) entries_.clear();
    entries_.emplace(key(bytes), p);
  }

 private:
  static constexpr std::size_t kCapacity = 1 << 16;
  static typename P::Compressed key(ByteView bytes) {
    typename P::Compressed k;
    std::copy(bytes.begin(), bytes.end(), k.begin());
    return k;
  }
  std::mutex mu_;
  std::map<typename P::Compressed, P> entries_;
};

}  // namespace

Scalar::Scalar() { std::memset(&fr_, 0, sizeof(fr_)); }

Scalar Scalar::from_u64(std::uint64_t v) {
  const std::uint64_t limbs[4] = {v, 0, 0, 0};
  Scalar s;
  blst_fr_from_uint64(&s.fr_, limbs);
  return s;
}

Scalar Scalar::reduce(ByteView big_endian) {
  blst_scalar tmp;
  blst_scalar_from_be_bytes(&tmp, big_endian.data(), big_endian.size());
  Scalar s;
  blst_fr_from_scalar(&s.fr_, &tmp);
  return s;
}

std::optional<Scalar> Scalar::from_canonical(ByteView big_endian) {
  if (big_endian.size() != 32) return std::nullopt;
  blst_scalar tmp;
  blst_scalar_from_bendian(&tmp, big_endian.data());
  if (!blst_scalar_fr_check(&tmp)) return std::nullopt;
  Scalar s;
  blst_fr_from_scalar(&s.fr_, &tmp);
  return s;
}

std::array<std::uint8_t, 32> Scalar::to_bytes() const {
  blst_scalar tmp;
  blst_scalar_from_fr(&tmp, &fr_);
  std::array<std::uint8_t, 32> out{};
  blst_bendian_from_scalar(out.data(), &tmp);
  return out;
}

blst_scalar Scalar::to_blst() const {
  blst_scalar tmp;
  blst_scalar_from_fr(&tmp, &fr_);
  return tmp;
}

bool Scalar::is_zero() const { return limbs_equal(fr_, Scalar().fr_); }

Scalar Scalar::operator+(const Scalar& o) const {
  Scalar r;
  blst_fr_add(&r.fr_, &fr_, &o.fr_);
  return r;
}

Scalar Scalar::operator-(const Scalar& o) const {
  Scalar r;
  blst_fr_sub(&r.fr_, &fr_, &o.fr_);
  return r;
}

Scalar Scalar::operator*(const Scalar& o) const {
  Scalar r;
  blst_fr_mul(&r.fr_, &fr_, &o.fr_);
  return r;
}

Scalar Scalar::operator-() const {
  Scalar r;
  blst_fr_cneg(&r.fr_, &fr_, true);
  return r;
}

bool Scalar::operator==(const Scalar& o) const { return limbs_equal(fr_, o.fr_); }

std::array<std::uint8_t, 32> group_order() {
  // q = 0x73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001
  return {0x73, 0xed, 0xa7, 0x53, 0x29, 0x9d, 0x7d, 0x48, 0x33, 0x39, 0xd8,
          0x08, 0x09, 0xa1, 0xd8, 0x05, 0x53, 0xbd, 0xa4, 0x02, 0xff, 0xfe,
          0x5b, 0xfe, 0xff, 0xff, 0xff, 0xff, 0x00, 0x00, 0x00, 0x01};
}

template <class Tag>
Point<Tag>::Point() {
  std::memset(&p_, 0, sizeof(p_));
}

template <class Tag>
Point<Tag> Point<Tag>::generator() {
  if constexpr (std::is_same_v<Tag, G1Tag>)
    return Point(*blst_p1_generator());
  else
    return Point(*blst_p2_generator());
}

template <class Tag>
Point<Tag> Point<Tag>::hash_to(ByteView msg, ByteView dst) {
  Point out;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_hash_to_g1(&out.p_, msg.data(), msg.size(), dst.data(), dst.size(), nullptr, 0);
  else
    blst_hash_to_g2(&out.p_, msg.data(), msg.size(), dst.data(), dst.size(), nullptr, 0);
  return out;
}

template <class Tag>
std::optional<Point<Tag>> Point<Tag>::decompress(ByteView bytes) {
  if (bytes.size() != kCompressedSize) return std::nullopt;
  auto& memo = DecodeMemo<Tag>::instance();
  if (auto hit = memo.find(bytes)) return hit;
  Affine a;
  Point out;
  if constexpr (std::is_same_v<Tag, G1Tag>) {
    if (blst_p1_uncompress(&a, bytes.data()) != BLST_SUCCESS) return std::nullopt;
    if (!blst_p1_affine_in_g1(&a)) return std::nullopt;
    blst_p1_from_affine(&out.p_, &a);
  } else {
    if (blst_p2_uncompress(&a, bytes.data()) != BLST_SUCCESS) return std::nullopt;
    if (!blst_p2_affine_in_g2(&a)) return std::nullopt;
    blst_p2_from_affine(&out.p_, &a);
  }
  // One encoding per point.
  auto again = out.compress();
  if (!std::equal(again.begin(), again.end(), bytes.begin())) return std::nullopt;
  memo.insert(bytes, out);
  return out;
}

template <class Tag>
Point<Tag> Point<Tag>::operator+(const Point& o) const {
  Point out;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_add_or_double(&out.p_, &p_, &o.p_);
  else
    blst_p2_add_or_double(&out.p_, &p_, &o.p_);
  return out;
}

template <class Tag>
Point<Tag> Point<Tag>::operator-() const {
  Point out = *this;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_cneg(&out.p_, true);
  else
    blst_p2_cneg(&out.p_, true);
  return out;
}

template <class Tag>
Point<Tag> Point<Tag>::operator-(const Point& o) const {
  return *this + (-o);
}

template <class Tag>
Point<Tag> Point<Tag>::operator*(const Scalar& k) const {
  auto s = k.to_blst();
  Point out;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_mult(&out.p_, &p_, s.b, kScalarBits);
  else
    blst_p2_mult(&out.p_, &p_, s.b, kScalarBits);
  return out;
}

template <class Tag>
Point<Tag> Point<Tag>::dbl() const {
  Point out;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_double(&out.p_, &p_);
  else
    blst_p2_double(&out.p_, &p_);
  return out;
}

template <class Tag>
bool Point<Tag>::operator==(const Point& o) const {
  if constexpr (std::is_same_v<Tag, G1Tag>)
    return blst_p1_is_equal(&p_, &o.p_);
  else
    return blst_p2_is_equal(&p_, &o.p_);
}

template <class Tag>
bool Point<Tag>::is_identity() const {
  if constexpr (std::is_same_v<Tag, G1Tag>)
    return blst_p1_is_inf(&p_);
  else
    return blst_p2_is_inf(&p_);
}

template <class Tag>
bool Point<Tag>::in_subgroup() const {
  if constexpr (std::is_same_v<Tag, G1Tag>)
    return blst_p1_in_g1(&p_);
  else
    return blst_p2_in_g2(&p_);
}

template <class Tag>
typename Point<Tag>::Compressed Point<Tag>::compress() const {
  Compressed out{};
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_compress(out.data(), &p_);
  else
    blst_p2_compress(out.data(), &p_);
  return out;
}

template <class Tag>
typename Point<Tag>::Affine Point<Tag>::affine() const {
  Affine a;
  if constexpr (std::is_same_v<Tag, G1Tag>)
    blst_p1_to_affine(&a, &p_);
  else
    blst_p2_to_affine(&a, &p_);
  return a;
}

template class Point<G1Tag>;
template class Point<G2Tag>;

bool pairing_product_is_one(std::span<const std::pair<G1, G2>> terms) {
  blst_fp12 acc = *blst_fp12_one();
  for (const auto& [p, q] : terms) {
    // e(O, Q) = e(P, O) = 1.
    if (p.is_identity() || q.is_identity()) continue;
    auto pa = p.affine();
    auto qa = q.affine();
    blst_fp12 f;
    blst_miller_loop(&f, &qa, &pa);
    blst_fp12_mul(&acc, &acc, &f);
  }
  blst_final_exp(&acc, &acc);
  return blst_fp12_is_one(&acc);
}

}  // namespace cpsec::mscrypto
