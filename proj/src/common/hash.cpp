// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/hash.hpp"

#include <sodium.h>

#include <stdexcept>

namespace cpsec {

namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

struct Hasher::State {
  crypto_hash_sha256_state st;
};

Hasher::Hasher(std::string_view domain) : state_(new State) {
  crypto_hash_sha256_init(&state_->st);
  std::uint8_t len = static_cast<std::uint8_t>(domain.size());
  crypto_hash_sha256_update(&state_->st, &len, 1);
  update(as_bytes(domain));
}

Hasher::~Hasher() { delete state_; }

Hasher& Hasher::update(ByteView data) {
  crypto_hash_sha256_update(&state_->st, data.data(), data.size());
  return *this;
}

Digest Hasher::finish() {
  Digest out{};
  crypto_hash_sha256_final(&state_->st, out.data());
  return out;
}

Digest hmac_sha256(ByteView key, ByteView message) {
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, message.data(), message.size());
  Digest out{};
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length) {
  if (length > 255 * 32) throw std::invalid_argument("hkdf output too long");
  Digest zero_salt{};
  ByteView effective_salt = salt.empty() ? ByteView(zero_salt) : salt;
  Digest prk = hmac_sha256(effective_salt, ikm);

  Bytes out;
  out.reserve(length);
  Bytes block;
  for (std::uint8_t counter = 1; out.size() < length; ++counter) {
    Bytes input = block;
    append(input, info);
    input.push_back(counter);
    auto t = hmac_sha256(prk, input);
    block.assign(t.begin(), t.end());
    std::size_t take = std::min<std::size_t>(t.size(), length - out.size());
    out.insert(out.end(), t.begin(), t.begin() + static_cast<long>(take));
  }
  sodium_memzero(prk.data(), prk.size());
  return out;
}

Bytes aead_seal(ByteView key, ByteView plaintext, ByteView associated) {
  ensure_sodium();
  if (key.size() != kAeadKeySize) throw std::invalid_argument("aead key size");
  std::uint8_t nonce[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
  Bytes out(plaintext.size() + kAeadTagSize);
  unsigned long long out_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &out_len, plaintext.data(),
                                            plaintext.size(), associated.data(),
                                            associated.size(), nullptr, nonce, key.data());
  out.resize(out_len);
  return out;
}

std::optional<Bytes> aead_open(ByteView key, ByteView ciphertext, ByteView associated) {
  ensure_sodium();
  if (key.size() != kAeadKeySize || ciphertext.size() < kAeadTagSize) return std::nullopt;
  std::uint8_t nonce[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
  Bytes out(ciphertext.size() - kAeadTagSize);
  unsigned long long out_len = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &out_len, nullptr,
                                                ciphertext.data(), ciphertext.size(),
                                                associated.data(), associated.size(),
                                                nonce, key.data()) != 0)
    return std::nullopt;
  out.resize(out_len);
  return out;
}

}  // namespace cpsec
