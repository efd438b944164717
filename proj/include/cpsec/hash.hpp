// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

#include "cpsec/bytes.hpp"

namespace cpsec {

Digest sha256(ByteView data);

// Incremental SHA-256 with a leading domain label, so digests of different
// object kinds never collide on equal bodies.
class Hasher {
 public:
  explicit Hasher(std::string_view domain);
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& update(ByteView data);
  Digest finish();

 private:
  struct State;
  State* state_;
};

Digest hmac_sha256(ByteView key, ByteView message);

// RFC 5869 HKDF with HMAC-SHA256. `length` must be <= 255 * 32.
Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length);

// ChaCha20-Poly1305 (IETF). Keys are single-use in every caller, so the
// nonce is fixed at zero.
constexpr std::size_t kAeadKeySize = 32;
constexpr std::size_t kAeadTagSize = 16;
Bytes aead_seal(ByteView key, ByteView plaintext, ByteView associated);
std::optional<Bytes> aead_open(ByteView key, ByteView ciphertext, ByteView associated);

}  // namespace cpsec
