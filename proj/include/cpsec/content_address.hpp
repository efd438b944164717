// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cpsec/bytes.hpp"
#include "cpsec/codec.hpp"
#include "cpsec/hash.hpp"

namespace cpsec {

// SHA-256 of a payload; both its storage key and its integrity proof.
struct ContentAddress {
  Digest digest{};

  static ContentAddress of(ByteView payload) { return {sha256(payload)}; }
  bool matches(ByteView payload) const { return sha256(payload) == digest; }

  std::string hex() const { return to_hex(digest); }
  auto operator<=>(const ContentAddress&) const = default;

  void encode(Writer& w) const { w.fixed(digest); }
  static ContentAddress decode(Reader& r) { return {r.array<32>()}; }
};

}  // namespace cpsec
