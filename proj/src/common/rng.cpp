// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/rng.hpp"

#include "cpsec/codec.hpp"
#include "cpsec/hash.hpp"

namespace cpsec {

DetRng DetRng::derive(std::uint64_t seed, std::string_view label) {
  Writer w;
  w.u64(seed);
  w.str(label);
  auto d = sha256(w.data());
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | d[i];
  return DetRng(s);
}

std::uint64_t DetRng::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo) return lo;
  std::uint64_t span = hi - lo;
  if (span == ~std::uint64_t{0}) return next();
  std::uint64_t range = span + 1;
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return lo + v % range;
}

Bytes DetRng::bytes(std::size_t n) {
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    auto v = next();
    for (std::size_t j = 0; j < 8 && i + j < n; ++j) out[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return out;
}

}  // namespace cpsec
