// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Test-only reference computations. They deliberately avoid the library's
// Scalar arithmetic and Point::operator* so that a bug there cannot make
// the expected value agree with the actual one.

#include <blst.h>
#include <gmp.h>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsec/mscrypto.hpp"

namespace oracle {

using Be32 = std::array<std::uint8_t, 32>;

inline std::string to_hex_str(const Be32& v) {
  static constexpr char d[] = "0123456789abcdef";
  std::string s;
  for (auto b : v) {
    s.push_back(d[b >> 4]);
    s.push_back(d[b & 15]);
  }
  return s;
}

// (sum of big-endian scalars) mod q, via GMP.
inline Be32 scalar_sum(std::span<const Be32> terms) {
  mpz_t acc, q, t;
  mpz_inits(acc, q, t, nullptr);
  auto order = cpsec::mscrypto::group_order();
  mpz_import(q, 32, 1, 1, 1, 0, order.data());
  for (const auto& term : terms) {
    mpz_import(t, 32, 1, 1, 1, 0, term.data());
    mpz_add(acc, acc, t);
  }
  mpz_mod(acc, acc, q);
  Be32 out{};
  std::size_t count = 0;
  std::uint8_t buf[64] = {};
  mpz_export(buf, &count, 1, 1, 1, 0, acc);
  for (std::size_t i = 0; i < count; ++i) out[32 - count + i] = buf[i];
  mpz_clears(acc, q, t, nullptr);
  return out;
}

inline Be32 be_from_u64(std::uint64_t v) {
  Be32 out{};
  for (int i = 0; i < 8; ++i) out[31 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

inline bool is_prime(const Be32& v) {
  mpz_t z;
  mpz_init(z);
  mpz_import(z, 32, 1, 1, 1, 0, v.data());
  bool prime = mpz_probab_prime_p(z, 50) > 0;
  mpz_clear(z);
  return prime;
}

// Left-to-right double-and-add over blst's raw group law.
inline blst_p1 mul_g1(const blst_p1& base, const Be32& k) {
  blst_p1 acc{};
  for (auto byte : k)
    for (int bit = 7; bit >= 0; --bit) {
      blst_p1_double(&acc, &acc);
      if ((byte >> bit) & 1) blst_p1_add_or_double(&acc, &acc, &base);
    }
  return acc;
}

inline blst_p2 mul_g2(const blst_p2& base, const Be32& k) {
  blst_p2 acc{};
  for (auto byte : k)
    for (int bit = 7; bit >= 0; --bit) {
      blst_p2_double(&acc, &acc);
      if ((byte >> bit) & 1) blst_p2_add_or_double(&acc, &acc, &base);
    }
  return acc;
}

inline cpsec::mscrypto::G2 g2_times(const Be32& k) {
  return cpsec::mscrypto::G2(mul_g2(*blst_p2_generator(), k));
}

inline cpsec::mscrypto::G1 g1_times(const cpsec::mscrypto::G1& base, const Be32& k) {
  return cpsec::mscrypto::G1(mul_g1(base.raw(), k));
}

}  // namespace oracle
