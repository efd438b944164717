// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

#include "cpsec/bytes.hpp"

namespace cpsec {

// Seeded generator for the simulations. mt19937_64 output is fixed by the
// standard; the draws below avoid the implementation-defined std::
// distributions so runs reproduce across toolchains.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream derived from (seed, label).
  static DetRng derive(std::uint64_t seed, std::string_view label);

  std::uint64_t next() { return engine_(); }

  // Uniform in [lo, hi], inclusive.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return p > 0.0 && unit() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform(0, i - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

  Bytes bytes(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace cpsec
