// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Canonical byte encoding shared by every wire and file format:
// big-endian fixed-width integers, u32 length prefixes for variable data.
// Reader is strict: short input, oversize lengths and leftover bytes all
// raise Error(DecodeError).

#include <cstdint>
#include <string>
#include <string_view>

#include "cpsec/bytes.hpp"

namespace cpsec {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void boolean(bool v) { u8(v ? 1 : 0); }
  // Raw bytes with no length prefix.
  void fixed(ByteView data) { append(buf_, data); }
  // u32 length prefix followed by the bytes.
  void bytes(ByteView data);
  void str(std::string_view s) { bytes(as_bytes(s)); }

  const Bytes& data() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  bool boolean();
  ByteView fixed(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    auto v = fixed(N);
    std::array<std::uint8_t, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  Bytes bytes(std::size_t max_len = 1u << 26);
  std::string str(std::size_t max_len = 1u << 16);
  // Bounded element count for a following sequence; rejects counts that
  // could not possibly fit in the remaining input.
  std::uint32_t count(std::size_t min_element_size = 1);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  void expect_end() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace cpsec
