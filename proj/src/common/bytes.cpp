// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "cpsec/bytes.hpp"
#include "cpsec/codec.hpp"
#include "cpsec/error.hpp"

namespace cpsec {

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::DecodeError, "odd-length hex");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::DecodeError, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void Writer::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v >> 8));
  u8(static_cast<std::uint8_t>(v));
}

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void Writer::bytes(ByteView data) {
  u32(static_cast<std::uint32_t>(data.size()));
  fixed(data);
}

ByteView Reader::fixed(std::size_t n) {
  if (n > remaining()) throw Error(ErrorCode::DecodeError, "truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return fixed(1)[0]; }

std::uint16_t Reader::u16() {
  auto b = fixed(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
  auto b = fixed(4);
  std::uint32_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Reader::u64() {
  auto b = fixed(8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

bool Reader::boolean() {
  auto v = u8();
  if (v > 1) throw Error(ErrorCode::DecodeError, "non-canonical boolean");
  return v == 1;
}

Bytes Reader::bytes(std::size_t max_len) {
  auto len = u32();
  if (len > max_len) throw Error(ErrorCode::DecodeError, "length exceeds limit");
  auto v = fixed(len);
  return {v.begin(), v.end()};
}

std::string Reader::str(std::size_t max_len) {
  auto b = bytes(max_len);
  return {b.begin(), b.end()};
}

std::uint32_t Reader::count(std::size_t min_element_size) {
  auto n = u32();
  if (min_element_size > 0 && n > remaining() / min_element_size)
    throw Error(ErrorCode::DecodeError, "element count exceeds input");
  return n;
}

void Reader::expect_end() const {
  if (!at_end()) throw Error(ErrorCode::DecodeError, "trailing bytes");
}

}  // namespace cpsec
