// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cpsec {

enum class ErrorCode {
  DecodeError,
  InvalidParams,
  // mscrypto
  EmptyAggregate,
  RogueKeyRejected,
  BitmapMismatch,
  DegenerateKey,
  // registry
  InsufficientQuorumTargets,
  AuthFailure,
  ReplayRejected,
  ThresholdUnmet,
  AttestationInvalid,
  ShareMismatch,
  DeviceIdTooLong,
  // ledger
  InvalidAction,
  PolicyUnmet,
  DigestDivergence,
  AclDenied,
  KeyNotFound,
  BrokenChain,
  QuorumInvalid,
  DuplicateDevice,
  CredentialInvalid,
  // ordering
  QueueFull,
  NoProgress,
  NoQuorum,
  DivergentHistory,
  // dhtstore
  BootstrapUnreachable,
  PayloadTooLarge,
  NotFound,
  IntegrityFailure,
  // bench / cli
  ConfigInvalid,
  IoFailure,
  EmptyReport,
};

std::string_view error_name(ErrorCode code);

// Protocol-level failure. what() renders as `Name(detail)` or `Name: message`,
// so the CLI can print it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message = {});
  Error(ErrorCode code, std::int64_t value, std::string message = {});

  ErrorCode code() const noexcept { return code_; }
  // Numeric payload for errors such as ThresholdUnmet(count) or
  // RogueKeyRejected(index).
  std::optional<std::int64_t> value() const noexcept { return value_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> value_;
  std::string message_;
};

}  // namespace cpsec
