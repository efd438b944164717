// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpsec/error.hpp"

namespace cpsec {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyAggregate: return "EmptyAggregate";
    case ErrorCode::RogueKeyRejected: return "RogueKeyRejected";
    case ErrorCode::BitmapMismatch: return "BitmapMismatch";
    case ErrorCode::DegenerateKey: return "DegenerateKey";
    case ErrorCode::InsufficientQuorumTargets: return "InsufficientQuorumTargets";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::ReplayRejected: return "ReplayRejected";
    case ErrorCode::ThresholdUnmet: return "ThresholdUnmet";
    case ErrorCode::AttestationInvalid: return "AttestationInvalid";
    case ErrorCode::ShareMismatch: return "ShareMismatch";
    case ErrorCode::DeviceIdTooLong: return "DeviceIdTooLong";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::PolicyUnmet: return "PolicyUnmet";
    case ErrorCode::DigestDivergence: return "DigestDivergence";
    case ErrorCode::AclDenied: return "AclDenied";
    case ErrorCode::KeyNotFound: return "KeyNotFound";
    case ErrorCode::BrokenChain: return "BrokenChain";
    case ErrorCode::QuorumInvalid: return "QuorumInvalid";
    case ErrorCode::DuplicateDevice: return "DuplicateDevice";
    case ErrorCode::CredentialInvalid: return "CredentialInvalid";
    case ErrorCode::QueueFull: return "QueueFull";
    case ErrorCode::NoProgress: return "NoProgress";
    case ErrorCode::NoQuorum: return "NoQuorum";
    case ErrorCode::DivergentHistory: return "DivergentHistory";
    case ErrorCode::BootstrapUnreachable: return "BootstrapUnreachable";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyReport: return "EmptyReport";
  }
  return "Unknown";
}

namespace {

std::string render(ErrorCode code, const std::optional<std::int64_t>& value,
                   const std::string& message) {
  std::string out(error_name(code));
  if (value) out += "(" + std::to_string(*value) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message)
    : std::runtime_error(render(code, std::nullopt, message)),
      code_(code),
      message_(std::move(message)) {}

Error::Error(ErrorCode code, std::int64_t value, std::string message)
    : std::runtime_error(render(code, value, message)),
      code_(code),
      value_(value),
      message_(std::move(message)) {}

}  // namespace cpsec
