// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cpsec/bench.hpp"
#include "cpsec/registry.hpp"

namespace cpsec::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailure = 1;      // protocol or verification failure
constexpr int kConfigError = 2;  // configuration or I/O failure

struct PeerFaultSpec {
  std::uint32_t peer = 0;
  registry::PeerFault fault = registry::PeerFault::None;
};

// Everything a subcommand may need, with documented defaults. Loaded from
// JSON; see README for the schema.
struct ScenarioConfig {
  std::size_t peers = 4;
  std::size_t threshold = 0;  // 0: ceil(2n/3)
  std::uint64_t seed = 1;
  std::vector<std::string> devices = {"sensor-01", "sensor-02"};
  std::vector<PeerFaultSpec> peer_faults;

  bench::WorkloadSpec workload;  // consensus, network, dht, cost and OSN faults live here
  std::vector<std::size_t> peer_counts = {4};
  std::vector<double> rates = {200};
  bool compare_auth = true;

  std::size_t cluster_txs = 100;
  std::string out_dir = "out";

  std::size_t registry_t() const;
  // Error(ConfigInvalid) with the offending field path.
  void validate() const;
};

// Error(ConfigInvalid) naming the JSON path of the first bad field;
// unknown fields are rejected.
ScenarioConfig parse_config(std::string_view json_text);
// Error(IoFailure) when the file cannot be read.
ScenarioConfig load_config(const std::string& path);

// Body of `verify-ledger`: kOk when the export replays cleanly, kFailure
// when it is malformed or any check fails.
int verify_ledger(ByteView bytes, std::ostream& out, std::ostream& err,
                  mscrypto::SigCache* cache = nullptr);

// Entire command line, argv[0] included. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpsec::cli
