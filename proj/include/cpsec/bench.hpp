// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Throughput/latency harness. A scenario is a discrete-event simulation of
// devices submitting READ and WRITE requests to the consortium: the ordering
// engine, gossip and DHT are the real implementations, while signing,
// validation and query work are charged as service times from CostModel.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cpsec/dhtstore.hpp"
#include "cpsec/ordering.hpp"

namespace cpsec::bench {

enum class Op { Read, Write };
std::string_view op_name(Op op);  // "READ", "WRITE"

enum class AuthMode { Ms, CertBaseline };
std::string_view auth_mode_name(AuthMode m);  // "MS", "CertBaseline"
AuthMode parse_auth_mode(std::string_view s);  // Error(ConfigInvalid)

// Service times in milliseconds.
struct CostModel {
  double link_min_ms = 1;
  double link_max_ms = 4;
  double endorse_ms = 2;
  double query_ms = 1;
  double validate_ms_per_tx = 0.5;
  double osn_ms_per_tx = 4;
  double gossip_round_ms = 3;
  std::size_t gossip_fanout = 2;
  double share_ms = 3;
  double cosign_ms = 1;
  double finalize_ms = 2;
  // CertBaseline adds one CA verification round trip drawn uniformly from
  // this band to every registration.
  double ca_min_ms = 40;
  double ca_max_ms = 242;
};

struct WorkloadSpec {
  std::string scenario = "default";
  double target_rate = 200;  // tx per simulated second
  double duration_s = 10;
  double drain_s = 5;  // simulated after the last submission
  double read_fraction = 0.5;
  std::size_t device_count = 8;
  std::size_t peers = 4;
  std::size_t t_e = 0;  // endorsements per write; 0: majority of peers
  ordering::ConsensusConfig consensus = default_consensus();  // n is the OSN count
  std::vector<ordering::FaultSpec> faults;
  std::size_t osn_queue = 200;
  std::size_t dht_nodes = 16;
  dht::DhtConfig dht;
  std::size_t payload_bytes = 64;
  AuthMode auth_mode = AuthMode::Ms;
  CostModel cost;
  // Applied to the links between OSNs.
  double drop = 0;
  std::vector<std::vector<std::uint32_t>> partitions;
  bool trace = false;  // keep the OSN message trace
  double tick_ms = 1;
  std::uint64_t seed = 1;

  // Error(ConfigInvalid) naming the offending field.
  void validate() const;
  std::size_t endorsements() const;
  std::uint64_t to_ticks(double ms) const;

  static ordering::ConsensusConfig default_consensus();
};

// One line of the raw log: `tick,event,tx_id,node`.
struct Event {
  std::uint64_t tick = 0;
  std::string event;
  std::string tx_id;
  std::uint32_t node = 0;

  bool operator==(const Event&) const = default;
};

std::string format_event(const Event& e);
void write_events(std::ostream& out, const std::vector<Event>& events);
// Error(DecodeError) on a malformed line.
std::vector<Event> read_events(std::istream& in);

struct Metrics {
  std::size_t submitted = 0;
  std::size_t committed = 0;
  std::size_t failed = 0;
  std::size_t in_flight = 0;
  double success_rate = 0;
  double throughput = 0;
  double latency_avg_ms = 0;
  double latency_p50_ms = 0;
  double latency_p95_ms = 0;

  bool operator==(const Metrics&) const = default;
};

// Metrics over transactions whose tx_id starts with `prefix`: latency runs
// from `submit` to `commit`, a `fail` ends a transaction unsuccessfully.
// Quantiles are nearest-rank.
Metrics compute_metrics(const std::vector<Event>& events, double duration_s, double tick_ms,
                        std::string_view prefix = {});

struct Row {
  std::string scenario;
  Op op = Op::Read;
  std::size_t peers = 0;
  double rate = 0;
  Metrics metrics;

  bool operator==(const Row&) const = default;
};

struct RegistrationStats {
  std::size_t devices = 0;
  double mean_ms = 0;
  double max_ms = 0;
};

struct ScenarioResult {
  WorkloadSpec spec;
  std::vector<Row> rows;  // READ then WRITE
  RegistrationStats registration;
  std::vector<Event> events;
  std::string trace;
};

// Deterministic per spec. Error(ConfigInvalid) for an invalid spec.
ScenarioResult run_scenario(const WorkloadSpec& spec);

struct BenchmarkReport {
  std::vector<ScenarioResult> scenarios;

  std::vector<Row> rows() const;
  bool empty() const { return scenarios.empty(); }
};

// Every (peers, rate) cell of the grid, seeded alike and named
// `<scenario>-n<peers>-r<rate>`; scenarios run on up to `jobs` threads and
// are reported in grid order.
BenchmarkReport run_sweep(const WorkloadSpec& base, const std::vector<std::size_t>& peers,
                          const std::vector<double>& rates, std::size_t jobs = 1);

struct AuthComparison {
  RegistrationStats ms;
  RegistrationStats cert;
  double ratio = 0;  // cert.mean_ms / ms.mean_ms
  std::vector<Event> ms_events;
  std::vector<Event> cert_events;
};

AuthComparison compare_auth_modes(const WorkloadSpec& base);
// Mean `reg-start` to `reg-done` span in ms.
double registration_mean_ms(const std::vector<Event>& events, double tick_ms);

inline constexpr std::string_view kCsvHeader =
    "scenario,op,peers,rate,submitted,committed,success_rate,tp,lat_avg_ms,lat_p50_ms,lat_p95_ms";

void write_csv(std::ostream& out, const std::vector<Row>& rows);
// Error(IoFailure) when the file cannot be written.
void export_csv(const BenchmarkReport& report, const std::string& path);
// Error(DecodeError) on a malformed file.
std::vector<Row> read_csv(std::istream& in);

// Throughput and mean-latency panels; x is the rate, or the peer count
// when the report holds a single rate. Error(EmptyReport).
std::string render_chart(const BenchmarkReport& report);

}  // namespace cpsec::bench
