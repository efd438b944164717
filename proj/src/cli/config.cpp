// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpsec/cli.hpp"
#include "cpsec/error.hpp"

namespace cpsec::cli {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
}

// A JSON object being read field by field; finish() rejects leftovers.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(std::string_view key, T& out) {
    if (const auto* v = find(key)) out = read<T>(*v, at(key));
  }

  std::optional<Section> section(std::string_view key) {
    if (const auto* v = find(key)) return Section(*v, at(key));
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) bad(at(it.key()), "unknown field");
  }

  template <class T>
  static T read(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(path, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                     !v.is_number_unsigned()))
        bad(path, "expected a nonnegative integer");
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(path, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(path, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) bad(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(read<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

registry::PeerFault parse_peer_fault(const std::string& s, const std::string& path) {
  if (s == "offline") return registry::PeerFault::Offline;
  if (s == "wrong-share") return registry::PeerFault::WrongShare;
  if (s == "bad-share-sig") return registry::PeerFault::BadShareSig;
  bad(path, "unknown peer fault '" + s + "'");
}

void read_faults(const json& list, ScenarioConfig& cfg) {
  if (!list.is_array()) bad("faults", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string path = "faults[" + std::to_string(i) + "]";
    Section f(list[i], path);
    std::string target = "osn", kind;
    std::uint32_t node = 0;
    std::uint64_t at_tick = 0;
    f.get("target", target);
    f.get("node", node);
    f.get("kind", kind);
    f.get("at_tick", at_tick);
    f.finish();
    if (target == "peer") {
      cfg.peer_faults.push_back({node, parse_peer_fault(kind, path + ".kind")});
    } else if (target == "osn") {
      ordering::FaultKind k;
      try {
        k = ordering::parse_fault(kind);
      } catch (const Error&) {
        bad(path + ".kind", "unknown OSN fault '" + kind + "'");
      }
      cfg.workload.faults.push_back({node, k, at_tick});
    } else {
      bad(path + ".target", "expected peer or osn");
    }
  }
}

}  // namespace

std::size_t ScenarioConfig::registry_t() const {
  return threshold ? threshold : registry::default_threshold(peers);
}

void ScenarioConfig::validate() const {
  if (peers == 0) bad("consortium.n", "must be positive");
  if (threshold > peers) bad("consortium.t", "exceeds consortium.n");
  if (devices.empty()) bad("consortium.devices", "needs at least one device");
  for (std::size_t i = 0; i < peer_faults.size(); ++i)
    if (peer_faults[i].peer >= peers)
      bad("faults", "peer " + std::to_string(peer_faults[i].peer) + " out of range");
  if (peer_counts.empty()) bad("workload.peers", "needs at least one peer count");
  if (rates.empty()) bad("workload.rates", "needs at least one rate");
  for (auto n : peer_counts)
    if (n == 0) bad("workload.peers", "peer counts must be positive");
  for (auto r : rates)
    if (!(r > 0)) bad("workload.rates", "rates must be positive");
  if (cluster_txs == 0) bad("cluster.txs", "must be positive");
  workload.validate();
}

ScenarioConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
  ScenarioConfig cfg;
  auto& w = cfg.workload;
  Section top(root, "");

  if (auto s = top.section("consortium")) {
    s->get("n", cfg.peers);
    s->get("t", cfg.threshold);
    s->get("seed", cfg.seed);
    s->get("t_e", w.t_e);
    s->get("devices", cfg.devices);
    s->finish();
  }
  if (auto s = top.section("consensus")) {
    std::string mode = std::string(ordering::mode_name(w.consensus.mode));
    s->get("mode", mode);
    try {
      w.consensus.mode = ordering::parse_mode(mode);
    } catch (const Error&) {
      bad("consensus.mode", "expected PBFT or CFT");
    }
    s->get("osns", w.consensus.n);
    s->get("f", w.consensus.f);
    s->get("batch_size", w.consensus.batch_size);
    s->get("batch_timeout", w.consensus.batch_timeout);
    s->get("view_timeout", w.consensus.view_timeout);
    s->get("max_view_changes", w.consensus.max_view_changes);
    s->get("leader", w.consensus.leader);
    s->get("queue_capacity", w.osn_queue);
    s->finish();
  }
  if (auto s = top.section("network")) {
    s->get("min_latency_ms", w.cost.link_min_ms);
    s->get("max_latency_ms", w.cost.link_max_ms);
    s->get("drop", w.drop);
    s->get("partitions", w.partitions);
    s->finish();
  }
  if (auto s = top.section("dht")) {
    s->get("k", w.dht.k);
    s->get("alpha", w.dht.alpha);
    s->get("nodes", w.dht_nodes);
    s->get("max_payload", w.dht.max_payload);
    s->finish();
  }
  if (auto s = top.section("workload")) {
    s->get("name", w.scenario);
    s->get("rates", cfg.rates);
    s->get("peers", cfg.peer_counts);
    s->get("duration_s", w.duration_s);
    s->get("drain_s", w.drain_s);
    s->get("read_fraction", w.read_fraction);
    s->get("device_count", w.device_count);
    s->get("payload_bytes", w.payload_bytes);
    s->get("tick_ms", w.tick_ms);
    s->get("compare_auth", cfg.compare_auth);
    std::string mode = std::string(bench::auth_mode_name(w.auth_mode));
    s->get("auth_mode", mode);
    try {
      w.auth_mode = bench::parse_auth_mode(mode);
    } catch (const Error&) {
      bad("workload.auth_mode", "expected MS or CertBaseline");
    }
    s->finish();
  }
  if (auto s = top.section("cost")) {
    auto& c = w.cost;
    s->get("endorse_ms", c.endorse_ms);
    s->get("query_ms", c.query_ms);
    s->get("validate_ms_per_tx", c.validate_ms_per_tx);
    s->get("osn_ms_per_tx", c.osn_ms_per_tx);
    s->get("gossip_round_ms", c.gossip_round_ms);
    s->get("gossip_fanout", c.gossip_fanout);
    s->get("share_ms", c.share_ms);
    s->get("cosign_ms", c.cosign_ms);
    s->get("finalize_ms", c.finalize_ms);
    s->get("ca_min_ms", c.ca_min_ms);
    s->get("ca_max_ms", c.ca_max_ms);
    s->finish();
  }
  if (const auto* f = top.find("faults")) read_faults(*f, cfg);
  if (auto s = top.section("cluster")) {
    s->get("txs", cfg.cluster_txs);
    s->finish();
  }
  if (auto s = top.section("output")) {
    s->get("dir", cfg.out_dir);
    s->finish();
  }
  top.finish();

  w.seed = cfg.seed;
  w.peers = cfg.peer_counts.empty() ? cfg.peers : cfg.peer_counts.front();
  w.target_rate = cfg.rates.empty() ? w.target_rate : cfg.rates.front();
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace cpsec::cli
