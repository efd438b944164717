// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>
#include <tuple>

#include "cpsec/bench.hpp"
#include "cpsec/codec.hpp"
#include "cpsec/error.hpp"
#include "cpsec/registry.hpp"

namespace cpsec::bench {

std::string_view op_name(Op op) { return op == Op::Read ? "READ" : "WRITE"; }

std::string_view auth_mode_name(AuthMode m) { return m == AuthMode::Ms ? "MS" : "CertBaseline"; }

AuthMode parse_auth_mode(std::string_view s) {
  if (s == "MS" || s == "ms") return AuthMode::Ms;
  if (s == "CertBaseline" || s == "cert") return AuthMode::CertBaseline;
  throw Error(ErrorCode::ConfigInvalid, "auth_mode: expected MS or CertBaseline");
}

ordering::ConsensusConfig WorkloadSpec::default_consensus() {
  ordering::ConsensusConfig c;
  c.mode = ordering::Mode::Cft;
  c.n = 3;
  c.f = 1;
  c.batch_size = 10;
  c.batch_timeout = 50;
  return c;
}

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw Error(ErrorCode::ConfigInvalid, std::string(field) + ": " + what);
}

}  // namespace

void WorkloadSpec::validate() const {
  require(target_rate > 0, "workload.target_rate", "must be positive");
  require(duration_s > 0, "workload.duration_s", "must be positive");
  require(drain_s >= 0, "workload.drain_s", "must be nonnegative");
  require(read_fraction >= 0 && read_fraction <= 1, "workload.read_fraction", "must be in [0,1]");
  require(device_count > 0, "workload.device_count", "must be positive");
  require(peers > 0, "consortium.n", "must be positive");
  require(t_e <= peers, "consortium.t_e", "exceeds the peer count");
  require(osn_queue > 0, "consensus.queue_capacity", "must be positive");
  require(dht_nodes > 0, "dht.nodes", "must be positive");
  require(tick_ms > 0, "workload.tick_ms", "must be positive");
  require(drop >= 0 && drop < 1, "network.drop", "must be in [0,1)");
  for (const auto& group : partitions)
    for (auto node : group) require(node < consensus.n, "network.partitions", "node out of range");
  require(cost.link_min_ms >= 0 && cost.link_min_ms <= cost.link_max_ms, "cost.link_ms",
          "latency band is empty");
  require(cost.ca_min_ms >= 0 && cost.ca_min_ms <= cost.ca_max_ms, "cost.ca_ms",
          "CA delay band is empty");
  require(cost.gossip_fanout > 0, "cost.gossip_fanout", "must be positive");
  for (double v : {cost.endorse_ms, cost.query_ms, cost.validate_ms_per_tx, cost.osn_ms_per_tx,
                   cost.gossip_round_ms, cost.share_ms, cost.cosign_ms, cost.finalize_ms})
    require(v >= 0, "cost", "service times must be nonnegative");
  auto within = [](const char* field, auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigInvalid, std::string(field) + ": " + e.message());
    }
  };
  within("consensus", [&] { consensus.validate(); });
  within("faults", [&] { ordering::validate_faults(consensus, faults); });
  dht.validate();
}

std::size_t WorkloadSpec::endorsements() const { return t_e ? t_e : peers / 2 + 1; }

std::uint64_t WorkloadSpec::to_ticks(double ms) const {
  return static_cast<std::uint64_t>(std::llround(ms / tick_ms));
}

namespace {

// Runs the registration protocol for every device and checks each
// credential. Outcomes depend only on the arguments, so sweeps share them.
std::vector<bool> registration_outcomes(std::size_t n, std::size_t devices, std::uint64_t seed) {
  using Key = std::tuple<std::size_t, std::size_t, std::uint64_t>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<std::vector<bool>>> memo;
  std::shared_ptr<std::vector<bool>> slot;
  {
    std::lock_guard lock(mu);
    auto& entry = memo[{n, devices, seed}];
    if (!entry) entry = std::make_shared<std::vector<bool>>();
    slot = entry;
  }
  static std::mutex compute_mu;
  std::lock_guard compute(compute_mu);
  if (!slot->empty()) return *slot;

  const auto& params = mscrypto::SystemParams::standard();
  auto t = registry::default_threshold(n);
  auto peers = registry::make_consortium(params, n, t, seed);
  std::vector<mscrypto::PublicKey> roster;
  for (const auto& p : peers) roster.push_back(p.pk());
  auto seeds = DetRng::derive(seed, "bench.devices");
  std::vector<bool> out;
  for (std::size_t d = 0; d < devices; ++d) {
    auto name = "dev-" + std::to_string(d);
    auto reg = registry::register_device(peers, as_bytes(name), seeds.bytes(32), d, params);
    out.push_back(registry::verify_credential(reg.device.credential, roster, t, params));
  }
  *slot = out;
  return out;
}

class Simulation {
 public:
  explicit Simulation(const WorkloadSpec& spec)
      : spec_(spec),
        link_rng_(DetRng::derive(spec.seed, "bench.link")),
        ca_rng_(DetRng::derive(spec.seed, "bench.ca")),
        payload_rng_(DetRng::derive(spec.seed, "bench.payload")),
        osn_net_(spec.consensus.n, link_profile(spec), spec.seed),
        peer_net_(spec.peers, {link_profile(spec).min_latency, link_profile(spec).max_latency, 0.0},
                  spec.seed ^ 0x9e3779b97f4a7c15ULL),
        dht_(dht::DhtNetwork::build(spec.dht, spec.dht_nodes, spec.seed)),
        peer_free_(spec.peers, 0) {
    for (const auto& f : spec.faults)
      if (f.kind == ordering::FaultKind::Crash) osn_net_.crash_at(f.node, f.at_tick);
    if (!spec.partitions.empty()) osn_net_.partition(spec.partitions);
    if (spec.trace) osn_net_.set_trace(&trace_);
  }

  ScenarioResult run() {
    ScenarioResult res;
    res.spec = spec_;
    auto start = register_devices(res.registration);
    schedule_workload(start);
    auto horizon = start + spec_.to_ticks((spec_.duration_s + spec_.drain_s) * 1000.0);
    while (!queue_.empty() && queue_.top().tick <= horizon) {
      auto item = queue_.top();
      queue_.pop();
      now_ = item.tick;
      item.fn();
    }
    for (Op op : {Op::Read, Op::Write}) {
      Row row;
      row.scenario = spec_.scenario;
      row.op = op;
      row.peers = spec_.peers;
      row.rate = spec_.target_rate;
      row.metrics = compute_metrics(events_, spec_.duration_s, spec_.tick_ms,
                                    op == Op::Read ? "read-" : "write-");
      res.rows.push_back(row);
    }
    res.events = std::move(events_);
    res.trace = trace_.str();
    return res;
  }

 private:
  struct Item {
    std::uint64_t tick;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Item& o) const { return std::tie(tick, seq) > std::tie(o.tick, o.seq); }
  };

  struct Tx {
    std::string id;
    std::uint32_t anchor = 0;
    std::size_t pending = 0;
  };

  static ordering::LinkProfile link_profile(const WorkloadSpec& s) {
    return {s.to_ticks(s.cost.link_min_ms), s.to_ticks(s.cost.link_max_ms), s.drop};
  }

  void at(std::uint64_t tick, std::function<void()> fn) {
    queue_.push({std::max(tick, now_), seq_++, std::move(fn)});
  }

  void log(std::string_view event, const std::string& tx, std::uint32_t node) {
    events_.push_back({now_, std::string(event), tx, node});
  }

  std::uint64_t link() {
    return link_rng_.uniform(spec_.to_ticks(spec_.cost.link_min_ms),
                             spec_.to_ticks(spec_.cost.link_max_ms));
  }

  // FIFO single server per peer; returns the completion tick.
  std::uint64_t serve(std::uint32_t peer, std::uint64_t arrival, std::uint64_t service) {
    auto done = std::max(arrival, peer_free_[peer]) + service;
    peer_free_[peer] = done;
    return done;
  }

  // Devices register one after another before the workload starts. The
  // protocol itself runs for real; its latency comes from the cost model.
  std::uint64_t register_devices(RegistrationStats& stats) {
    auto t = registry::default_threshold(spec_.peers);
    auto verified = registration_outcomes(spec_.peers, spec_.device_count, spec_.seed);
    std::uint64_t clock = 0;
    double total = 0;
    for (std::size_t d = 0; d < spec_.device_count; ++d) {
      auto tx = "reg-" + std::to_string(d);
      now_ = clock;
      log("reg-start", tx, 0);
      bool ok = verified[d];

      std::vector<std::uint64_t> arrivals;
      for (std::uint32_t p = 0; p < spec_.peers; ++p) {
        auto done = serve(p, clock + link(), spec_.to_ticks(spec_.cost.share_ms));
        arrivals.push_back(done + link());
      }
      std::sort(arrivals.begin(), arrivals.end());
      auto shares_in = arrivals[t - 1];
      std::uint64_t cosigned = shares_in;
      for (std::size_t i = 0; i < t; ++i) {
        auto p = static_cast<std::uint32_t>(i);
        auto done = serve(p, shares_in + link(), spec_.to_ticks(spec_.cost.cosign_ms));
        cosigned = std::max(cosigned, done + link());
      }
      auto finished = cosigned + spec_.to_ticks(spec_.cost.finalize_ms);
      if (spec_.auth_mode == AuthMode::CertBaseline)
        finished += ca_rng_.uniform(spec_.to_ticks(spec_.cost.ca_min_ms),
                                    spec_.to_ticks(spec_.cost.ca_max_ms));
      now_ = finished;
      log(ok ? "reg-done" : "reg-fail", tx, 0);
      double ms = static_cast<double>(finished - clock) * spec_.tick_ms;
      total += ms;
      stats.max_ms = std::max(stats.max_ms, ms);
      ++stats.devices;
      clock = finished;
    }
    stats.mean_ms = total / static_cast<double>(stats.devices);
    return clock;
  }

  void schedule_workload(std::uint64_t start) {
    auto count = static_cast<std::size_t>(std::llround(spec_.target_rate * spec_.duration_s));
    const double gap_ms = 1000.0 / spec_.target_rate;
    std::size_t reads = 0;
    for (std::size_t i = 0; i < count; ++i) {
      auto tick = start + spec_.to_ticks(static_cast<double>(i) * gap_ms);
      auto anchor = static_cast<std::uint32_t>((i % spec_.device_count) % spec_.peers);
      // Reads are spread evenly through the stream, a read leading each slot.
      auto due = static_cast<std::size_t>(std::ceil(static_cast<double>(i + 1) * spec_.read_fraction));
      bool read = due > reads;
      if (read) ++reads;
      at(tick, [this, i, anchor, read] {
        if (read) submit_read(i, anchor);
        else submit_write(i, anchor);
      });
    }
  }

  void submit_read(std::size_t i, std::uint32_t anchor) {
    auto id = "read-" + std::to_string(i);
    log("submit", id, anchor);
    auto arrival = now_ + link();
    at(arrival, [this, id, anchor] {
      auto done = serve(anchor, now_, spec_.to_ticks(spec_.cost.query_ms));
      at(done + link(), [this, id, anchor] { log("commit", id, anchor); });
    });
  }

  void submit_write(std::size_t i, std::uint32_t anchor) {
    auto tx = std::make_shared<Tx>();
    tx->id = "write-" + std::to_string(i);
    tx->anchor = anchor;
    tx->pending = spec_.endorsements();
    log("submit", tx->id, anchor);
    for (std::size_t k = 0; k < tx->pending; ++k) {
      auto peer = static_cast<std::uint32_t>((i + k) % spec_.peers);
      at(now_ + link(), [this, tx, peer] {
        auto done = serve(peer, now_, spec_.to_ticks(spec_.cost.endorse_ms));
        at(done + link(), [this, tx] {
          if (--tx->pending == 0) at(now_ + link(), [this, tx] { enqueue(tx); });
        });
      });
    }
  }

  void enqueue(const std::shared_ptr<Tx>& tx) {
    if (osn_queue_.size() >= spec_.osn_queue) {
      log("fail", tx->id, spec_.consensus.leader);
      return;
    }
    osn_queue_.push_back({tx, now_});
    try_cut();
  }

  void try_cut() {
    if (osn_busy_ || osn_queue_.empty()) return;
    const auto& cfg = spec_.consensus;
    auto deadline = osn_queue_.front().second + cfg.batch_timeout;
    if (osn_queue_.size() < cfg.batch_size && now_ < deadline) {
      if (timer_armed_ != deadline) {
        timer_armed_ = deadline;
        at(deadline, [this] { try_cut(); });
      }
      return;
    }
    std::vector<std::shared_ptr<Tx>> batch;
    while (!osn_queue_.empty() && batch.size() < cfg.batch_size) {
      batch.push_back(osn_queue_.front().first);
      osn_queue_.pop_front();
    }
    order(std::move(batch));
  }

  void order(std::vector<std::shared_ptr<Tx>> batch) {
    osn_busy_ = true;
    ++height_;
    Writer w;
    w.u64(height_);
    for (const auto& tx : batch) w.str(tx->id);
    std::vector<Bytes> proposals(spec_.consensus.n, w.data());

    auto processing = spec_.to_ticks(spec_.cost.osn_ms_per_tx * static_cast<double>(batch.size()));
    osn_net_.advance_to(now_ + processing);
    auto inst = spec_.consensus.mode == ordering::Mode::Pbft
                    ? ordering::run_pbft(spec_.consensus, proposals, osn_net_, spec_.faults, {},
                                         height_, spec_.seed + height_)
                    : ordering::run_cft(spec_.consensus, proposals, osn_net_, spec_.faults, {},
                                        height_);
    if (inst.status != ordering::Status::Decided) {
      at(inst.end_tick, [this, batch] {
        for (const auto& tx : batch) log("fail", tx->id, spec_.consensus.leader);
        osn_busy_ = false;
        try_cut();
      });
      return;
    }
    std::vector<std::uint64_t> ticks;
    for (const auto& d : inst.decisions)
      if (d) ticks.push_back(d->tick);
    std::sort(ticks.begin(), ticks.end());
    auto quorum = std::min(spec_.consensus.quorum(), ticks.size());
    auto decided = ticks[quorum - 1];
    auto digest = inst.decisions[spec_.consensus.leader]
                      ? inst.decisions[spec_.consensus.leader]->digest
                      : Digest{};
    at(decided, [this, batch, digest] {
      osn_busy_ = false;
      disseminate(batch, digest);
      try_cut();
    });
  }

  // OSN hands the block to one peer, gossip spreads it, and every peer
  // validates it; a write is answered by its anchor peer after the DHT put.
  void disseminate(const std::vector<std::shared_ptr<Tx>>& batch, const Digest& digest) {
    auto origin = static_cast<std::uint32_t>(height_ % spec_.peers);
    auto g = ordering::gossip(origin, spec_.cost.gossip_fanout, peer_net_, digest);
    auto delivered = now_ + link();
    auto validate = spec_.to_ticks(spec_.cost.validate_ms_per_tx * static_cast<double>(batch.size()));
    for (std::uint32_t p = 0; p < spec_.peers; ++p) {
      if (!g.informed_round[p]) continue;
      auto arrival =
          delivered + *g.informed_round[p] * spec_.to_ticks(spec_.cost.gossip_round_ms);
      at(arrival, [this, p, batch, validate] {
        auto done = serve(p, now_, validate);
        at(done, [this, p, batch] {
          for (const auto& tx : batch)
            if (tx->anchor == p) store(tx);
        });
      });
    }
  }

  void store(const std::shared_ptr<Tx>& tx) {
    log("ledger", tx->id, tx->anchor);
    auto payload = payload_rng_.bytes(spec_.payload_bytes);
    auto from = static_cast<std::uint32_t>(tx->anchor % spec_.dht_nodes);
    auto put = dht_.put(from, payload);
    at(now_ + put.ticks, [this, tx] { log("commit", tx->id, tx->anchor); });
  }

  const WorkloadSpec& spec_;
  DetRng link_rng_;
  DetRng ca_rng_;
  DetRng payload_rng_;
  ordering::SimNetwork osn_net_;
  ordering::SimNetwork peer_net_;
  dht::DhtNetwork dht_;
  std::vector<std::uint64_t> peer_free_;
  std::ostringstream trace_;

  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<Event> events_;

  std::deque<std::pair<std::shared_ptr<Tx>, std::uint64_t>> osn_queue_;
  bool osn_busy_ = false;
  std::uint64_t timer_armed_ = 0;
  std::uint64_t height_ = 0;
};

}  // namespace

ScenarioResult run_scenario(const WorkloadSpec& spec) {
  spec.validate();
  return Simulation(spec).run();
}

std::vector<Row> BenchmarkReport::rows() const {
  std::vector<Row> out;
  for (const auto& s : scenarios) out.insert(out.end(), s.rows.begin(), s.rows.end());
  return out;
}

BenchmarkReport run_sweep(const WorkloadSpec& base, const std::vector<std::size_t>& peers,
                          const std::vector<double>& rates, std::size_t jobs) {
  std::vector<WorkloadSpec> specs;
  for (auto n : peers)
    for (auto r : rates) {
      auto s = base;
      s.peers = n;
      s.target_rate = r;
      std::ostringstream name;
      name << base.scenario << "-n" << n << "-r" << r;
      s.scenario = name.str();
      s.validate();
      specs.push_back(std::move(s));
    }
  BenchmarkReport report;
  report.scenarios.resize(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (auto i = next++; i < specs.size(); i = next++) {
      try {
        report.scenarios[i] = run_scenario(specs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(specs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

double registration_mean_ms(const std::vector<Event>& events, double tick_ms) {
  std::map<std::string, std::uint64_t> start;
  double total = 0;
  std::size_t n = 0;
  for (const auto& e : events) {
    if (e.event == "reg-start") start[e.tx_id] = e.tick;
    else if (e.event == "reg-done" && start.contains(e.tx_id)) {
      total += static_cast<double>(e.tick - start[e.tx_id]) * tick_ms;
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

AuthComparison compare_auth_modes(const WorkloadSpec& base) {
  auto ms = base;
  ms.auth_mode = AuthMode::Ms;
  auto cert = base;
  cert.auth_mode = AuthMode::CertBaseline;
  auto a = run_scenario(ms);
  auto b = run_scenario(cert);
  AuthComparison out;
  out.ms = a.registration;
  out.cert = b.registration;
  out.ratio = out.ms.mean_ms > 0 ? out.cert.mean_ms / out.ms.mean_ms : 0.0;
  out.ms_events = std::move(a.events);
  out.cert_events = std::move(b.events);
  return out;
}

}  // namespace cpsec::bench
