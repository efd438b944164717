// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsec/bench.hpp"
#include "cpsec/cli.hpp"
#include "cpsec/codec.hpp"
#include "cpsec/deployment.hpp"
#include "cpsec/dhtstore.hpp"
#include "cpsec/error.hpp"
#include "cpsec/hash.hpp"
#include "cpsec/ledger.hpp"
#include "cpsec/ordering.hpp"

namespace cpsec::cli {

namespace fs = std::filesystem;

namespace {

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::string_view data) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

void write_file(const fs::path& path, ByteView data) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

Bytes seed_bytes(std::string_view label, std::uint64_t seed) {
  auto d = sha256(to_bytes(std::string(label) + ":" + std::to_string(seed)));
  return Bytes(d.begin(), d.end());
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool trace = false;
  std::size_t jobs = 1;
};

ScenarioConfig resolve(const Globals& g) {
  ScenarioConfig cfg = g.config.empty() ? ScenarioConfig{} : load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.workload.seed = *g.seed;
  }
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.trace) cfg.workload.trace = true;
  cfg.validate();
  return cfg;
}

int cmd_keys_gen(const ScenarioConfig& cfg, std::size_t count, std::ostream& out) {
  const auto& params = mscrypto::SystemParams::standard();
  nlohmann::ordered_json doc;
  doc["seed"] = cfg.seed;
  doc["keys"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < count; ++i) {
    auto kp = mscrypto::keygen(params, seed_bytes("key-" + std::to_string(i), cfg.seed));
    auto sk = kp.sk.export_bytes();
    doc["keys"].push_back({{"index", i},
                           {"pk", to_hex(kp.pk.to_bytes())},
                           {"pop", to_hex(kp.pop.sig.to_bytes())},
                           {"sk", to_hex(sk)}});
  }
  auto path = fs::path(cfg.out_dir) / "keys.json";
  write_file(path, doc.dump(2) + "\n");
  out << "wrote " << count << " key pairs to " << path.string() << "\n";
  return kOk;
}

int cmd_register(const ScenarioConfig& cfg, const std::string& device, std::ostream& out,
                 std::ostream& err) {
  const auto& params = mscrypto::SystemParams::standard();
  auto t = cfg.registry_t();
  auto peers = registry::make_consortium(params, cfg.peers, t, cfg.seed);
  for (const auto& pf : cfg.peer_faults) peers[pf.peer].set_fault(pf.fault);
  auto reg = registry::register_device(peers, to_bytes(device),
                                       seed_bytes("device-" + device, cfg.seed), 1, params);
  std::vector<mscrypto::PublicKey> roster;
  for (const auto& p : peers) roster.push_back(p.pk());

  std::string transcript;
  for (const auto& line : reg.transcript) transcript += line + "\n";
  auto dir = fs::path(cfg.out_dir);
  write_file(dir / (device + ".transcript"), transcript);
  const auto& cred = reg.device.credential;
  write_file(dir / (device + ".cred"), ByteView(cred.to_bytes()));

  if (!registry::verify_credential(cred, roster, t, params)) {
    err << "error: " << error_name(ErrorCode::CredentialInvalid) << "\n";
    return kFailure;
  }
  out << "registered " << device << " with " << cred.bundle.attestation.signers.count() << "/" << cfg.peers
      << " peers (t=" << t << ")\n"
      << "pk_full " << to_hex(cred.pk_full.to_bytes()) << "\n";
  return kOk;
}

int cmd_bench(const ScenarioConfig& cfg, std::size_t jobs, std::ostream& out) {
  auto report = bench::run_sweep(cfg.workload, cfg.peer_counts, cfg.rates, jobs);
  auto dir = fs::path(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  bench::export_csv(report, (dir / "report.csv").string());
  write_file(dir / "report.svg", bench::render_chart(report));
  for (const auto& s : report.scenarios) {
    std::ostringstream log;
    bench::write_events(log, s.events);
    write_file(dir / "events" / (s.spec.scenario + ".log"), log.str());
    if (cfg.workload.trace) write_file(dir / "trace" / (s.spec.scenario + ".trace"), s.trace);
  }
  for (const auto& row : report.rows())
    out << row.scenario << " " << bench::op_name(row.op) << " tp=" << row.metrics.throughput
        << " lat_avg_ms=" << row.metrics.latency_avg_ms
        << " success=" << row.metrics.success_rate << "\n";

  if (cfg.compare_auth) {
    auto base = cfg.workload;
    base.peers = cfg.peer_counts.front();
    base.target_rate = cfg.rates.front();
    auto cmp = bench::compare_auth_modes(base);
    std::ostringstream csv;
    csv << "mode,devices,mean_ms,max_ms\n";
    csv << "MS," << cmp.ms.devices << "," << cmp.ms.mean_ms << "," << cmp.ms.max_ms << "\n";
    csv << "CertBaseline," << cmp.cert.devices << "," << cmp.cert.mean_ms << ","
        << cmp.cert.max_ms << "\n";
    write_file(dir / "registration.csv", csv.str());
    out << "registration mean_ms MS=" << cmp.ms.mean_ms << " CertBaseline=" << cmp.cert.mean_ms
        << " ratio=" << cmp.ratio << "\n";
  }
  out << "wrote " << (dir / "report.csv").string() << " and " << (dir / "report.svg").string()
      << "\n";
  return kOk;
}

int cmd_verify_ledger(const std::string& path, std::ostream& out, std::ostream& err) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, "no such file " + path);
  mscrypto::SigCache cache;
  return verify_ledger(read_file(path), out, err, &cache);
}

dht::DhtNetwork open_store(const ScenarioConfig& cfg, const fs::path& path) {
  auto net = dht::DhtNetwork::build(cfg.workload.dht, cfg.workload.dht_nodes, cfg.seed);
  if (fs::exists(path)) net.import_store(read_file(path.string()));
  return net;
}

int cmd_dht_put(const ScenarioConfig& cfg, const std::string& file, std::ostream& out) {
  auto payload = read_file(file);
  auto path = fs::path(cfg.out_dir) / "dht.store";
  auto net = open_store(cfg, path);
  auto res = net.put(0, payload);
  write_file(path, ByteView(net.export_store()));
  out << res.address.hex() << "\n";
  return kOk;
}

int cmd_dht_get(const ScenarioConfig& cfg, const std::string& hex, const std::string& output,
                std::ostream& out) {
  bool ok = hex.size() == 64 &&
            hex.find_first_not_of("0123456789abcdefABCDEF") == std::string::npos;
  if (!ok) throw Error(ErrorCode::ConfigInvalid, "address: expected 64 hex digits");
  ContentAddress addr;
  auto raw = from_hex(hex);
  std::copy(raw.begin(), raw.end(), addr.digest.begin());
  auto path = fs::path(cfg.out_dir) / "dht.store";
  auto net = open_store(cfg, path);
  auto res = net.get(0, addr);
  if (output.empty()) {
    out.write(reinterpret_cast<const char*>(res.payload.data()),
              static_cast<std::streamsize>(res.payload.size()));
  } else {
    write_file(output, ByteView(res.payload));
  }
  return kOk;
}

int cmd_cluster(const ScenarioConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& w = cfg.workload;
  DeploymentSpec spec;
  spec.peers = cfg.peers;
  spec.registry_t = cfg.threshold;
  spec.osns = w.consensus.n;
  spec.t_e = w.endorsements();
  spec.devices = cfg.devices;
  spec.seed = cfg.seed;
  auto dep = make_deployment(spec);

  mscrypto::SigCache cache;
  ledger::WorldState empty;
  std::vector<ledger::Transaction> work;
  for (std::size_t i = 0; i < cfg.cluster_txs; ++i)
    work.push_back(dep.envelope(i % cfg.devices.size(), ledger::Action::Update,
                                "key-" + std::to_string(i),
                                ledger::Value{to_bytes("value-" + std::to_string(i))}, i + 1,
                                empty, &cache));

  ordering::LinkProfile link{w.to_ticks(w.cost.link_min_ms), w.to_ticks(w.cost.link_max_ms),
                             w.drop};
  ordering::SimNetwork net(w.consensus.n, link, cfg.seed);
  for (const auto& group : w.partitions) net.partition({group});
  std::ostringstream trace;
  if (w.trace) net.set_trace(&trace);
  auto run = ordering::run_cluster(dep, w.consensus, work, net, w.faults, &cache);

  auto dir = fs::path(cfg.out_dir);
  if (w.trace) write_file(dir / "cluster.trace", trace.str());
  if (run.status != ordering::Status::Decided) {
    err << "error: "
        << error_name(run.status == ordering::Status::NoQuorum ? ErrorCode::NoQuorum
                                                               : ErrorCode::NoProgress)
        << " after " << run.blocks << " blocks\n";
    return kFailure;
  }
  const ledger::Ledger* replica = nullptr;
  for (const auto& r : run.replicas)
    if (r) {
      replica = &*r;
      break;
    }
  if (!replica) {
    err << "error: " << error_name(ErrorCode::NoQuorum) << ": no replica survived\n";
    return kFailure;
  }
  write_file(dir / "ledger.bin", ByteView(ledger::export_ledger(*replica)));
  out << ordering::mode_name(w.consensus.mode) << " ordered " << work.size() << " transactions in "
      << run.blocks << " blocks; replicas agree: " << (run.agreement() ? "yes" : "no") << "\n"
      << "wrote " << (dir / "ledger.bin").string() << "\n";
  return run.agreement() ? kOk : kFailure;
}

}  // namespace

int verify_ledger(ByteView bytes, std::ostream& out, std::ostream& err,
                  mscrypto::SigCache* cache) {
  std::optional<ledger::LedgerFile> file;
  bool ok = false;
  try {
    file = ledger::import_ledger(bytes);
    ok = ledger::verify_chain(*file, cache);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  if (!ok) {
    err << "error: " << error_name(ErrorCode::BrokenChain) << ": ledger failed verification\n";
    return kFailure;
  }
  std::size_t txs = 0;
  for (const auto& b : file->blocks) txs += b.txs.size();
  out << "ledger ok: height " << file->blocks.size() - 1 << ", " << txs << " transactions\n";
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cpsec: consortium registration, ledger and benchmark tool", "cpsec"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON scenario file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Overrides the configured seed");
  app.add_option("--out-dir", g.out_dir, "Output directory (default: out)");
  app.add_flag("--trace", g.trace, "Write message traces");
  app.add_option("--jobs", g.jobs, "Parallel bench scenarios")->check(CLI::PositiveNumber);

  auto* keys = app.add_subcommand("keys", "Key management");
  keys->require_subcommand(1);
  auto* keys_gen = keys->add_subcommand("gen", "Deterministic key pairs from the seed");
  std::optional<std::size_t> key_count;
  keys_gen->add_option("--count", key_count, "Number of key pairs (default: consortium size)");

  auto* reg = app.add_subcommand("register", "Register a device with the consortium");
  std::string device;
  reg->add_option("device_id", device)->required();

  auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark sweep");

  auto* verify = app.add_subcommand("verify-ledger", "Replay and verify a ledger file");
  std::string ledger_path;
  verify->add_option("path", ledger_path)->required();

  auto* dht_cmd = app.add_subcommand("dht", "Content-addressed storage");
  dht_cmd->require_subcommand(1);
  auto* put = dht_cmd->add_subcommand("put", "Store a file");
  std::string put_file;
  put->add_option("file", put_file)->required();
  auto* get = dht_cmd->add_subcommand("get", "Fetch by content address");
  std::string get_hex, get_output;
  get->add_option("address", get_hex)->required();
  get->add_option("--output,-o", get_output, "Write the payload here instead of stdout");

  auto* cluster = app.add_subcommand("cluster", "Order a write workload into ledger.bin");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    auto cfg = resolve(g);
    if (keys_gen->parsed()) return cmd_keys_gen(cfg, key_count.value_or(cfg.peers), out);
    if (reg->parsed()) return cmd_register(cfg, device, out, err);
    if (bench_cmd->parsed()) return cmd_bench(cfg, g.jobs, out);
    if (verify->parsed()) return cmd_verify_ledger(ledger_path, out, err);
    if (put->parsed()) return cmd_dht_put(cfg, put_file, out);
    if (get->parsed()) return cmd_dht_get(cfg, get_hex, get_output, out);
    if (cluster->parsed()) return cmd_cluster(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    auto c = e.code();
    return c == ErrorCode::ConfigInvalid || c == ErrorCode::IoFailure ? kConfigError : kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kConfigError;
}

}  // namespace cpsec::cli
