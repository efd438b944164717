// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpsec/cli.hpp"
#include "cpsec/codec.hpp"
#include "cpsec/error.hpp"
#include "cpsec/ledger.hpp"

using namespace cpsec;
using namespace cpsec::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cpsec");
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("cpsec-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string config_error(std::string_view json_text) {
  try {
    parse_config(json_text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    return e.message();
  }
  ADD_FAILURE() << "accepted: " << json_text;
  return {};
}

constexpr const char* kSmallBench = R"({
  "workload": {"peers": [4, 8], "rates": [100, 300], "duration_s": 2, "drain_s": 2,
               "device_count": 4}
})";

TEST(Config, EmptyObjectGivesDefaults) {
  auto cfg = parse_config("{}");
  EXPECT_EQ(cfg.peers, 4u);
  EXPECT_EQ(cfg.registry_t(), 3u);
  EXPECT_EQ(cfg.out_dir, "out");
  EXPECT_EQ(cfg.workload.consensus.mode, ordering::Mode::Cft);
}

TEST(Config, ReadsEverySection) {
  auto cfg = parse_config(R"({
    "consortium": {"n": 7, "t": 4, "seed": 9, "t_e": 3, "devices": ["a", "b", "c"]},
    "consensus": {"mode": "PBFT", "osns": 4, "f": 1, "batch_size": 5, "batch_timeout": 20,
                  "view_timeout": 30, "max_view_changes": 3, "leader": 1, "queue_capacity": 50},
    "network": {"min_latency_ms": 2, "max_latency_ms": 8, "drop": 0.1, "partitions": [[3]]},
    "dht": {"k": 5, "alpha": 3, "nodes": 20, "max_payload": 4096},
    "workload": {"name": "x", "peers": [7], "rates": [50.5], "duration_s": 3, "drain_s": 1,
                 "read_fraction": 0.25, "device_count": 2, "payload_bytes": 32, "tick_ms": 0.5,
                 "compare_auth": false, "auth_mode": "CertBaseline"},
    "cost": {"endorse_ms": 4, "ca_min_ms": 10, "ca_max_ms": 20},
    "faults": [{"target": "osn", "node": 2, "kind": "withhold"},
               {"target": "peer", "node": 6, "kind": "wrong-share"}],
    "cluster": {"txs": 12},
    "output": {"dir": "elsewhere"}
  })");
  EXPECT_EQ(cfg.peers, 7u);
  EXPECT_EQ(cfg.registry_t(), 4u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.workload.seed, 9u);
  EXPECT_EQ(cfg.workload.t_e, 3u);
  EXPECT_EQ(cfg.devices.size(), 3u);
  EXPECT_EQ(cfg.workload.consensus.mode, ordering::Mode::Pbft);
  EXPECT_EQ(cfg.workload.consensus.leader, 1u);
  EXPECT_EQ(cfg.workload.osn_queue, 50u);
  EXPECT_DOUBLE_EQ(cfg.workload.drop, 0.1);
  EXPECT_EQ(cfg.workload.partitions, (std::vector<std::vector<std::uint32_t>>{{3}}));
  EXPECT_EQ(cfg.workload.dht.k, 5u);
  EXPECT_EQ(cfg.workload.dht_nodes, 20u);
  EXPECT_EQ(cfg.workload.peers, 7u);
  EXPECT_DOUBLE_EQ(cfg.workload.target_rate, 50.5);
  EXPECT_DOUBLE_EQ(cfg.workload.tick_ms, 0.5);
  EXPECT_EQ(cfg.workload.auth_mode, bench::AuthMode::CertBaseline);
  EXPECT_FALSE(cfg.compare_auth);
  EXPECT_DOUBLE_EQ(cfg.workload.cost.endorse_ms, 4);
  ASSERT_EQ(cfg.workload.faults.size(), 1u);
  EXPECT_EQ(cfg.workload.faults[0].kind, ordering::FaultKind::Withhold);
  ASSERT_EQ(cfg.peer_faults.size(), 1u);
  EXPECT_EQ(cfg.peer_faults[0].fault, registry::PeerFault::WrongShare);
  EXPECT_EQ(cfg.cluster_txs, 12u);
  EXPECT_EQ(cfg.out_dir, "elsewhere");
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(config_error(R"({"consortium": {"n": 4, "size": 2}})"),
            "consortium.size: unknown field");
  EXPECT_EQ(config_error(R"({"colour": 1})"), "colour: unknown field");
  EXPECT_EQ(config_error(R"({"workload": {"rates": [100, "fast"]}})"),
            "workload.rates[1]: expected a number");
  EXPECT_EQ(config_error(R"({"consortium": {"n": -3}})"),
            "consortium.n: expected a nonnegative integer");
  EXPECT_EQ(config_error(R"({"consortium": {"n": 4, "t": 5}})"),
            "consortium.t: exceeds consortium.n");
  EXPECT_EQ(config_error(R"({"consensus": {"mode": "raft"}})"),
            "consensus.mode: expected PBFT or CFT");
  EXPECT_EQ(config_error(R"({"faults": [{"target": "peer", "node": 9, "kind": "offline"}]})"),
            "faults: peer 9 out of range");
  EXPECT_EQ(config_error(R"({"faults": [{"target": "osn", "kind": "sleepy"}]})"),
            "faults[0].kind: unknown OSN fault 'sleepy'");
  EXPECT_EQ(config_error(R"({"workload": {"read_fraction": 1.5}})"),
            "workload.read_fraction: must be in [0,1]");
  EXPECT_NE(config_error(R"({"consensus": {"mode": "PBFT", "osns": 3, "f": 1}})")
                .find("consensus: PBFT needs n >= 3f+1"),
            std::string::npos);
  EXPECT_NE(config_error("{not json").find("config:"), std::string::npos);
}

TEST(Config, MissingFileIsIoFailure) {
  try {
    load_config("/nonexistent/cpsec.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(Config, BundledConfigsParse) {
  for (const auto* name : {"peers_sweep.json", "rates_sweep.json", "pbft_byzantine.json"})
    EXPECT_NO_THROW(load_config(std::string(CPSEC_CONFIG_DIR) + "/" + name)) << name;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, kConfigError);
  EXPECT_EQ(cli({"frobnicate"}).code, kConfigError);
  EXPECT_EQ(cli({"register"}).code, kConfigError);
  EXPECT_EQ(cli({"--config", "/nonexistent.json", "bench"}).code, kConfigError);
  auto help = cli({"--help"});
  EXPECT_EQ(help.code, kOk);
  EXPECT_NE(help.out.find("verify-ledger"), std::string::npos);
}

TEST(Cli, BadConfigExitsTwoWithPath) {
  TempDir dir;
  spit(dir / "c.json", R"({"dht": {"k": 0}})");
  auto r = cli({"--config", dir / "c.json", "bench"});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("ConfigInvalid"), std::string::npos);
  EXPECT_NE(r.err.find("dht.k"), std::string::npos);
}

TEST(Cli, KeysAreDeterministicAndValid) {
  TempDir a, b, c;
  ASSERT_EQ(cli({"--out-dir", a.path().string(), "keys", "gen", "--count", "3"}).code, kOk);
  ASSERT_EQ(cli({"--out-dir", b.path().string(), "keys", "gen", "--count", "3"}).code, kOk);
  ASSERT_EQ(cli({"--seed", "2", "--out-dir", c.path().string(), "keys", "gen", "--count", "3"})
                .code,
            kOk);
  auto ka = slurp(a.path() / "keys.json");
  EXPECT_EQ(ka, slurp(b.path() / "keys.json"));
  EXPECT_NE(ka, slurp(c.path() / "keys.json"));

  auto doc = nlohmann::json::parse(ka);
  ASSERT_EQ(doc["keys"].size(), 3u);
  const auto& params = mscrypto::SystemParams::standard();
  for (const auto& k : doc["keys"]) {
    auto pk_bytes = from_hex(k["pk"].get<std::string>());
    auto pop_bytes = from_hex(k["pop"].get<std::string>());
    Reader rp(pk_bytes), rs(pop_bytes);
    auto pk = mscrypto::PublicKey::decode(rp);
    auto pop = mscrypto::ProofOfPossession::decode(rs);
    EXPECT_TRUE(mscrypto::verify_possession(pk, pop, params));
  }
}

TEST(Cli, RegisterWritesVerifiableCredential) {
  TempDir a, b;
  auto r = cli({"--out-dir", a.path().string(), "register", "sensor-07"});
  ASSERT_EQ(r.code, kOk) << r.err;
  ASSERT_EQ(cli({"--out-dir", b.path().string(), "register", "sensor-07"}).code, kOk);
  auto transcript = slurp(a.path() / "sensor-07.transcript");
  EXPECT_FALSE(transcript.empty());
  EXPECT_EQ(transcript, slurp(b.path() / "sensor-07.transcript"));
  auto cred_bytes = slurp(a.path() / "sensor-07.cred");
  EXPECT_EQ(cred_bytes, slurp(b.path() / "sensor-07.cred"));

  // Rebuild the roster independently from the same seed.
  const auto& params = mscrypto::SystemParams::standard();
  auto peers = registry::make_consortium(params, 4, 3, 1);
  std::vector<mscrypto::PublicKey> roster;
  for (const auto& p : peers) roster.push_back(p.pk());
  auto raw = to_bytes(cred_bytes);
  Reader rd(raw);
  auto cred = registry::DeviceCredential::decode(rd);
  EXPECT_EQ(cred.device_id, to_bytes("sensor-07"));
  EXPECT_TRUE(registry::verify_credential(cred, roster, 3, params));
}

TEST(Cli, RegisterBelowThresholdExitsOne) {
  TempDir dir;
  spit(dir / "c.json", R"({"faults": [{"target": "peer", "node": 0, "kind": "offline"},
                                      {"target": "peer", "node": 3, "kind": "bad-share-sig"}]})");
  auto r = cli({"--config", dir / "c.json", "--out-dir", dir.path().string(), "register", "d"});
  EXPECT_EQ(r.code, kFailure);
  EXPECT_NE(r.err.find("ThresholdUnmet(2)"), std::string::npos) << r.err;
}

TEST(Cli, RegisterToleratesOneOfflinePeer) {
  TempDir dir;
  spit(dir / "c.json", R"({"faults": [{"target": "peer", "node": 2, "kind": "offline"}]})");
  auto r = cli({"--config", dir / "c.json", "--out-dir", dir.path().string(), "register", "d"});
  EXPECT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("3/4 peers"), std::string::npos) << r.out;
}

TEST(Cli, RegisterReportsWrongShare) {
  TempDir dir;
  spit(dir / "c.json", R"({"faults": [{"target": "peer", "node": 2, "kind": "wrong-share"}]})");
  auto r = cli({"--config", dir / "c.json", "--out-dir", dir.path().string(), "register", "d"});
  EXPECT_EQ(r.code, kFailure);
  EXPECT_NE(r.err.find("ShareMismatch(2)"), std::string::npos) << r.err;
}

TEST(Cli, ClusterLedgerVerifiesAndTamperingIsCaught) {
  TempDir dir;
  auto r = cli({"--out-dir", dir.path().string(), "cluster"});
  ASSERT_EQ(r.code, kOk) << r.err;
  auto path = dir / "ledger.bin";
  auto bytes = slurp(path);
  auto file = ledger::import_ledger(to_bytes(bytes));
  EXPECT_EQ(file.blocks.size(), 11u);
  EXPECT_EQ(cli({"verify-ledger", path}).code, kOk);

  for (std::size_t off = 8; off < bytes.size(); off += bytes.size() / 37) {
    auto bad = bytes;
    bad[off] = static_cast<char>(bad[off] ^ 0x01);
    spit(dir / "bad.bin", bad);
    EXPECT_EQ(cli({"verify-ledger", dir / "bad.bin"}).code, kFailure) << off;
  }
  spit(dir / "short.bin", bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(cli({"verify-ledger", dir / "short.bin"}).code, kFailure);
  EXPECT_EQ(cli({"verify-ledger", dir / "missing.bin"}).code, kConfigError);
}

TEST(Cli, ClusterIsDeterministic) {
  TempDir a, b;
  ASSERT_EQ(cli({"--out-dir", a.path().string(), "--trace", "cluster"}).code, kOk);
  ASSERT_EQ(cli({"--out-dir", b.path().string(), "--trace", "cluster"}).code, kOk);
  EXPECT_EQ(slurp(a.path() / "ledger.bin"), slurp(b.path() / "ledger.bin"));
  EXPECT_EQ(slurp(a.path() / "cluster.trace"), slurp(b.path() / "cluster.trace"));
  EXPECT_FALSE(slurp(a.path() / "cluster.trace").empty());
}

TEST(Cli, DhtPutGetRoundTrip) {
  TempDir dir;
  auto out = dir.path().string();
  spit(dir / "in.txt", "hello, storage");
  auto put = cli({"--out-dir", out, "dht", "put", dir / "in.txt"});
  ASSERT_EQ(put.code, kOk) << put.err;
  auto addr = put.out.substr(0, put.out.find('\n'));
  EXPECT_EQ(addr, to_hex(sha256(to_bytes("hello, storage"))));

  auto get = cli({"--out-dir", out, "dht", "get", addr});
  EXPECT_EQ(get.code, kOk);
  EXPECT_EQ(get.out, "hello, storage");
  ASSERT_EQ(cli({"--out-dir", out, "dht", "get", addr, "--output", dir / "copy.txt"}).code, kOk);
  EXPECT_EQ(slurp(dir.path() / "copy.txt"), "hello, storage");

  auto missing = cli({"--out-dir", out, "dht", "get", std::string(64, '0')});
  EXPECT_EQ(missing.code, kFailure);
  EXPECT_NE(missing.err.find("NotFound"), std::string::npos);
  EXPECT_EQ(cli({"--out-dir", out, "dht", "get", "abc"}).code, kConfigError);
  EXPECT_EQ(cli({"--out-dir", out, "dht", "get", std::string(64, 'g')}).code, kConfigError);
  EXPECT_EQ(cli({"--out-dir", out, "dht", "put", dir / "nope.txt"}).code, kConfigError);
}

TEST(Cli, BenchOutputsAreDeterministicAcrossJobs) {
  TempDir a, b;
  spit(a / "c.json", kSmallBench);
  auto ra = cli({"--config", a / "c.json", "--out-dir", (a.path() / "o").string(), "bench"});
  ASSERT_EQ(ra.code, kOk) << ra.err;
  auto rb = cli({"--config", a / "c.json", "--out-dir", (b.path() / "o").string(), "--jobs", "4",
                 "bench"});
  ASSERT_EQ(rb.code, kOk) << rb.err;
  for (const auto* f : {"report.csv", "report.svg", "registration.csv",
                        "events/default-n8-r300.log"}) {
    auto x = slurp(a.path() / "o" / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b.path() / "o" / f)) << f;
  }
  std::istringstream csv(slurp(a.path() / "o" / "report.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 1u + 2 * 2 * 2);
}

TEST(Cli, SeedFlagOverridesConfig) {
  TempDir dir;
  spit(dir / "c.json", R"({"consortium": {"seed": 5}, "output": {"dir": "ignored"}})");
  auto d1 = (dir.path() / "one").string();
  auto d2 = (dir.path() / "two").string();
  ASSERT_EQ(cli({"--config", dir / "c.json", "--out-dir", d1, "register", "x"}).code, kOk);
  ASSERT_EQ(
      cli({"--config", dir / "c.json", "--seed", "6", "--out-dir", d2, "register", "x"}).code,
      kOk);
  EXPECT_NE(slurp(fs::path(d1) / "x.cred"), slurp(fs::path(d2) / "x.cred"));
  EXPECT_FALSE(fs::exists("ignored"));
}

}  // namespace
