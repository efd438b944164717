// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

#include "cpsec/bench.hpp"
#include "cpsec/error.hpp"

using namespace cpsec;
using namespace cpsec::bench;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidParams;
}

WorkloadSpec quick(double rate = 200, std::size_t peers = 4) {
  WorkloadSpec s;
  s.target_rate = rate;
  s.peers = peers;
  s.duration_s = 3;
  s.drain_s = 3;
  s.device_count = 4;
  return s;
}

TEST(Metrics, NinetyThreeOfHundred) {
  std::vector<Event> ev;
  for (int i = 0; i < 100; ++i) ev.push_back({static_cast<std::uint64_t>(i), "submit", "write-" + std::to_string(i), 0});
  for (int i = 0; i < 93; ++i) ev.push_back({static_cast<std::uint64_t>(i + 10), "commit", "write-" + std::to_string(i), 0});
  for (int i = 93; i < 100; ++i) ev.push_back({200, "fail", "write-" + std::to_string(i), 0});
  auto m = compute_metrics(ev, 1.0, 1.0);
  EXPECT_EQ(m.submitted, 100u);
  EXPECT_EQ(m.committed, 93u);
  EXPECT_EQ(m.failed, 7u);
  EXPECT_EQ(m.in_flight, 0u);
  EXPECT_DOUBLE_EQ(m.success_rate, 0.93);
  EXPECT_DOUBLE_EQ(m.throughput, 93.0);
  EXPECT_DOUBLE_EQ(m.latency_avg_ms, 10.0);
}

TEST(Metrics, EmptyIsZero) {
  EXPECT_EQ(compute_metrics({}, 1.0, 1.0), Metrics{});
}

// Latencies 4, 10, 6 ticks at 0.5 ms per tick; one failure, one in flight.
TEST(Metrics, HandComputedLog) {
  std::vector<Event> ev{
      {0, "submit", "write-0", 1}, {2, "submit", "write-1", 2}, {3, "submit", "write-2", 0},
      {4, "commit", "write-0", 1}, {5, "submit", "write-3", 1}, {7, "fail", "write-3", 0},
      {8, "submit", "write-4", 3}, {12, "commit", "write-1", 2}, {14, "commit", "write-4", 3},
      {1, "submit", "read-0", 0},  {3, "commit", "read-0", 0},
  };
  auto m = compute_metrics(ev, 2.0, 0.5, "write-");
  EXPECT_EQ(m.submitted, 5u);
  EXPECT_EQ(m.committed, 3u);
  EXPECT_EQ(m.failed, 1u);
  EXPECT_EQ(m.in_flight, 1u);
  EXPECT_DOUBLE_EQ(m.success_rate, 0.6);
  EXPECT_DOUBLE_EQ(m.throughput, 1.5);
  EXPECT_DOUBLE_EQ(m.latency_avg_ms, (2.0 + 5.0 + 3.0) / 3);
  EXPECT_DOUBLE_EQ(m.latency_p50_ms, 3.0);  // rank ceil(1.5) = 2 of {2, 3, 5}
  EXPECT_DOUBLE_EQ(m.latency_p95_ms, 5.0);  // rank ceil(2.85) = 3
  auto r = compute_metrics(ev, 2.0, 0.5, "read-");
  EXPECT_EQ(r.committed, 1u);
  EXPECT_DOUBLE_EQ(r.latency_avg_ms, 1.0);
}

TEST(Events, RoundTrip) {
  std::vector<Event> ev{{0, "submit", "write-0", 1}, {17, "commit", "write-0", 3}};
  std::stringstream ss;
  write_events(ss, ev);
  EXPECT_EQ(ss.str(), "0,submit,write-0,1\n17,commit,write-0,3\n");
  EXPECT_EQ(read_events(ss), ev);
  std::stringstream bad("1,submit,x\n");
  EXPECT_EQ(code_of([&] { read_events(bad); }), ErrorCode::DecodeError);
}

TEST(WorkloadSpec, Validation) {
  auto s = quick();
  s.duration_s = 0;
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    EXPECT_NE(std::string(e.what()).find("workload.duration_s"), std::string::npos);
  }
  s = quick();
  s.read_fraction = 1.5;
  EXPECT_EQ(code_of([&] { run_scenario(s); }), ErrorCode::ConfigInvalid);
  s = quick();
  s.consensus.mode = ordering::Mode::Pbft;
  s.consensus.n = 3;
  EXPECT_EQ(code_of([&] { s.validate(); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(parse_auth_mode("CertBaseline"), AuthMode::CertBaseline);
  EXPECT_EQ(code_of([] { parse_auth_mode("x509"); }), ErrorCode::ConfigInvalid);
}

TEST(Scenario, DeterministicPerSeed) {
  auto a = run_scenario(quick());
  auto b = run_scenario(quick());
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.events, b.events);
  auto s = quick();
  s.seed = 2;
  auto c = run_scenario(s);
  EXPECT_NE(a.events, c.events);
}

TEST(Scenario, AccountingAndReplay) {
  for (double rate : {100.0, 600.0}) {
    auto res = run_scenario(quick(rate));
    ASSERT_EQ(res.rows.size(), 2u);
    std::size_t total = 0;
    for (const auto& row : res.rows) {
      const auto& m = row.metrics;
      EXPECT_EQ(m.submitted, m.committed + m.failed + m.in_flight);
      EXPECT_LE(m.success_rate, 1.0);
      total += m.submitted;
      std::stringstream log;
      write_events(log, res.events);
      auto replay = compute_metrics(read_events(log), res.spec.duration_s, res.spec.tick_ms,
                                    row.op == Op::Read ? "read-" : "write-");
      EXPECT_EQ(replay, m);
    }
    EXPECT_EQ(total, static_cast<std::size_t>(rate * 3));
    EXPECT_EQ(res.registration.devices, 4u);
  }
}

TEST(Scenario, ReadsBeatWrites) {
  for (double rate : {100.0, 400.0, 800.0}) {
    auto res = run_scenario(quick(rate));
    const auto& read = res.rows[0].metrics;
    const auto& write = res.rows[1].metrics;
    EXPECT_GE(read.throughput, write.throughput) << rate;
    EXPECT_LE(read.latency_avg_ms, write.latency_avg_ms) << rate;
  }
}

TEST(Scenario, SaturationLowersSuccess) {
  double prev = 2.0;
  bool saturated = false;
  for (double rate : {400.0, 500.0, 600.0, 800.0, 1000.0}) {
    auto s = quick(rate);
    s.duration_s = 5;
    auto w = run_scenario(s).rows[1].metrics;
    if (w.success_rate < 1.0) {
      if (saturated) EXPECT_LT(w.success_rate, prev) << rate;
      saturated = true;
    }
    prev = w.success_rate;
  }
  EXPECT_TRUE(saturated);
}

TEST(Scenario, OrderingOutageFailsWrites) {
  auto s = quick(100);
  s.consensus.max_view_changes = 2;
  s.faults = {{0, ordering::FaultKind::Crash, 0}, {1, ordering::FaultKind::Crash, 0}};
  auto res = run_scenario(s);
  EXPECT_EQ(res.rows[1].metrics.committed, 0u);
  EXPECT_GT(res.rows[1].metrics.failed, 0u);
  EXPECT_EQ(res.rows[0].metrics.success_rate, 1.0);
}

TEST(AuthModes, MsRegistersFaster) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto s = quick(100);
    s.seed = seed;
    auto cmp = compare_auth_modes(s);
    EXPECT_LT(cmp.ms.mean_ms, cmp.cert.mean_ms);
    EXPECT_GT(cmp.ratio, 1.0);
    double ms = registration_mean_ms(cmp.ms_events, s.tick_ms);
    double cert = registration_mean_ms(cmp.cert_events, s.tick_ms);
    EXPECT_DOUBLE_EQ(ms, cmp.ms.mean_ms);
    EXPECT_DOUBLE_EQ(cert, cmp.cert.mean_ms);
    EXPECT_DOUBLE_EQ(cert / ms, cmp.ratio);
    // Every CertBaseline registration pays at least the band minimum.
    EXPECT_GE(cmp.cert.mean_ms - cmp.ms.mean_ms, s.cost.ca_min_ms);
  }
}

TEST(AuthModes, ZeroCaDelayIsNeutral) {
  auto s = quick(100);
  s.cost.ca_min_ms = 0;
  s.cost.ca_max_ms = 0;
  auto cmp = compare_auth_modes(s);
  EXPECT_DOUBLE_EQ(cmp.ms.mean_ms, cmp.cert.mean_ms);
  EXPECT_DOUBLE_EQ(cmp.ratio, 1.0);
}

BenchmarkReport two_scenarios() {
  auto s = quick(100);
  s.duration_s = 1;
  return run_sweep(s, {4}, {100, 300});
}

TEST(Csv, RowsAndRoundTrip) {
  auto report = two_scenarios();
  std::stringstream ss;
  write_csv(ss, report.rows());
  std::string text = ss.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "scenario,op,peers,rate,submitted,committed,success_rate,tp,lat_avg_ms,lat_p50_ms,"
            "lat_p95_ms");
  auto rows = read_csv(ss);
  auto expect = report.rows();
  ASSERT_EQ(rows.size(), expect.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].scenario, expect[i].scenario);
    EXPECT_EQ(rows[i].op, expect[i].op);
    EXPECT_EQ(rows[i].peers, expect[i].peers);
    EXPECT_EQ(rows[i].rate, expect[i].rate);
    const auto& a = rows[i].metrics;
    const auto& b = expect[i].metrics;
    EXPECT_EQ(a.submitted, b.submitted);
    EXPECT_EQ(a.committed, b.committed);
    EXPECT_EQ(a.success_rate, b.success_rate);
    EXPECT_EQ(a.throughput, b.throughput);
    EXPECT_EQ(a.latency_avg_ms, b.latency_avg_ms);
    EXPECT_EQ(a.latency_p50_ms, b.latency_p50_ms);
    EXPECT_EQ(a.latency_p95_ms, b.latency_p95_ms);
  }
}

TEST(Csv, EmptyReportIsHeaderOnly) {
  std::stringstream ss;
  write_csv(ss, BenchmarkReport{}.rows());
  EXPECT_EQ(ss.str(), std::string(kCsvHeader) + "\n");
  EXPECT_TRUE(read_csv(ss).empty());
}

TEST(Csv, UnwritablePath) {
  EXPECT_EQ(code_of([] { export_csv(two_scenarios(), "/nonexistent-dir/x.csv"); }),
            ErrorCode::IoFailure);
}

// Minimal XML well-formedness: balanced, properly nested tags and quoted
// attributes.
bool well_formed(const std::string& xml) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = xml.find('<', i)) != std::string::npos) {
    auto end = xml.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = xml.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.starts_with("?")) continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    if (tag.ends_with("/")) continue;
    stack.push_back(tag.substr(0, tag.find(' ')));
  }
  return stack.empty();
}

std::map<std::string, std::string> attributes(const std::string& tag) {
  std::map<std::string, std::string> out;
  std::regex attr(R"re(([\w-]+)="([^"]*)")re");
  for (std::sregex_iterator it(tag.begin(), tag.end(), attr), end; it != end; ++it)
    out[(*it)[1]] = (*it)[2];
  return out;
}

TEST(Svg, OneSeriesOnePolylinePerPanel) {
  auto s = quick(100);
  s.duration_s = 1;
  BenchmarkReport one;
  one.scenarios.push_back(run_scenario(s));
  one.scenarios[0].rows.pop_back();  // READ only
  auto svg = render_chart(one);
  EXPECT_TRUE(well_formed(svg));
  std::size_t count = 0;
  for (std::size_t at = 0; (at = svg.find("<polyline", at)) != std::string::npos; ++at) ++count;
  EXPECT_EQ(count, 2u);  // throughput and latency panels
  EXPECT_NE(svg.find("tx/s"), std::string::npos);
  EXPECT_NE(svg.find("(ms)"), std::string::npos);
  EXPECT_EQ(code_of([] { render_chart(BenchmarkReport{}); }), ErrorCode::EmptyReport);
}

TEST(Svg, PointsMatchCsvThroughAxisTransform) {
  auto s = quick(100);
  s.duration_s = 1;
  auto report = run_sweep(s, {4}, {100, 300, 500});
  auto svg = render_chart(report);
  ASSERT_TRUE(well_formed(svg));
  std::stringstream csv;
  write_csv(csv, report.rows());
  auto rows = read_csv(csv);

  std::regex group(R"re(<g class="panel"[^>]*>)re");
  std::regex poly(R"re(<polyline [^>]*/>)re");
  std::size_t panels = 0;
  for (std::sregex_iterator g(svg.begin(), svg.end(), group), end; g != end; ++g) {
    ++panels;
    auto a = attributes(g->str());
    double xmin = std::stod(a["data-xmin"]), xmax = std::stod(a["data-xmax"]);
    double ymax = std::stod(a["data-ymax"]);
    double left = std::stod(a["data-left"]), right = std::stod(a["data-right"]);
    double top = std::stod(a["data-top"]), bottom = std::stod(a["data-bottom"]);
    bool tp = a["data-metric"] == "tp";
    auto rest = svg.substr(static_cast<std::size_t>(g->position()));
    rest = rest.substr(0, rest.find("</g>"));
    std::size_t lines = 0;
    for (std::sregex_iterator p(rest.begin(), rest.end(), poly); p != end; ++p) {
      ++lines;
      auto pa = attributes(p->str());
      Op op = pa["data-op"] == "READ" ? Op::Read : Op::Write;
      std::stringstream pts(pa["points"]);
      std::string pair;
      std::size_t k = 0;
      while (pts >> pair) {
        auto comma = pair.find(',');
        double px = std::stod(pair.substr(0, comma)), py = std::stod(pair.substr(comma + 1));
        double rate = xmin + (px - left) / (right - left) * (xmax - xmin);
        double value = (bottom - py) / (bottom - top) * ymax;
        auto it = std::find_if(rows.begin(), rows.end(), [&](const Row& r) {
          return r.op == op && std::abs(r.rate - rate) < 1e-6;
        });
        ASSERT_NE(it, rows.end()) << rate;
        double want = tp ? it->metrics.throughput : it->metrics.latency_avg_ms;
        EXPECT_NEAR(value, want, 1e-6 * std::max(1.0, want));
        ++k;
      }
      EXPECT_EQ(k, 3u);
    }
    EXPECT_EQ(lines, 2u);
  }
  EXPECT_EQ(panels, 2u);
}

TEST(Sweep, JobsDoNotChangeResults) {
  auto s = quick(100);
  s.duration_s = 1;
  auto a = run_sweep(s, {4, 8}, {100, 300}, 1);
  auto b = run_sweep(s, {4, 8}, {100, 300}, 3);
  EXPECT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.rows().size(), 8u);
  EXPECT_EQ(a.rows()[2].peers, 4u);
  EXPECT_EQ(a.rows()[2].rate, 300);
}

}  // namespace
