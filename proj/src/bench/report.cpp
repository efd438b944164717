// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cpsec/bench.hpp"
#include "cpsec/error.hpp"

namespace cpsec::bench {

std::string format_event(const Event& e) {
  return std::to_string(e.tick) + "," + e.event + "," + e.tx_id + "," + std::to_string(e.node);
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << format_event(e) << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || !in.eof()) throw Error(ErrorCode::DecodeError, "bad number '" + s + "'");
  return v;
}

// Nearest rank: the smallest value with at least p of the sample at or below it.
double nearest_rank(const std::vector<double>& sorted, double p) {
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

std::vector<Event> read_events(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw Error(ErrorCode::DecodeError, "event line needs 4 fields");
    out.push_back({parse_number<std::uint64_t>(f[0]), f[1], f[2], parse_number<std::uint32_t>(f[3])});
  }
  return out;
}

Metrics compute_metrics(const std::vector<Event>& events, double duration_s, double tick_ms,
                        std::string_view prefix) {
  Metrics m;
  std::map<std::string_view, std::uint64_t> submitted;
  std::vector<double> latencies;
  for (const auto& e : events) {
    if (!std::string_view(e.tx_id).starts_with(prefix)) continue;
    if (e.event == "submit") {
      submitted.emplace(e.tx_id, e.tick);
    } else if (e.event == "commit") {
      auto it = submitted.find(e.tx_id);
      if (it == submitted.end()) continue;
      latencies.push_back(static_cast<double>(e.tick - it->second) * tick_ms);
    } else if (e.event == "fail") {
      ++m.failed;
    }
  }
  m.submitted = submitted.size();
  m.committed = latencies.size();
  m.in_flight = m.submitted - m.committed - m.failed;
  if (m.submitted == 0) return m;
  m.success_rate = static_cast<double>(m.committed) / static_cast<double>(m.submitted);
  m.throughput = duration_s > 0 ? static_cast<double>(m.committed) / duration_s : 0.0;
  if (latencies.empty()) return m;
  double total = 0;
  for (double l : latencies) total += l;
  m.latency_avg_ms = total / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  m.latency_p50_ms = nearest_rank(latencies, 0.50);
  m.latency_p95_ms = nearest_rank(latencies, 0.95);
  return m;
}

namespace {

// Shortest decimal that reads back to the same double.
std::string num(double v) {
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.scenario << ',' << op_name(r.op) << ',' << r.peers << ',' << num(r.rate) << ','
        << m.submitted << ',' << m.committed << ',' << num(m.success_rate) << ','
        << num(m.throughput) << ',' << num(m.latency_avg_ms) << ',' << num(m.latency_p50_ms)
        << ',' << num(m.latency_p95_ms) << '\n';
  }
}

void export_csv(const BenchmarkReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  write_csv(out, report.rows());
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
}

std::vector<Row> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(ErrorCode::DecodeError, "unexpected CSV header");
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 11) throw Error(ErrorCode::DecodeError, "CSV row needs 11 fields");
    Row r;
    r.scenario = f[0];
    if (f[1] == "READ") r.op = Op::Read;
    else if (f[1] == "WRITE") r.op = Op::Write;
    else throw Error(ErrorCode::DecodeError, "unknown op " + f[1]);
    r.peers = parse_number<std::size_t>(f[2]);
    r.rate = parse_number<double>(f[3]);
    r.metrics.submitted = parse_number<std::size_t>(f[4]);
    r.metrics.committed = parse_number<std::size_t>(f[5]);
    r.metrics.success_rate = parse_number<double>(f[6]);
    r.metrics.throughput = parse_number<double>(f[7]);
    r.metrics.latency_avg_ms = parse_number<double>(f[8]);
    r.metrics.latency_p50_ms = parse_number<double>(f[9]);
    r.metrics.latency_p95_ms = parse_number<double>(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

constexpr double kPanelWidth = 420;
constexpr double kPanelHeight = 260;
constexpr double kMarginLeft = 70;
constexpr double kMarginTop = 40;
constexpr double kGap = 90;

struct Series {
  std::string label;
  Op op;
  std::vector<std::pair<double, double>> points;
};

double nice_max(double v) {
  if (v <= 0) return 1;
  double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 5.0, 10.0})
    if (step * mag >= v) return step * mag;
  return 10 * mag;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_chart(const BenchmarkReport& report) {
  auto rows = report.rows();
  if (rows.empty()) throw Error(ErrorCode::EmptyReport);
  std::set<double> rates;
  for (const auto& r : rows) rates.insert(r.rate);
  const bool by_rate = rates.size() > 1;

  // One series per (op, value of the other dimension).
  std::map<std::pair<int, double>, Series> grouped;
  for (const auto& r : rows) {
    double other = by_rate ? static_cast<double>(r.peers) : r.rate;
    auto& s = grouped[{static_cast<int>(r.op), other}];
    s.op = r.op;
    s.label = std::string(op_name(r.op)) +
              (by_rate ? " peers=" + std::to_string(r.peers) : " rate=" + num(r.rate));
    double x = by_rate ? r.rate : static_cast<double>(r.peers);
    s.points.push_back({x, 0});
  }
  struct Panel {
    const char* metric;
    const char* title;
    const char* unit;
    double (*value)(const Metrics&);
  };
  const Panel panels[] = {
      {"tp", "Throughput", "tx/s", [](const Metrics& m) { return m.throughput; }},
      {"lat_avg_ms", "Mean latency", "ms", [](const Metrics& m) { return m.latency_avg_ms; }},
  };

  double xmin = 1e300, xmax = -1e300;
  for (const auto& r : rows) {
    double x = by_rate ? r.rate : static_cast<double>(r.peers);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  if (xmax == xmin) xmax = xmin + 1;

  const double width = kMarginLeft + 2 * kPanelWidth + kGap + 40;
  const double height = kMarginTop + kPanelHeight + 120;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";

  for (std::size_t pi = 0; pi < 2; ++pi) {
    const auto& panel = panels[pi];
    double left = kMarginLeft + static_cast<double>(pi) * (kPanelWidth + kGap);
    double right = left + kPanelWidth;
    double top = kMarginTop;
    double bottom = top + kPanelHeight;
    double ymax = 0;
    for (const auto& r : rows) ymax = std::max(ymax, panel.value(r.metrics));
    ymax = nice_max(ymax);
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto sy = [&](double y) { return bottom - y / ymax * (bottom - top); };

    svg << "<g class=\"panel\" data-metric=\"" << panel.metric << "\" data-xmin=\"" << num(xmin)
        << "\" data-xmax=\"" << num(xmax) << "\" data-ymin=\"0\" data-ymax=\"" << num(ymax)
        << "\" data-left=\"" << num(left) << "\" data-right=\"" << num(right)
        << "\" data-top=\"" << num(top) << "\" data-bottom=\"" << num(bottom) << "\">\n";
    svg << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(top - 15)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << panel.title << "</text>\n";
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(right)
        << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(bottom) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      double yv = ymax * t / 4;
      double xv = xmin + (xmax - xmin) * t / 4;
      svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4)
          << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
      svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(bottom + 16)
          << "\" text-anchor=\"middle\">" << num(std::round(xv * 100) / 100) << "</text>\n";
    }
    svg << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(bottom + 36)
        << "\" text-anchor=\"middle\">" << (by_rate ? "Target rate (tx/s)" : "Peers (count)")
        << "</text>\n";
    svg << "<text x=\"" << num(left - 50) << "\" y=\"" << num((top + bottom) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(left - 50) << ' '
        << num((top + bottom) / 2) << ")\">" << panel.title << " (" << panel.unit << ")</text>\n";

    std::size_t k = 0;
    for (const auto& [key, s] : grouped) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& r : rows) {
        double other = by_rate ? static_cast<double>(r.peers) : r.rate;
        if (static_cast<int>(r.op) != key.first || other != key.second) continue;
        pts.push_back({by_rate ? r.rate : static_cast<double>(r.peers), panel.value(r.metrics)});
      }
      std::sort(pts.begin(), pts.end());
      const char* colour = s.op == Op::Read ? "#1f77b4" : "#d62728";
      const char* dash = s.op == Op::Read ? "" : " stroke-dasharray=\"6 3\"";
      svg << "<polyline class=\"series\" data-op=\"" << op_name(s.op) << "\" data-label=\""
          << escape(s.label) << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\""
          << dash << " points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i)
        svg << (i ? " " : "") << num(sx(pts[i].first)) << ',' << num(sy(pts[i].second));
      svg << "\"/>\n";
      if (pi == 0) {
        double ly = bottom + 56 + static_cast<double>(k / 4) * 16;
        double lx = left + static_cast<double>(k % 4) * 130;
        svg << "<text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" fill=\"" << colour << "\">"
            << escape(s.label) << "</text>\n";
      }
      ++k;
    }
    svg << "</g>\n";
  }
  svg << "<text x=\"" << num(kMarginLeft) << "\" y=\"" << num(height - 10)
      << "\" font-size=\"10\">Simulated ticks mapped to ms; trends and orderings are meaningful, "
         "absolute values are not. CA delay in CertBaseline is a modelled band.</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cpsec::bench
